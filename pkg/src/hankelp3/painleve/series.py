"""Local series data for the degenerate Painleve III transcendent.

The equation, in the v = s r'(s) variable,

    v'' = v'^2/v - v'/s + v^2/s^2 + alpha/s - 1/v

has polynomial form

    F(v) = s^2 (v v'' - v'^2) + s v v' - v^3 - alpha s v + s^2 = 0.

Small s.  A plain power series v = sum c_k s^k cannot hold the whole
local solution family: order-matching F = 0 term by term leaves one
free parameter, and for non-integer alpha it enters at the non-integer
exponent s^{1+alpha}.  The working model is the graded series

    v(s) = sum c_{(i,m,j)} beta^m s^{i + m alpha} ln^j s

with integer i >= 1, branch grade m >= 0, and log powers j that appear
only through resonance: the linearized response of the F-coefficient
at exponent e is proportional to (e-1)^2 - alpha^2, which vanishes at
e = 1 + alpha, so for integer alpha the slot at the resonant exponent
is promoted to the next log power instead.  The m = 0, i = 1 slot is
c_1 = 1/alpha and the m = 1, i = 1 slot is the branch normalization
(coefficient 1); everything else follows by grade order.  Coefficients
are beta-independent, so one seed serves every branch value.

Large s.  Substituting v = s^{2/3} g(x), x = s^{-1/3}, g = sum d_m x^m
gives a recurrence with d_0 = 1, d_1 = -alpha/3, d_2 = 0; the series
is divergent-asymptotic and is summed to its optimal truncation.  The
truncation logic must skip accidental zeros (d_2 always; every d_m
with m >= 2 when alpha = 1, where the series terminates), otherwise a
numerically-zero term is mistaken for the turning point and the tail
degenerates to two terms.
"""

from dataclasses import dataclass

from mpmath import mp, mpf

from ..errors import DomainError, NonConvergenceError

__all__ = [
    "SeriesSeed",
    "seed_series",
    "seed_build",
    "seed_eval",
    "seed_eval_full",
    "tail_coeffs",
    "tail_eval",
]


def _gmul(U, W, alpha_f, emax):
    """Product of graded dicts {(i, m, j): c}, truncated above emax."""
    R = {}
    for (i1, m1, j1), c1 in U.items():
        for (i2, m2, j2), c2 in W.items():
            i, m, j = i1 + i2, m1 + m2, j1 + j2
            if i + m * alpha_f > emax + 1e-9:
                continue
            k = (i, m, j)
            R[k] = R.get(k, mpf(0)) + c1 * c2
    return R


def _gdiff(U, alpha):
    # s^e ln^j -> e s^{e-1} ln^j + j s^{e-1} ln^{j-1}
    R = {}
    for (i, m, j), c in U.items():
        e = i + m * alpha
        k1 = (i - 1, m, j)
        R[k1] = R.get(k1, mpf(0)) + e * c
        if j > 0:
            k2 = (i - 1, m, j - 1)
            R[k2] = R.get(k2, mpf(0)) + j * c
    return R


def _gshift(U, di):
    return {(i + di, m, j): c for (i, m, j), c in U.items()}


def _gadd(*dicts):
    R = {}
    for D in dicts:
        for k, c in D.items():
            R[k] = R.get(k, mpf(0)) + c
    return R


def _F_graded(V, alpha, emax):
    alpha_f = float(alpha)
    Vp = _gdiff(V, alpha)
    Vpp = _gdiff(Vp, alpha)
    t1 = _gshift(_gmul(V, Vpp, alpha_f, emax), 2)
    t2 = _gshift(_gmul(Vp, Vp, alpha_f, emax), 2)
    t3 = _gshift(_gmul(V, Vp, alpha_f, emax), 1)
    V2 = _gmul(V, V, alpha_f, emax)
    t4 = _gmul(V2, V, alpha_f, emax)
    t5 = _gshift(V, 1)
    F = _gadd(
        t1,
        {k: -c for k, c in t2.items()},
        t3,
        {k: -c for k, c in t4.items()},
        {k: -alpha * c for k, c in t5.items()},
        {(2, 0, 0): mpf(1)},
    )
    drop = mpf(10) ** (-mp.dps + 6)
    return {k: c for k, c in F.items() if abs(c) > drop}


def seed_build(alpha, emax):
    """Solve F(v) = 0 on the graded exponent grid up to emax.

    Slots are visited in increasing exponent order; each is fixed by
    cancelling the matching F-coefficient through its linear response,
    with resonant (near-zero response) slots promoted one log power.
    """
    a = mpf(alpha)
    alpha_f = float(alpha)
    emax_f = float(emax)
    V = {(1, 0, 0): 1 / a, (1, 1, 0): mpf(1)}
    slots = []
    for m in range(0, int(emax_f / alpha_f) + 2):
        i = 1
        while i + m * alpha_f <= emax_f + 1e-9:
            if not (m == 0 and i == 1) and not (m == 1 and i == 1):
                slots.append((i, m))
            i += 1
    slots.sort(key=lambda km: (km[0] + km[1] * alpha_f, km[1]))
    drop = mpf(10) ** (-mp.dps + 10)

    def response(unk, key, ecut):
        F0 = _F_graded(V, a, ecut)
        V[unk] = V.get(unk, mpf(0)) + 1
        F1 = _F_graded(V, a, ecut)
        V[unk] -= 1
        if V[unk] == 0:
            del V[unk]
        return F1.get(key, mpf(0)) - F0.get(key, mpf(0))

    for (i, m) in slots:
        e = i + m * alpha_f
        ecut = e + 1.2
        for j in range(5, -1, -1):
            F0 = _F_graded(V, a, ecut)
            src = F0.get((i + 1, m, j), mpf(0))
            if abs(src) < drop:
                continue
            A = response((i, m, j), (i + 1, m, j), ecut)
            if abs(A) > mpf("1e-6"):
                V[(i, m, j)] = V.get((i, m, j), mpf(0)) - src / A
            else:
                A2 = response((i, m, j + 1), (i + 1, m, j), ecut)
                if abs(A2) < mpf("1e-6"):
                    raise NonConvergenceError(f"degenerate resonance at slot {(i, m, j)}")
                V[(i, m, j + 1)] = V.get((i, m, j + 1), mpf(0)) - src / A2
    return {k: c for k, c in V.items() if abs(c) > drop}


def seed_eval(terms, alpha, s, beta):
    """(v, v', w = dv/dbeta, w', rint) at s from the graded seed.

    rint is int_0^s v(u)/u du, computed term-exactly via

        I_j = s^e ln^j s / e - (j/e) I_{j-1}.
    """
    a = mpf(alpha)
    L = mp.log(s)
    v = vp = w = wp = ri = mpf(0)
    for (i, m, j), c in terms.items():
        e = i + m * a
        bm = beta ** m
        base = c * s ** e * L ** j
        dbase = c * (
            e * s ** (e - 1) * L ** j + (j * s ** (e - 1) * L ** (j - 1) if j else 0)
        )
        v += bm * base
        vp += bm * dbase
        if m >= 1:
            w += m * beta ** (m - 1) * base
            wp += m * beta ** (m - 1) * dbase
        I = s ** e / e
        for jj in range(1, j + 1):
            I = s ** e * L ** jj / e - jj * I / e
        ri += bm * c * I
    return v, vp, w, wp, ri


def seed_rint_over_s_integral(terms, alpha, s1, beta):
    """int_0^{s1} rint(s)/s ds with rint as in seed_eval, term-exact.

    Each I_j(e) expands over pure monomials,

        I_j(e)(s) = sum_{i<=j} (-1)^{j-i} (j!/i!) e^{i-j-1} s^e ln^i s,

    and integrating a monomial against ds/s is I_i(e)(s1) once more.
    """
    a = mpf(alpha)
    L = mp.log(s1)
    tot = mpf(0)
    for (i, m, j), c in terms.items():
        e = i + m * a
        cb = c * beta ** m
        fj = mp.factorial(j)
        part = mpf(0)
        for ii in range(j + 1):
            wcoef = (-1) ** (j - ii) * fj / mp.factorial(ii) * e ** (ii - j - 1)
            I = s1 ** e / e
            for jj in range(1, ii + 1):
                I = s1 ** e * L ** jj / e - jj * I / e
            part += wcoef * I
        tot += cb * part
    return tot


def seed_eval_full(terms, alpha, s, beta):
    """(v, v', v'') at s; used for residual and trust-radius checks."""
    a = mpf(alpha)
    L = mp.log(s)
    v = vp = vpp = mpf(0)
    for (i, m, j), c in terms.items():
        e = i + m * a
        cb = c * beta ** m
        se = s ** e
        v += cb * se * L ** j
        d1 = e * L ** j + (j * L ** (j - 1) if j else 0)
        vp += cb * se / s * d1
        d2 = e * (e - 1) * L ** j
        if j >= 1:
            d2 += j * (2 * e - 1) * L ** (j - 1)
        if j >= 2:
            d2 += j * (j - 1) * L ** (j - 2)
        vpp += cb * se / (s * s) * d2
    return v, vp, vpp


def _ode_residual_rel(terms, alpha, s, beta=mpf(0)):
    a = mpf(alpha)
    v, vp, vpp = seed_eval_full(terms, a, s, beta)
    rhs = vp * vp / v - vp / s + v * v / (s * s) + a / s - 1 / v
    scale = abs(vpp) + abs(a / s) + abs(1 / v)
    return abs(vpp - rhs) / scale


@dataclass(frozen=True)
class SeriesSeed:
    """Truncated local expansion of v at the origin.

    coeffs holds the branch-independent integer-exponent coefficients
    c_1..c_K (c_1 = 1/alpha); the full model in `terms` also carries
    the branch grades and log slots, which a plain c_k list cannot
    represent.  trust_radius is the largest s (capped at 0.1) where
    the truncated series leaves a relative equation residual below
    tol_ref/10.
    """

    alpha: object
    K: int
    terms: dict
    trust_radius: object
    tol_ref: object

    @property
    def coeffs(self):
        return [self.terms.get((k, 0, 0), mpf(0)) for k in range(1, self.K + 1)]


def seed_series(alpha, K, tol_ref="1e-25"):
    if K < 3:
        raise DomainError("seed_series: K must be >= 3")
    a = mpf(alpha)
    if not a > 0:
        raise DomainError("seed_series: alpha must be > 0")
    with mp.workprec(max(mp.prec, 300)):
        terms = seed_build(a, float(K))
        bar = mpf(tol_ref) / 10
        s = mpf("0.1")
        trust = None
        for _ in range(120):
            if _ode_residual_rel(terms, a, s) < bar:
                trust = s
                break
            s = s / mpf(10) ** mpf("0.25")
            if s < mpf("1e-9"):
                trust = s
                break
    return SeriesSeed(alpha=alpha, K=K, terms=terms, trust_radius=trust, tol_ref=tol_ref)


def tail_coeffs(alpha, K):
    """Coefficients d_0..d_K of the large-s expansion v = s^{2/3} sum d_m s^{-m/3}."""
    a = mpf(alpha)
    d = [mpf(1), -a / 3]

    def conv(u, vv, n):
        acc = mpf(0)
        for i in range(0, n + 1):
            if i < len(u) and n - i < len(vv):
                acc += u[i] * vv[n - i]
        return acc

    for m_ in range(2, K + 1):
        D = d + [mpf(0)]
        g3 = mpf(0)
        for i in range(0, m_ + 1):
            for l in range(0, m_ + 1 - i):
                k = m_ - i - l
                if i == m_ or l == m_ or k == m_:
                    continue
                if i < len(d) and l < len(d) and k < len(d):
                    g3 += d[i] * d[l] * d[k]
        g3 *= 9
        lin = 9 * a * d[m_ - 1]
        gp = [(k + 1) * D[k + 1] if k + 1 < len(D) else mpf(0) for k in range(len(D))]
        gpp = [
            (k + 1) * (k + 2) * D[k + 2] if k + 2 < len(D) else mpf(0)
            for k in range(len(D))
        ]
        t3 = -(conv(D, gp, m_ - 3)) if m_ >= 3 else mpf(0)
        t4 = (conv(gp, gp, m_ - 4) - conv(D, gpp, m_ - 4)) if m_ >= 4 else mpf(0)
        d.append(-(g3 + lin + t3 + t4) / 27)
    return d


def tail_eval(d, alpha, s):
    """(v, v', error_estimate, m_used) from the optimally truncated tail.

    Optimal truncation among terms genuinely present: accidental zeros
    (d_2 always; every d_m with m >= 2 at alpha = 1) are skipped, and
    the scan stops once terms have grown 100x past the running
    minimum, which marks the divergent turn.
    """
    x = s ** (-mpf(1) / 3)
    tm = [dm * x ** m_ for m_, dm in enumerate(d)]
    floor = x ** 2 * mpf("1e-45")
    best_m, best = None, None
    for m_ in range(2, len(tm)):
        t = abs(tm[m_])
        if t <= floor:
            continue
        if best is None or t < best:
            best_m, best = m_, t
        elif t > 100 * best:
            break
    if best_m is None:
        muse, est = len(tm), floor
    else:
        muse, est = best_m, abs(tm[best_m])
    g = sum(tm[:muse])
    gp = sum(m_ * d[m_] * x ** (m_ - 1) for m_ in range(1, muse))
    v = s ** (mpf(2) / 3) * g
    vp = (mpf(2) / 3) * s ** (-mpf(1) / 3) * g - (mpf(1) / 3) * s ** (-mpf(2) / 3) * gp
    return v, vp, est * s ** (mpf(2) / 3), muse
