"""Hankel systems, orthogonality data, and log-determinant derivatives.

The moment matrix M_{jk} = mu_{j+k} (j, k = 0..n-1) of a positive
measure is symmetric positive definite, so M = L D L^T with unit lower
L and positive pivots D = diag(h_0..h_{n-1}); the pivots are exactly
the squared norms of the monic orthogonal polynomials and

    ln D_n = sum_{j<n} ln h_j.

The rows of C = L^{-1} are the monic coefficient vectors, which gives
the recurrence coefficients without a separate Stieltjes pass:

    alpha_k = C[k][k-1] - C[k+1][k]     (subleading-coefficient shift)
    beta_k  = h_k / h_{k-1}

Because d/dt of the weight is -w/x, every t-derivative of a moment is
again a moment: d^m mu_j/dt^m = (-1)^m mu_{j-m}.  The t-derivatives of
ln det M are then exact trace expressions in shifted Hankel matrices,
no finite differences involved:

    L1 = tr(A),                         A = M^{-1} M'
    L2 = tr(M^{-1} M'') - tr(A^2)
    L3 = tr(M^{-1} M''') - 3 tr(M^{-1} M'' A) + 2 tr(A^3)

with (M^{(m)})_{jk} = (-1)^m mu_{j+k-m}, and

    H_n = t L1,   H_n' = L1 + t L2,   H_n'' = 2 L2 + t L3.

Hankel conditioning loses O(n) digits, so everything here runs at an
internal precision max(ctx.bits, 128 + 12 n) + 96, doubling on pivot
loss.
"""

from dataclasses import dataclass, field

from mpmath import mp, mpf

from .errors import DomainError, PivotLossError, PrecisionExhaustedError
from .numkernel import PrecisionCtx
from .weightmoments import MomentTable, WeightParams, build_table

__all__ = [
    "HankelSystem",
    "OrthoData",
    "LogDetData",
    "internal_bits",
    "build_system",
    "ortho_data",
    "logdet_data",
    "leading_subsystem",
    "logdet_ladder",
    "a_n_integral_check",
    "sigma_form_residual",
    "an_ode_residual",
]


def internal_bits(n, ctx):
    return max(ctx.bits, 128 + 12 * n) + 96


@dataclass
class HankelSystem:
    n: int
    params: WeightParams
    moments: MomentTable
    M: list
    L: list  # unit lower-triangular factor, row-major lists
    h: list  # pivots = squared norms h_0..h_{n-1}
    Cinv: list  # L^{-1}: monic coefficient rows
    bits: int  # internal precision the factorization ran at
    ctx: PrecisionCtx


def _ldl(M, n):
    """LDL^T of symmetric M; raises PivotLossError on pivot <= 0."""
    L = [[mpf(0)] * n for _ in range(n)]
    h = [mpf(0)] * n
    for i in range(n):
        for j in range(i + 1):
            s = M[i][j]
            for k in range(j):
                s -= L[i][k] * L[j][k] * h[k]
            if j == i:
                if not s > 0:
                    raise PivotLossError(f"pivot {i} non-positive at this precision")
                h[i] = s
                L[i][i] = mpf(1)
            else:
                L[i][j] = s / h[j]
    return L, h


def _unit_lower_inverse(L, n):
    C = [[mpf(0)] * n for _ in range(n)]
    for i in range(n):
        C[i][i] = mpf(1)
        for j in range(i - 1, -1, -1):
            s = mpf(0)
            for k in range(j, i):
                s -= L[i][k] * C[k][j]
            C[i][j] = s
    return C


def build_system(n, params, ctx, _attempts=4):
    """Factorized Hankel system of size n, with pivot-loss retry.

    The moment window is [-3, 2n] for t > 0 ([0, 2n] at t = 0), which
    covers the shifted matrices M', M'', M''' and the weighted-integral
    cross-check in addition to M itself.
    """
    if n < 1:
        raise DomainError("build_system: n must be >= 1")
    bits = internal_bits(n, ctx)
    last = None
    for _ in range(_attempts):
        ctx2 = PrecisionCtx(bits=bits, guard_bits=ctx.guard_bits)
        table = build_table(params, 2 * n, ctx2)
        with mp.workprec(bits):
            M = [[table[i + j] for j in range(n)] for i in range(n)]
            try:
                L, h = _ldl(M, n)
            except PivotLossError as e:
                last = e
                bits *= 2
                continue
            Cinv = _unit_lower_inverse(L, n)
        return HankelSystem(
            n=n, params=params, moments=table, M=M, L=L, h=h, Cinv=Cinv, bits=bits, ctx=ctx
        )
    raise PrecisionExhaustedError(f"build_system: pivot loss persists: {last}")


@dataclass
class OrthoData:
    """Per-degree data from one factorization.

    lnD[k] is ln D_k for k = 1..n (index 0 unused), h[k] and gamma[k]
    run over 0..n-1, alpha_rec over 0..n-2, beta_rec over 1..n-1, and
    a[k] = alpha_rec[k] - (2k + 1 + alpha).
    """

    n: int
    lnD: dict
    h: list
    gamma: list
    alpha_rec: list
    beta_rec: dict
    a: list


def ortho_data(sys):
    n = sys.n
    with mp.workprec(sys.bits):
        a = sys.params.alpha_mp
        lnD = {}
        acc = mpf(0)
        for k in range(n):
            acc += mp.ln(sys.h[k])
            lnD[k + 1] = acc
        gamma = [1 / mp.sqrt(hk) for hk in sys.h]
        alpha_rec = []
        for k in range(n - 1):
            c_kk1 = sys.Cinv[k][k - 1] if k >= 1 else mpf(0)
            alpha_rec.append(c_kk1 - sys.Cinv[k + 1][k])
        beta_rec = {k: sys.h[k] / sys.h[k - 1] for k in range(1, n)}
        shifted = [alpha_rec[k] - (2 * k + 1 + a) for k in range(n - 1)]
    return OrthoData(
        n=n, lnD=lnD, h=list(sys.h), gamma=gamma, alpha_rec=alpha_rec, beta_rec=beta_rec, a=shifted
    )


@dataclass
class LogDetData:
    n: int
    lnD_n: object
    L1: object
    L2: object
    L3: object
    H: object
    H_prime: object
    H_second: object


def leading_subsystem(sys, k):
    """Size-k view of a factorized system, no refactorization.

    Valid because the LDL factor of a leading principal minor is the
    leading block of the full factor (unit lower-triangular L, shared
    pivots), so every slice below is already the size-k factorization.
    """
    if not 1 <= k <= sys.n:
        raise DomainError(f"leading_subsystem: k = {k} outside [1, {sys.n}]")
    if k == sys.n:
        return sys
    return HankelSystem(
        n=k,
        params=sys.params,
        moments=sys.moments,
        M=[row[:k] for row in sys.M[:k]],
        L=[row[:k] for row in sys.L[:k]],
        h=sys.h[:k],
        Cinv=[row[:k] for row in sys.Cinv[:k]],
        bits=sys.bits,
        ctx=sys.ctx,
    )


def logdet_ladder(sys, kmax=None, order=2):
    """LogDetData for every size 1..kmax off one factorization."""
    kmax = sys.n if kmax is None else kmax
    if not 1 <= kmax <= sys.n:
        raise DomainError(f"logdet_ladder: kmax = {kmax} outside [1, {sys.n}]")
    return {k: logdet_data(leading_subsystem(sys, k), order=order) for k in range(1, kmax + 1)}


def _solve_ldl(L, h, n, b):
    """Solve (L diag(h) L^T) x = b."""
    y = list(b)
    for i in range(n):
        s = y[i]
        for k in range(i):
            s -= L[i][k] * y[k]
        y[i] = s
    for i in range(n):
        y[i] = y[i] / h[i]
    for i in range(n - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, n):
            s -= L[k][i] * y[k]
        y[i] = s
    return y


def _minv_times(sys, B):
    """Columns of M^{-1} B for a row-major square B."""
    n = sys.n
    cols = []
    for j in range(n):
        col = [B[i][j] for i in range(n)]
        cols.append(_solve_ldl(sys.L, sys.h, n, col))
    # return row-major
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def logdet_data(sys, order=3):
    """Exact t-derivatives of ln D_n up to the requested order (1..3)."""
    n = sys.n
    tab = sys.moments
    if sys.params.t_mp == 0:
        raise DomainError("logdet_data: needs t > 0 (negative moment indices)")
    with mp.workprec(sys.bits):
        t = sys.params.t_mp

        def shifted(m):
            sign = -1 if m % 2 else 1
            return [[sign * tab[i + j - m] for j in range(n)] for i in range(n)]

        A = _minv_times(sys, shifted(1))
        L1 = mp.fsum(A[i][i] for i in range(n))
        L2 = L3 = None
        if order >= 2:
            B2 = _minv_times(sys, shifted(2))
            trA2 = mp.fsum(A[i][j] * A[j][i] for i in range(n) for j in range(n))
            L2 = mp.fsum(B2[i][i] for i in range(n)) - trA2
        if order >= 3:
            B3 = _minv_times(sys, shifted(3))
            trB2A = mp.fsum(B2[i][j] * A[j][i] for i in range(n) for j in range(n))
            AA = [[mp.fsum(A[i][k] * A[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
            trA3 = mp.fsum(AA[i][j] * A[j][i] for i in range(n) for j in range(n))
            L3 = mp.fsum(B3[i][i] for i in range(n)) - 3 * trB2A + 2 * trA3
        lnD_n = mp.fsum(mp.ln(hk) for hk in sys.h)
        H = t * L1
        Hp = L1 + t * L2 if order >= 2 else None
        Hpp = 2 * L2 + t * L3 if order >= 3 else None
    return LogDetData(n=n, lnD_n=lnD_n, L1=L1, L2=L2, L3=L3, H=H, H_prime=Hp, H_second=Hpp)


def a_n_integral_check(sys, n=None):
    """The shifted recurrence coefficient by its weighted-integral route.

    a_n = t gamma_n^2 sum_{j,k} c_j c_k mu_{j+k-1} with c the monic
    coefficients of pi_n.  Needs sys.n >= n + 1; pairs with the
    ortho_data route a_n = alpha_n - (2n + 1 + alpha), which needs
    sys.n >= n + 2.
    """
    if n is None:
        n = sys.n - 2
    if n < 0 or n + 1 > sys.n:
        raise DomainError(f"a_n_integral_check: need system size >= {n + 1}")
    with mp.workprec(sys.bits):
        t = sys.params.t_mp
        if t == 0:
            return mpf(0)
        c = sys.Cinv[n][: n + 1]
        acc = mp.fsum(
            c[j] * c[k] * sys.moments[j + k - 1] for j in range(n + 1) for k in range(n + 1)
        )
        return t * acc / sys.h[n]


def sigma_form_residual(n, params, ctx):
    """Residual of the sigma-form identity, relative to its largest term.

    The identity ties (t H'')^2 to a quadratic expression in H and H';
    it is exact at every finite n, so the residual measures only the
    arithmetic working precision.
    """
    sys = build_system(n, params, ctx)
    ld = logdet_data(sys)
    with mp.workprec(sys.bits):
        a = params.alpha_mp
        t = params.t_mp
        H, Hp, Hpp = ld.H, ld.H_prime, ld.H_second
        t1 = (t * Hpp) ** 2
        t2 = (n - (2 * n + a) * Hp) ** 2
        t3 = 4 * (n * (n + a) + t * Hp - H) * Hp * (Hp - 1)
        scale = max(abs(t1), abs(t2), abs(t3))
        return (t1 - t2 + t3) / scale


def _a_n_at(n, params, t_value, ctx):
    p2 = WeightParams(alpha=params.alpha, t=t_value)
    sys = build_system(n + 2, p2, ctx)
    od = ortho_data(sys)
    return od.a[n]


def an_ode_residual(n, params, ctx, h_step):
    """Residual of the second-order ODE satisfied by a_n(t), by central
    differences of a_n over h_step.  Returns None (indeterminate) when
    |a_n| is below the near-zero threshold 10^(-bits/4): the equation
    divides by a_n and the identity check is meaningless there.
    """
    bits = internal_bits(n + 2, ctx)
    with mp.workprec(bits):
        a = params.alpha_mp
        t = params.t_mp
        h = mpf(h_step)
        if t - h <= 0:
            raise DomainError("an_ode_residual: need t - h_step > 0")
        am = _a_n_at(n, params, t - h, ctx)
        a0 = _a_n_at(n, params, t, ctx)
        ap = _a_n_at(n, params, t + h, ctx)
        if abs(a0) < mpf(10) ** (-ctx.bits / 4):
            return None
        d1 = (ap - am) / (2 * h)
        d2 = (ap - 2 * a0 + am) / (h * h)
        rhs = (
            d1 * d1 / a0
            - d1 / t
            + (2 * n + 1 + a) * a0 * a0 / (t * t)
            + a0 ** 3 / (t * t)
            + a / t
            - 1 / a0
        )
        return d2 - rhs
