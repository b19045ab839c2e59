"""Large-n predictors from the Painleve trajectory, and error-order fits.

At s = 2nt the trajectory data (r(s), r'(s)) drive leading-order
approximations of the recurrence quantities:

    a_n      ~ s r'(s) / (2n)
    H_n      ~ -(8 r(s) + 4 alpha^2 - 1) / 16
    alpha_n  ~ 2n + alpha + 1 + s r'(s) / (2n)
    beta_n   ~ n^2 + alpha n + (4 alpha^2 - 1 + 8 r(s) - 8 s r'(s)) / 16
    gamma_n  ~ gamma_n(0) (1 + (8 r(s) + 4 alpha^2 - 1) / (32 n))

and ln D_n picks up an integral on top of its t=0 value:

    ln D_n ~ ln D_n[0] + int_0^{2nt} (1 - 4 alpha^2 - 8 r(s)) / (16 s) ds.

Since 8 r(0) = 1 - 4 alpha^2 exactly, that integrand equals
-(r(s) - r(0))/(2s): analytic at 0 with limit -1/(2 alpha).  It is
integrated in closed form, against the seed series on the first
segment and against the dense-output step polynomial beyond (series
division by s_k + tau converges because steps satisfy h <= s/2).
"""

import json
from dataclasses import dataclass

from mpmath import mp, mpf

from .errors import DomainError
from .numkernel import PrecisionCtx, to_decimal
from .orthopoly import build_system, logdet_data, ortho_data
from .painleve import _DENSE_ORDER
from .painleve.series import seed_eval, seed_rint_over_s_integral
from .painleve.taylor import rseries, v_series
from .weightmoments import WeightParams

__all__ = [
    "Prediction",
    "ErrorReport",
    "TransitionRow",
    "predict_leading_order",
    "predict_lnDn",
    "lnDn_zero",
    "lnDn_integrand",
    "lnDn_integral",
    "finite_value",
    "convergence_order",
    "transition_report",
    "error_report_csv",
    "error_report_summary",
]

QUANTITIES = ("lnD_n", "H_n", "a_n", "alpha_n", "beta_n", "gamma_n")


@dataclass(frozen=True)
class Prediction:
    n: int
    params: object
    s: object
    lnDn: object
    Hn: object
    an: object
    alpha_n: object
    beta_n: object
    gamma_n: object
    source: object


def predict_leading_order(n, params, sol):
    """All six leading-order predictions at s = 2nt from one trajectory."""
    with mp.workprec(sol.bits):
        a = params.alpha_mp
        t = params.t_mp
        s = 2 * n * t
        v, _vp, r = sol.state(s)
        rp = v / s
        q = (8 * r + 4 * a * a - 1) / 16
        an = s * rp / (2 * n)
        beta_n = n * n + a * n + (4 * a * a - 1 + 8 * r - 8 * s * rp) / 16
        g0 = 1 / mp.sqrt(mp.factorial(n) * mp.gamma(n + 1 + a))
        return Prediction(
            n=n,
            params=params,
            s=s,
            lnDn=predict_lnDn(n, params, sol),
            Hn=-q,
            an=an,
            alpha_n=2 * n + a + 1 + an,
            beta_n=beta_n,
            gamma_n=g0 * (1 + q / (2 * n)),
            source=sol,
        )


def lnDn_zero(n, params):
    """ln of the t=0 determinant, (1/n!) prod_{j=1..n} j! Gamma(j+alpha)."""
    a = params.alpha_mp
    tot = -mp.loggamma(n + 1)
    for j in range(1, n + 1):
        tot += mp.loggamma(j + 1) + mp.loggamma(j + a)
    return tot


def lnDn_integrand(sol, s):
    """(1 - 4 alpha^2 - 8 r(s))/(16 s), in the cancellation-free form."""
    with mp.workprec(sol.bits):
        s = mpf(s)
        a = sol.alpha_mp
        if s <= sol.nodes[0][0]:
            _v, _vp, _w, _wp, ri = seed_eval(sol.seed.terms, a, s, sol.beta)
            return -ri / (2 * s)
        r0 = (1 - 4 * a * a) / 8
        _v, _vp, r = sol.state(s)
        return -(r - r0) / (2 * s)


def _step_integral(s_k, tau_b, P):
    """int_0^{tau_b} P(tau)/(s_k + tau) dtau by series division.

    The quotient g of P by (s_k + tau) obeys g_i = (p_i - g_{i-1})/s_k
    and beyond deg P decays geometrically; with h <= s/2 the integrated
    tail drops below working precision within a few hundred terms.
    """
    eps = mpf(2) ** (-mp.prec - 8)
    acc = mpf(0)
    g = mpf(0)
    powt = tau_b
    scale = mpf(0)
    i = 0
    while True:
        p_i = P[i] if i < len(P) else mpf(0)
        g = (p_i - g) / s_k
        term = g * powt / (i + 1)
        acc += term
        scale = max(scale, abs(term))
        if i >= len(P) and abs(term) <= eps * scale:
            break
        if i > len(P) + 4000:
            break
        powt *= tau_b
        i += 1
    return acc


def lnDn_integral(sol, s_end):
    """int_0^{s_end} (1 - 4 alpha^2 - 8 r(s))/(16 s) ds, segment-exact."""
    with mp.workprec(sol.bits):
        S = mpf(s_end)
        if not S > 0:
            raise DomainError("lnDn_integral: s_end must be > 0")
        if S > sol.s_max_mp * (1 + mpf("1e-12")):
            raise DomainError(f"lnDn_integral: s_end beyond computed range {sol.s_max}")
        a = sol.alpha_mp
        r0 = (1 - 4 * a * a) / 8
        s_first = sol.nodes[0][0]
        if S <= s_first:
            return -seed_rint_over_s_integral(sol.seed.terms, a, S, sol.beta) / 2
        tot = -seed_rint_over_s_integral(sol.seed.terms, a, s_first, sol.beta) / 2
        nodes = sol.nodes
        p = _DENSE_ORDER
        for k in range(len(nodes)):
            s_k, v_k, vp_k, r_k = nodes[k]
            if not s_k < S:
                break
            b = S if k + 1 >= len(nodes) else min(S, nodes[k + 1][0])
            tau_b = b - s_k
            if tau_b <= 0:
                continue
            V, *_ = v_series(a, s_k, v_k, vp_k, p)
            RS = rseries(V, s_k, p)
            P = list(RS)
            P[0] = r_k - r0
            tot += -_step_integral(s_k, tau_b, P) / 2
        return tot


def predict_lnDn(n, params, sol):
    with mp.workprec(sol.bits):
        t = params.t_mp
        if t == 0:
            return lnDn_zero(n, params)
        return lnDn_zero(n, params) + lnDn_integral(sol, 2 * n * t)


# --------------------------------------------------- finite-n truth

def finite_value(quantity, n, params, ctx):
    """The exact finite-n value of a predictor target, from the ladder."""
    if quantity == "lnD_n":
        return ortho_data(build_system(n, params, ctx)).lnD[n]
    if quantity == "H_n":
        return logdet_data(build_system(n, params, ctx), order=1).H
    if quantity == "a_n":
        return ortho_data(build_system(n + 2, params, ctx)).a[n]
    if quantity == "alpha_n":
        return ortho_data(build_system(n + 2, params, ctx)).alpha_rec[n]
    if quantity == "beta_n":
        return ortho_data(build_system(n + 1, params, ctx)).beta_rec[n]
    if quantity == "gamma_n":
        return ortho_data(build_system(n + 1, params, ctx)).gamma[n]
    raise DomainError(f"finite_value: unknown quantity {quantity!r}")


_PRED_FIELD = {
    "lnD_n": "lnDn",
    "H_n": "Hn",
    "a_n": "an",
    "alpha_n": "alpha_n",
    "beta_n": "beta_n",
    "gamma_n": "gamma_n",
}


@dataclass(frozen=True)
class ErrorReport:
    """Rows (n, t, s, finite, predicted, abs_err, rel_err) and a fit."""

    quantity: str
    regime: str
    rows: tuple
    fitted_order: float
    fit_residual: float


def _fit_order(ns, errs):
    # least squares of ln err against ln n; returns (slope, rms residual)
    xs = [mp.log(n) for n in ns]
    ys = [mp.log(e) for e in errs]
    m = len(xs)
    xm = mp.fsum(xs) / m
    ym = mp.fsum(ys) / m
    sxx = mp.fsum((x - xm) ** 2 for x in xs)
    sxy = mp.fsum((x - xm) * (y - ym) for x, y in zip(xs, ys))
    slope = sxy / sxx
    icpt = ym - slope * xm
    res = mp.sqrt(mp.fsum((y - (icpt + slope * x)) ** 2 for x, y in zip(xs, ys)) / m)
    return float(slope), float(res)


def convergence_order(quantity, alpha, n_values, regime, sol, ctx, s=None, t=None):
    """Empirical error order of one predictor over a geometric n-grid.

    regime "fixed-s" pins s and takes t = s/(2n) per n; "fixed-t" pins
    t.  Needs at least 4 increasing n values for the log-log fit.
    """
    if quantity not in QUANTITIES:
        raise DomainError(f"convergence_order: unknown quantity {quantity!r}")
    n_values = list(n_values)
    if len(n_values) < 4:
        raise DomainError("convergence_order: need at least 4 n values")
    if any(b <= a2 for a2, b in zip(n_values, n_values[1:])):
        raise DomainError("convergence_order: n values must increase")
    if regime == "fixed-s":
        if s is None:
            raise DomainError("convergence_order: fixed-s regime needs s")
    elif regime == "fixed-t":
        if t is None:
            raise DomainError("convergence_order: fixed-t regime needs t")
    else:
        raise DomainError(f"convergence_order: unknown regime {regime!r}")

    rows = []
    with mp.workprec(sol.bits):
        for n in n_values:
            if regime == "fixed-s":
                t_n = mpf(str(s)) / (2 * n)
            else:
                t_n = mpf(str(t))
            params = WeightParams(
                alpha=str(alpha), t=to_decimal(t_n, PrecisionCtx(bits=sol.bits))
            )
            fin = finite_value(quantity, n, params, ctx)
            pred = getattr(
                predict_leading_order(n, params, sol), _PRED_FIELD[quantity]
            )
            ae = abs(fin - pred)
            re_ = ae / abs(fin) if fin != 0 else mp.inf
            rows.append((n, params.t_mp, 2 * n * params.t_mp, fin, pred, ae, re_))
        slope, res = _fit_order([r[0] for r in rows], [r[6] for r in rows])
    return ErrorReport(
        quantity=quantity,
        regime=regime,
        rows=tuple(rows),
        fitted_order=slope,
        fit_residual=res,
    )


# --------------------------------------------------- transition forms

@dataclass(frozen=True)
class TransitionRow:
    quantity: str
    regime: str
    closed: object
    full: object
    rel_gap: object


def transition_report(n, params, sol):
    """Closed small-s and large-s forms against the full predictor.

    All four rows are evaluated at s = 2nt; callers probe the small-s
    rows at small s and the large-s rows at large s.  rel_gap is
    measured against the full predictor.
    """
    with mp.workprec(sol.bits):
        a = params.alpha_mp
        t = params.t_mp
        s = 2 * n * t
        v, _vp, r = sol.state(s)
        rp = v / s
        two3 = mpf(2) / 3

        def gap(closed, full):
            return abs(closed - full) / abs(full)

        h_full = -(8 * r + 4 * a * a - 1) / 16
        h_small = -s / (2 * a)
        shift_full = s * rp / (2 * n)
        shift_small = s / (2 * a * n)
        h_large = -mpf(3) / 4 * (2 * t) ** two3 * n ** two3
        growth_full = (4 * a * a - 1 + 8 * r - 8 * s * rp) / 16
        growth_large = t ** two3 * n ** two3 / 2 ** (mpf(4) / 3)
        return (
            TransitionRow("H_n", "small-s", h_small, h_full, gap(h_small, h_full)),
            TransitionRow(
                "alpha_n_shift",
                "small-s",
                shift_small,
                shift_full,
                gap(shift_small, shift_full),
            ),
            TransitionRow("H_n", "large-s", h_large, h_full, gap(h_large, h_full)),
            TransitionRow(
                "beta_n_growth",
                "large-s",
                growth_large,
                growth_full,
                gap(growth_large, growth_full),
            ),
        )


# --------------------------------------------------- report export

def _num(x):
    return mp.nstr(x, 24)


def error_report_csv(reports):
    """Plot-ready CSV, one row per (report, n)."""
    lines = ["quantity,regime,n,t,s,finite_value,predicted,abs_err,rel_err"]
    for rep in reports:
        for (n, t, s, fin, pred, ae, re_) in rep.rows:
            lines.append(
                f"{rep.quantity},{rep.regime},{n},{_num(t)},{_num(s)},"
                f"{_num(fin)},{_num(pred)},{_num(ae)},{_num(re_)}"
            )
    return "\n".join(lines) + "\n"


def error_report_summary(reports):
    """JSON summary: fitted orders with fit residuals."""
    doc = {
        "reports": [
            {
                "quantity": r.quantity,
                "regime": r.regime,
                "n_values": [row[0] for row in r.rows],
                "fitted_order": r.fitted_order,
                "fit_residual": r.fit_residual,
            }
            for r in reports
        ]
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
