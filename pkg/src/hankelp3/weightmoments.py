"""The perturbed Laguerre weight and its power moments.

Weight: w(x) = x^alpha exp(-x - t/x) on (0, oo), alpha > 0, t >= 0.

For t > 0 every real-index moment converges (the t/x term kills any
power at the origin) and has the closed form

    mu_j = integral x^j w(x) dx = 2 t^{(j+alpha+1)/2} K_{j+alpha+1}(2 sqrt t),

with K_{-nu} = K_nu covering negative orders.  For t = 0 the weight is
classical Laguerre and mu_j = Gamma(j + alpha + 1), defined only for
j + alpha + 1 > 0; negative j is refused there because the t-derivative
algebra that needs negative indices only exists on the t > 0 branch:

    d^m mu_j / dt^m = (-1)^m mu_{j-m}.

The closed form is validated against quad_semiinf before anything else
trusts it; see the module tests.
"""

import json
from dataclasses import dataclass, field

from mpmath import mp, mpf, sqrt

from .errors import DomainError, IndexWindowError
from .numkernel import (
    PrecisionCtx,
    bessel_k,
    from_decimal,
    gamma,
    quad_semiinf,
    to_decimal,
)

__all__ = [
    "WeightParams",
    "MomentTable",
    "weight_eval",
    "moment",
    "moment_dt",
    "moment_oracle",
    "build_table",
]


@dataclass(frozen=True)
class WeightParams:
    """The pair (alpha, t).  alpha > 0 strictly; t >= 0, where t = 0 is
    the classical-Laguerre branch, never a limit of the Bessel form."""

    alpha: object
    t: object

    def __post_init__(self):
        a = mpf(self.alpha)
        t = mpf(self.t)
        if not a > 0:
            raise DomainError("alpha must be > 0")
        if t < 0:
            raise DomainError("t must be >= 0")

    @property
    def alpha_mp(self):
        return mpf(self.alpha)

    @property
    def t_mp(self):
        return mpf(self.t)


def weight_eval(x, params):
    """w(x) = x^alpha exp(-x - t/x); domain error for x <= 0."""
    x = mpf(x)
    if x <= 0:
        raise DomainError("weight_eval: x must be > 0")
    a, t = params.alpha_mp, params.t_mp
    return x ** a * mp.exp(-x - t / x)


def moment(j, params, ctx):
    """mu_j.  t > 0: Bessel closed form for any j >= jmin; t = 0: Gamma(j+alpha+1), j >= 0.

    Parameter strings are parsed at the working precision here, so two
    routes fed the same params see bit-identical alpha and t.
    """
    with mp.workprec(ctx.bits + ctx.guard_bits + 8):
        a, t = params.alpha_mp, params.t_mp
        if t == 0:
            if j < 0:
                raise DomainError("moment: negative index needs t > 0")
            return gamma(j + a + 1, ctx)
        nu = j + a + 1
        order = abs(nu)  # K_{-nu} = K_nu
        k = bessel_k(order, 2 * sqrt(t), ctx)
        return 2 * t ** (nu / 2) * k


def moment_oracle(j, params, ctx):
    """mu_j by double-exponential quadrature; shares no code with moment().

    The quadrature needs an absolute stopping target, which is scaled
    off the closed form's magnitude; the returned value itself comes
    only from the integral.  t = 0 with j < 0 is refused like moment().
    """
    with mp.workprec(ctx.bits + ctx.guard_bits + 8):
        if params.t_mp == 0 and j < 0:
            raise DomainError("moment_oracle: negative index needs t > 0")
        scale = abs(moment(j, params, ctx))
        tol = scale * mpf(2) ** (-ctx.bits + 4)

        def f(x):
            return x ** mpf(j) * weight_eval(x, params)

        return quad_semiinf(f, tol, ctx)


def moment_dt(j, m, params, ctx, jmin=-3):
    """m-th t-derivative of mu_j: equals (-1)^m mu_{j-m} for t > 0."""
    if m < 1:
        raise DomainError("moment_dt: m must be a positive integer")
    if params.t_mp == 0:
        raise DomainError("moment_dt: needs t > 0")
    if j - m < jmin:
        raise IndexWindowError(f"moment_dt: j - m = {j - m} below window floor {jmin}")
    sign = -1 if m % 2 else 1
    return sign * moment(j - m, params, ctx)


@dataclass
class MomentTable:
    """Moments mu_j over a window [jmin, jmax], jmin <= -3 when t > 0.

    Immutable by convention after build_table; values is j -> mpf.
    """

    params: WeightParams
    jmin: int
    jmax: int
    ctx: PrecisionCtx
    values: dict = field(default_factory=dict)

    def __getitem__(self, j):
        try:
            return self.values[j]
        except KeyError:
            raise IndexWindowError(f"moment index {j} outside [{self.jmin}, {self.jmax}]")

    def to_json(self):
        return json.dumps(
            {
                "alpha": str(self.params.alpha),
                "t": str(self.params.t),
                "bits": self.ctx.bits,
                "jmin": self.jmin,
                "jmax": self.jmax,
                "values": [to_decimal(self.values[j], self.ctx) for j in range(self.jmin, self.jmax + 1)],
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        ctx = PrecisionCtx(bits=d["bits"])
        params = WeightParams(alpha=d["alpha"], t=d["t"])
        vals = {}
        for off, s in enumerate(d["values"]):
            vals[d["jmin"] + off] = from_decimal(s, ctx)
        return cls(params=params, jmin=d["jmin"], jmax=d["jmax"], ctx=ctx, values=vals)


def build_table(params, jmax, ctx, jmin=-3):
    """Moment window for the Hankel engine.  t = 0 clamps jmin to 0."""
    if params.t_mp == 0:
        jmin = max(jmin, 0)
    elif jmin > -3:
        raise DomainError("build_table: jmin must be <= -3 for t > 0")
    vals = {}
    with mp.workprec(ctx.bits):
        for j in range(jmin, jmax + 1):
            # round the guard-bit result to ctx.bits so the table is
            # exactly what its decimal serialization says it is
            vals[j] = +moment(j, params, ctx)
    return MomentTable(params=params, jmin=jmin, jmax=jmax, ctx=ctx, values=vals)
