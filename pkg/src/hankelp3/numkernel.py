"""Precision contract, special functions, and the quadrature oracle.

Everything downstream runs on mpmath reals under an explicit
PrecisionCtx.  The three operations here are the trust anchors:

* gamma          -- classical-limit determinants and normalizations
* bessel_k       -- closed-form moments of the perturbed weight; high
                    orders reached by the stable forward recurrence
                    K_{nu+1}(x) = K_{nu-1}(x) + (2 nu / x) K_nu(x)
* quad_semiinf   -- an independent double-exponential (exp-sinh)
                    quadrature on (0, oo) used as the oracle that the
                    closed forms are validated against

The quadrature is written out directly rather than delegated, so the
oracle route shares no evaluation path with the closed forms it checks.
"""

from dataclasses import dataclass

from mpmath import mp, mpf, cosh, exp, pi, sinh

from .errors import DomainError, NonConvergenceError

__all__ = [
    "PrecisionCtx",
    "to_decimal",
    "from_decimal",
    "gamma",
    "bessel_k",
    "quad_semiinf",
]


@dataclass(frozen=True)
class PrecisionCtx:
    """Working mantissa precision in bits, plus guard bits for internals.

    bits >= 64.  The contract: recomputing any operation at 2x bits moves
    the result relatively by less than 2^(-bits + guard_bits).
    """

    bits: int
    guard_bits: int = 16

    def __post_init__(self):
        if self.bits < 64:
            raise DomainError("PrecisionCtx.bits must be >= 64")
        if self.guard_bits < 0:
            raise DomainError("PrecisionCtx.guard_bits must be >= 0")

    @property
    def dps(self):
        # decimal digits carried by serialization; 3 extra guarantee an
        # exact binary -> decimal -> binary round trip
        return int(self.bits * 0.30103) + 3


def to_decimal(x, ctx):
    """Serialize an mpmath real to a decimal string, round-trip exact at ctx.bits."""
    with mp.workprec(ctx.bits):
        return mp.nstr(mpf(x), ctx.dps, strip_zeros=False)


def from_decimal(s, ctx):
    with mp.workprec(ctx.bits):
        return mpf(s)


def gamma(x, ctx):
    """Gamma(x) for real x > 0."""
    with mp.workprec(ctx.bits + ctx.guard_bits + 8):
        x = mpf(x)
        if x <= 0:
            raise DomainError("gamma: argument must be > 0")
        return mp.gamma(x)


def bessel_k(nu, x, ctx):
    """Modified Bessel function K_nu(x), x > 0, nu >= 0.

    Orders below 2 are evaluated directly.  Higher orders are reached by
    the forward recurrence from the two base orders in [frac, frac+1);
    K grows with order, so the recurrence is stable upward.  Negative
    orders are the caller's business via K_{-nu} = K_nu.
    """
    with mp.workprec(ctx.bits + ctx.guard_bits + 8):
        nu = mpf(nu)
        x = mpf(x)
        if x <= 0:
            raise DomainError("bessel_k: x must be > 0")
        if nu < 0:
            raise DomainError("bessel_k: nu must be >= 0 (use K_{-nu} = K_nu)")
    steps = int(nu)  # ladder length down to the fractional base order
    if steps < 2:
        with mp.workprec(ctx.bits + ctx.guard_bits + 8):
            return mp.besselk(nu, x)
    frac = nu - steps
    # each ladder rung adds at most a couple of ulps; pad by the ladder length
    pad = ctx.guard_bits + 8 + max(8, steps.bit_length() + 4)
    with mp.workprec(ctx.bits + pad):
        k_lo = mp.besselk(frac, x)
        k_hi = mp.besselk(frac + 1, x)
        order = frac + 1
        for _ in range(steps - 1):
            k_lo, k_hi = k_hi, k_lo + (2 * order / x) * k_hi
            order += 1
        return k_hi


def quad_semiinf(f, tol, ctx, level_cap=12):
    """Integrate f over (0, oo) by exp-sinh double-exponential quadrature.

    Substitution x = exp((pi/2) sinh(u)) maps the half line to the real
    u-axis; for integrands with exponential decay at oo and at 0+ (or
    algebraic vanishing at 0+ faster than 1/x) the transformed summand
    decays double-exponentially, and halving the mesh roughly doubles
    the number of correct digits.

    tol is an absolute error target.  Raises NonConvergenceError if the
    refinement levels stop contracting before reaching it.
    """
    with mp.workprec(ctx.bits + ctx.guard_bits + 16):
        tol = mpf(tol)
        if tol <= 0:
            raise DomainError("quad_semiinf: tol must be > 0")
        c = pi / 2
        trunc = tol * mpf(2) ** (-12)

        def g(u):
            su = sinh(u)
            x = exp(c * su)
            if x == 0 or (not x < mp.inf):
                return mpf(0)
            fx = f(x)
            return fx * x * c * cosh(u)

        instant = trunc * mpf(10) ** (-60)

        def side_sum(h, start, stride):
            # walk outward from u = start in steps of stride*h until the
            # summand stays negligible; the double-exponential decay makes
            # a short consecutive-small run a safe stopping rule.  A term
            # 60 digits below the truncation floor ends the side at once:
            # one more node out can demand an exp() whose argument
            # reduction no longer fits in memory (e.g. exp(-cosh(x))
            # integrands), and nothing beyond such a term can matter.
            total = mpf(0)
            k = start
            small = 0
            while small < 4:
                term = g(k * h)
                total += term
                mag = abs(term)
                if mag < trunc:
                    small += 1
                    if mag < instant and abs(k * h) >= 2:
                        break
                else:
                    small = 0
                k += stride
                if abs(k) > 60 / h:
                    break  # sinh overflow territory; nothing left out there
            return total

        h = mpf(1)
        val = h * (g(mpf(0)) + side_sum(h, 1, 1) + side_sum(h, -1, -1))
        prev = None
        for _ in range(level_cap):
            h = h / 2
            # new nodes of this level are the odd multiples of h
            val = val / 2 + h * (side_sum(h, 1, 2) + side_sum(h, -1, -2))
            if prev is not None and abs(val - prev) < tol:
                return val
            prev = val
    raise NonConvergenceError(
        f"quad_semiinf: no contraction below {mp.nstr(tol, 5)} within {level_cap} levels"
    )
