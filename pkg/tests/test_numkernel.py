import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf

from hankelp3.errors import DomainError
from hankelp3.numkernel import (
    PrecisionCtx,
    bessel_k,
    from_decimal,
    gamma,
    quad_semiinf,
    to_decimal,
)


def test_ctx_validation():
    with pytest.raises(DomainError):
        PrecisionCtx(bits=32)
    with pytest.raises(DomainError):
        PrecisionCtx(bits=128, guard_bits=-1)
    assert PrecisionCtx(bits=64).bits == 64


@settings(max_examples=30, deadline=None, derandomize=True)
@given(
    mant=st.integers(min_value=1, max_value=2**80 - 1),
    exp=st.integers(min_value=-90, max_value=90),
    sign=st.sampled_from([1, -1]),
    bits=st.sampled_from([64, 128, 256, 521]),
)
def test_decimal_round_trip_exact(mant, exp, sign, bits):
    ctx = PrecisionCtx(bits=bits)
    with mp.workprec(bits):
        x = sign * mpf(mant) * mpf(2) ** exp
        assert from_decimal(to_decimal(x, ctx), ctx) == x


def test_gamma_half_squared_is_pi():
    ctx = PrecisionCtx(bits=256)
    with mp.workprec(256):
        assert abs(gamma("0.5", ctx) ** 2 - mp.pi) < mpf(2) ** -240


def test_gamma_domain():
    ctx = PrecisionCtx(bits=64)
    with pytest.raises(DomainError):
        gamma(0, ctx)
    with pytest.raises(DomainError):
        gamma("-1.5", ctx)


def test_bessel_k_ladder_matches_direct():
    # the >= 2 orders go through the forward recurrence; mpmath's own
    # besselk is the independent route for the same order
    ctx = PrecisionCtx(bits=320)
    with mp.workprec(400):
        for nu in ("7.5", "23", "40.25"):
            for x in ("0.3", "2", "11"):
                ours = bessel_k(mpf(nu), mpf(x), ctx)
                ref = mp.besselk(mpf(nu), mpf(x))
                assert abs(ours - ref) / abs(ref) < mpf(2) ** -300, (nu, x)


def test_bessel_k_domain():
    ctx = PrecisionCtx(bits=64)
    with pytest.raises(DomainError):
        bessel_k(1, 0, ctx)
    with pytest.raises(DomainError):
        bessel_k(-1, 2, ctx)


def test_quad_semiinf_exponential_moments():
    # integral of x^k e^{-x} = k!
    ctx = PrecisionCtx(bits=192)
    with mp.workprec(220):
        for k, fact in ((0, 1), (1, 1), (2, 2), (5, 120)):
            val = quad_semiinf(lambda x, k=k: x**k * mp.exp(-x), mpf("1e-50"), ctx)
            assert abs(val - fact) < mpf("1e-48"), k


def test_quad_semiinf_essential_singularity():
    # integrand vanishing like e^{-1/x} at 0+: integral of e^{-x-1/x}
    # equals 2 K_1(2); exercises the instant-stop rule near u -> -oo
    ctx = PrecisionCtx(bits=192)
    with mp.workprec(220):
        val = quad_semiinf(lambda x: mp.exp(-x - 1 / x), mpf("1e-40"), ctx)
        assert abs(val - 2 * mp.besselk(1, 2)) < mpf("1e-38")


def test_quad_semiinf_rejects_bad_tol():
    ctx = PrecisionCtx(bits=64)
    with pytest.raises(DomainError):
        quad_semiinf(lambda x: mp.exp(-x), 0, ctx)
