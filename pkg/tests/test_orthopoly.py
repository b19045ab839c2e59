import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf

from hankelp3.errors import DomainError, PrecisionExhaustedError
from hankelp3.numkernel import PrecisionCtx
from hankelp3.weightmoments import WeightParams
from hankelp3.orthopoly import (
    a_n_integral_check,
    an_ode_residual,
    build_system,
    internal_bits,
    leading_subsystem,
    logdet_data,
    logdet_ladder,
    ortho_data,
    sigma_form_residual,
)

CTX = PrecisionCtx(bits=256)

# ln det of the 3x3 (and 2x2) moment matrix at alpha=1.5, t=0.7, from
# quadrature moments and cofactor expansion at 512 bits (oracle first,
# then frozen; shares nothing with the LDL route)
LNDET3_FROZEN = "3.527157519651402989892759103878060550741"
LNDET2_FROZEN = "0.7288786232347834556522425546929770336993"


def test_internal_bits_policy():
    ctx = PrecisionCtx(bits=256)
    assert internal_bits(1, ctx) == 256 + 96
    assert internal_bits(40, ctx) == 128 + 480 + 96
    assert internal_bits(40, PrecisionCtx(bits=1024)) == 1024 + 96


def test_build_system_rejects_bad_n():
    with pytest.raises(DomainError):
        build_system(0, WeightParams(alpha="1", t="1"), CTX)


def test_classical_ladder():
    # t = 0, alpha = 1: everything is closed form
    sysb = build_system(11, WeightParams(alpha="1", t="0"), CTX)
    od = ortho_data(sysb)
    with mp.workprec(sysb.bits):
        assert abs(mp.e**od.lnD[2] - 2) < mpf("1e-30")
        for k in range(1, 10):
            assert abs(od.beta_rec[k] / (k * (k + 1)) - 1) < mpf("1e-25"), k
        for k in range(0, 10):
            assert abs(od.alpha_rec[k] - (2 * k + 2)) < mpf("1e-25"), k
            assert abs(od.a[k]) < mpf("1e-25"), k
        for n in range(0, 11):
            ref = 1 / mp.sqrt(mp.factorial(n) * mp.gamma(n + 2))
            assert abs(od.gamma[n] / ref - 1) < mpf("1e-25"), n


def test_lndet_product_formula_general_alpha():
    # t = 0 determinant vs the Gamma product, alpha = 1.5
    sysb = build_system(6, WeightParams(alpha="1.5", t="0"), CTX)
    od = ortho_data(sysb)
    with mp.workprec(sysb.bits):
        a = mpf("1.5")
        ref = -mp.loggamma(7) + mp.fsum(
            mp.loggamma(j + 1) + mp.loggamma(j + a) for j in range(1, 7)
        )
        assert abs(od.lnD[6] - ref) < mpf("1e-60")


def test_lndet_matches_quadrature_oracle():
    sysb = build_system(3, WeightParams(alpha="1.5", t="0.7"), CTX)
    od = ortho_data(sysb)
    with mp.workprec(sysb.bits):
        assert abs(od.lnD[3] - mpf(LNDET3_FROZEN)) < mpf("1e-35")
        assert abs(od.lnD[2] - mpf(LNDET2_FROZEN)) < mpf("1e-35")


def test_ladder_equals_direct_rebuild():
    # the sliced factorization must agree with a from-scratch build;
    # at this size both run at the same internal bits, so the moment
    # tables coincide and the agreement is exact
    params = WeightParams(alpha="0.8", t="0.6")
    ctx = PrecisionCtx(bits=512)
    sysb = build_system(12, params, ctx)
    lad = logdet_ladder(sysb, kmax=9, order=2)
    for k in (2, 5, 9):
        direct = logdet_data(build_system(k, params, ctx), order=2)
        assert lad[k].H == direct.H, k
        assert lad[k].H_prime == direct.H_prime, k
        assert lad[k].lnD_n == direct.lnD_n, k


def test_leading_subsystem_bounds():
    sysb = build_system(4, WeightParams(alpha="1", t="0.5"), CTX)
    assert leading_subsystem(sysb, 4) is sysb
    with pytest.raises(DomainError):
        leading_subsystem(sysb, 0)
    with pytest.raises(DomainError):
        leading_subsystem(sysb, 5)


def test_logdet_needs_positive_t():
    sysb = build_system(3, WeightParams(alpha="1", t="0"), CTX)
    with pytest.raises(DomainError):
        logdet_data(sysb)


def test_beta_cross_identity_spot():
    # beta_n = n(n+alpha) + t H_n' - H_n at one off-grid point
    params = WeightParams(alpha="1.3", t="0.9")
    ctx = PrecisionCtx(bits=320)
    n = 6
    sysb = build_system(n + 1, params, ctx)
    od = ortho_data(sysb)
    ld = logdet_ladder(sysb, kmax=n, order=2)[n]
    with mp.workprec(sysb.bits):
        a, t = params.alpha_mp, params.t_mp
        lhs = od.beta_rec[n]
        rhs = n * (n + a) + t * ld.H_prime - ld.H
        assert abs(lhs - rhs) / abs(lhs) < mpf(10) ** (-0.3 * 320)


def test_sigma_form_residual_spot():
    res = sigma_form_residual(5, WeightParams(alpha="2.5", t="1.0"), PrecisionCtx(bits=512))
    assert abs(res) < mpf(10) ** (-0.3 * 512)


def test_an_ode_residual_and_h_scaling():
    params = WeightParams(alpha="1", t="0.4")
    ctx = PrecisionCtx(bits=1024)
    r1 = an_ode_residual(5, params, ctx, "1e-8")
    r2 = an_ode_residual(5, params, ctx, "5e-9")
    assert r1 is not None and abs(r1) < mpf("1e-10")
    ratio = abs(r1) / abs(r2)
    assert 2.5 < ratio < 6, ratio


def test_an_dual_route():
    # recurrence-shift a_n against the weighted-integral route
    params = WeightParams(alpha="1.2", t="0.8")
    ctx = PrecisionCtx(bits=512)
    sysb = build_system(6, params, ctx)
    od = ortho_data(sysb)
    with mp.workprec(sysb.bits):
        for n in (1, 3):
            via_integral = a_n_integral_check(sysb, n)
            assert abs(od.a[n] - via_integral) / max(abs(od.a[n]), mpf(1)) < mpf("1e-100"), n


def test_an_ode_needs_room_for_h():
    with pytest.raises(DomainError):
        an_ode_residual(3, WeightParams(alpha="1", t="1e-9"), CTX, "1e-8")


@settings(max_examples=10, deadline=None, derandomize=True)
@given(
    n=st.integers(min_value=1, max_value=6),
    a_num=st.integers(min_value=20, max_value=300),
    t_num=st.integers(min_value=0, max_value=300),
)
def test_pivots_and_betas_positive(n, a_num, t_num):
    params = WeightParams(alpha=f"{a_num}e-2", t=f"{t_num}e-2")
    sysb = build_system(n, params, CTX)
    od = ortho_data(sysb)
    assert all(h > 0 for h in sysb.h)
    assert all(b > 0 for b in od.beta_rec.values())
    assert all(g > 0 for g in od.gamma)
