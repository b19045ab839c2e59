import json

import pytest
from mpmath import mp, mpf

from hankelp3.errors import DomainError
from hankelp3.numkernel import PrecisionCtx, to_decimal
from hankelp3.weightmoments import WeightParams
from hankelp3.orthopoly import build_system, ortho_data
from hankelp3 import asymptotics as asy

CTX = PrecisionCtx(bits=256)

# log-derivative integral of the predicted ln D_n, evaluated segment by
# segment off the alpha=1, tol=1e-25 trajectory; cross-checked against
# 40-digit tanh-sinh quadrature of the integrand on split panels (the
# quadrature reproduces these up to its own 1e-25 lower cutoff)
INTEGRAL_FROZEN = [
    ("0.37", "-0.1691178168505441846580684"),
    ("1", "-0.4252795527358965086426334"),
    ("10", "-3.109233504791931740182406"),
]


@pytest.fixture(scope="module")
def sol1(piii_pool):
    return piii_pool.get("1")[0]


def test_lndn_integral_frozen_values(sol1):
    with mp.workprec(sol1.bits):
        for s_end, frozen in INTEGRAL_FROZEN:
            val = asy.lnDn_integral(sol1, mpf(s_end))
            assert abs(val - mpf(frozen)) < mpf("1e-24"), s_end


def test_lndn_integral_vs_live_quadrature(sol1):
    # independent in-suite check: direct quadrature of the integrand
    # over [1e-25, 1e-6, 1e-2, 1]; the missing (0, 1e-25) piece is
    # below 1e-25 because the integrand is bounded near 0
    with mp.workprec(sol1.bits):
        exact = asy.lnDn_integral(sol1, mpf(1))
    old_dps = mp.dps
    mp.dps = 40
    try:
        quad = mp.quad(
            lambda s: asy.lnDn_integrand(sol1, s),
            [mpf("1e-25"), mpf("1e-6"), mpf("1e-2"), mpf(1)],
        )
    finally:
        mp.dps = old_dps
    assert abs(quad - exact) < mpf("1e-20")


def test_integrand_origin_limit(sol1):
    # integrand -> -1/(2 alpha) as s -> 0
    with mp.workprec(sol1.bits):
        val = asy.lnDn_integrand(sol1, mpf("1e-30"))
        assert abs(val + mpf("0.5")) < mpf("1e-25")


def test_lndn_zero_matches_factorization():
    params = WeightParams(alpha="1.5", t="0")
    od = ortho_data(build_system(6, params, CTX))
    with mp.workprec(512):
        ref = asy.lnDn_zero(6, params)
        assert abs(od.lnD[6] - ref) < mpf("1e-60")


def test_prediction_field_consistency(sol1):
    # the predictor fields are algebraically locked together:
    # alpha_n - a_n = 2n + alpha + 1 and
    # beta_n + H_n + n a_n = n (n + alpha)
    n = 12
    with mp.workprec(sol1.bits):
        t = mpf("0.25")
        params = WeightParams(alpha="1", t="0.25")
        pred = asy.predict_leading_order(n, params, sol1)
        slack = mpf(2) ** (-sol1.bits + 40)
        assert abs(pred.alpha_n - pred.an - (2 * n + 1 + 1)) < slack
        assert abs(pred.beta_n + pred.Hn + n * pred.an - n * (n + 1)) < slack
        assert pred.s == 2 * n * t
        assert pred.Hn < 0


def test_predictor_rough_accuracy(sol1):
    # one mid-range point: the n^{-1} error scale at s = 2nt = 6
    n = 12
    params = WeightParams(alpha="1", t="0.25")
    fin = asy.finite_value("H_n", n, params, CTX)
    with mp.workprec(sol1.bits):
        pred = asy.predict_leading_order(n, params, sol1).Hn
        assert abs(fin - pred) / abs(fin) < mpf("0.05")


def test_finite_value_dispatch_and_validation():
    params = WeightParams(alpha="1", t="0.5")
    with pytest.raises(DomainError):
        asy.finite_value("nope", 4, params, CTX)
    v1 = asy.finite_value("beta_n", 4, params, CTX)
    od = ortho_data(build_system(5, params, CTX))
    assert v1 == od.beta_rec[4]


def test_convergence_order_validation(sol1):
    with pytest.raises(DomainError):
        asy.convergence_order("H_n", "1", [10, 20, 40], "fixed-s", sol1, CTX, s="1")
    with pytest.raises(DomainError):
        asy.convergence_order("H_n", "1", [10, 20, 15, 40], "fixed-s", sol1, CTX, s="1")
    with pytest.raises(DomainError):
        asy.convergence_order("H_n", "1", [10, 20, 40, 80], "fixed-s", sol1, CTX)
    with pytest.raises(DomainError):
        asy.convergence_order("H_n", "1", [10, 20, 40, 80], "sideways", sol1, CTX, s="1")


def test_transition_gaps_by_regime(sol1, piii_pool):
    # each closed form is probed in its own regime; the quantitative
    # bars depend on alpha (the resonant s^{1+alpha} term at small s,
    # the alpha s^{1/3} correction at large s), hence the two solutions
    n = 10
    sol05 = piii_pool.get("0.5")[0]
    with mp.workprec(sol1.bits):
        sctx = PrecisionCtx(bits=sol1.bits)
        p_small = WeightParams(alpha="1", t=to_decimal(mpf("1e-3") / (2 * n), sctx))
        rows = asy.transition_report(n, p_small, sol1)
        assert rows[0].rel_gap < mpf("1e-2")
        assert rows[1].rel_gap < mpf("1e-2")
    with mp.workprec(sol05.bits):
        sctx = PrecisionCtx(bits=sol05.bits)
        p_large = WeightParams(alpha="0.5", t=to_decimal(mpf("1e3") / (2 * n), sctx))
        rows = asy.transition_report(n, p_large, sol05)
        assert rows[2].rel_gap < mpf("1e-1")
        assert rows[3].rel_gap < mpf("1e-1")


def test_report_exports(sol1):
    rep = asy.convergence_order(
        "a_n", "1", [4, 6, 8, 12], "fixed-s", sol1, CTX, s="0.8"
    )
    csv = asy.error_report_csv([rep])
    lines = csv.strip().split("\n")
    assert lines[0] == "quantity,regime,n,t,s,finite_value,predicted,abs_err,rel_err"
    assert len(lines) == 5
    doc = json.loads(asy.error_report_summary([rep]))
    assert doc["reports"][0]["quantity"] == "a_n"
    assert doc["reports"][0]["n_values"] == [4, 6, 8, 12]
    assert isinstance(doc["reports"][0]["fitted_order"], float)
