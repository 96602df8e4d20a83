import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_params
from crossmoment.baselines import (
    BootstrapConfig,
    TwfeDesign,
    cross_moment_wz,
    did_bias_predicted,
    did_closed_form,
    did_from_moments,
    inverse_variance_weights,
    ols_from_moments,
    ols_naive,
    twfe_design,
    twfe_regression,
    two_proxy,
    two_proxy_from_moments,
)
from crossmoment.errors import (
    DegenerateDenominator,
    InvalidInput,
    ProxyUnusable,
    SingularDesign,
)
from crossmoment.estimator import get_beta, population_beta
from crossmoment.moments import population_moments
from crossmoment.scm import sample_params, simulate


def pm(params, a, b):
    return population_moments(params, 1, 1, (a, b))


# --- DiD / TWFE ---------------------------------------------------------------------

def test_did_population_params_a(params_a):
    r = did_from_moments(pm(params_a, "y", "d"), pm(params_a, "z", "d"), pm(params_a, "d", "d"))
    assert r.beta_hat == pytest.approx(0.8)
    assert r.diagnostics["beta_1"] == 0.0
    assert r.diagnostics["beta_2"] == pytest.approx(0.4)


def test_did_unbiased_when_common_trend():
    p = make_params(alpha_z=0.5, gamma=0.5)
    r = did_from_moments(pm(p, "y", "d"), pm(p, "z", "d"), pm(p, "d", "d"))
    assert r.beta_hat == pytest.approx(1.0)
    assert did_bias_predicted(p) == 0.0


def test_did_bias_examples(params_a):
    assert did_bias_predicted(params_a) == pytest.approx(-0.2)
    assert did_bias_predicted(make_params(alpha_d=0.0)) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_did_bias_matches_population(seed):
    p = sample_params(seed)
    r = did_from_moments(pm(p, "y", "d"), pm(p, "z", "d"), pm(p, "d", "d"))
    assert r.beta_hat - p.beta == pytest.approx(did_bias_predicted(p), rel=1e-9, abs=1e-12)


def test_did_z_equal_y(rng):
    d, z = rng.standard_normal(100), rng.standard_normal(100)
    assert did_closed_form(d, z, z).beta_hat == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DegenerateDenominator):
        did_closed_form(np.ones(10), z[:10], z[:10])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.booleans())
def test_twfe_equals_closed_form(seed, shift):
    data = simulate(sample_params(seed), 300, seed)
    offset = 50.0 if shift else 0.0
    twfe = twfe_regression(twfe_design(data.z + offset, data.d - offset, data.y + 3 * offset))
    did = did_closed_form(data.d, data.z, data.y)
    assert abs(twfe.beta_hat - did.beta_hat) < 1e-8


def test_twfe_y_equal_z(rng):
    d, z = rng.standard_normal(50), rng.standard_normal(50)
    assert twfe_regression(twfe_design(z, d, z)).beta_hat == pytest.approx(0.0, abs=1e-10)


def test_twfe_binary_treatment_is_group_mean_did(rng):
    d = (rng.random(400) < 0.4).astype(float)
    z = rng.standard_normal(400) + d
    y = z + 2.5 * d + rng.standard_normal(400)
    t, c = d == 1, d == 0
    group = (y[t].mean() - z[t].mean()) - (y[c].mean() - z[c].mean())
    assert twfe_regression(twfe_design(z, d, y)).beta_hat == pytest.approx(group, rel=1e-10)


def test_twfe_with_covariates_and_singular(rng):
    n = 200
    d, z = rng.standard_normal(n), rng.standard_normal(n)
    x = rng.standard_normal((n, 2))
    y = 1.5 * d + z + x @ [0.3, -0.2] + 0.01 * rng.standard_normal(n)
    design = twfe_design(z, d, y, x=x, x_names=["a", "b"])
    r = twfe_regression(design)
    assert {"coef_a", "coef_b", "coef_DT", "condition_number"} <= r.diagnostics.keys()
    with pytest.raises(SingularDesign):
        twfe_regression(twfe_design(z, d, y, x=np.column_stack([d, d])))


def test_twfe_design_invariants(rng):
    d = rng.standard_normal(5)
    design = twfe_design(d, d, d)
    assert design.outcome.shape == (10,)
    bad = design.regressors.copy()
    bad[0, design.names.index("T")] = 1
    with pytest.raises(InvalidInput):
        TwfeDesign(design.outcome, bad, design.names, 5)
    with pytest.raises(InvalidInput):
        twfe_design(d, d, d[:4])


# --- OLS ----------------------------------------------------------------------------

def test_ols_population_params_a(params_a):
    p = params_a
    r = ols_from_moments(pm(p, "z", "z"), pm(p, "z", "d"), pm(p, "d", "d"), pm(p, "z", "y"), pm(p, "d", "y"))
    assert r.beta_hat == pytest.approx(7 / 6)


def test_ols_unconfounded():
    p = make_params(alpha_d=0.0, gamma=0.0, beta=1.7)
    r = ols_from_moments(pm(p, "z", "z"), pm(p, "z", "d"), pm(p, "d", "d"), pm(p, "z", "y"), pm(p, "d", "y"))
    assert r.beta_hat == pytest.approx(1.7)


def test_ols_singular(rng):
    d = rng.standard_normal(100)
    with pytest.raises(SingularDesign):
        ols_naive(d, d, d + 1)


# --- two proxies ---------------------------------------------------------------------

def test_two_proxy_population():
    p = make_params(alpha_w=1.0)
    r = two_proxy_from_moments(pm(p, "d", "w"), pm(p, "z", "w"), pm(p, "d", "y"), pm(p, "y", "z"),
                               pm(p, "d", "d"), pm(p, "d", "z"), 1.0, 1.0, tol=1e-10)
    assert pm(p, "d", "w") == pytest.approx(2.0)
    assert pm(p, "z", "w") == pytest.approx(1.0)
    assert r.diagnostics["ratio"] == pytest.approx(2.0)
    assert r.beta_hat == pytest.approx(1.0)


def test_two_proxy_degenerate():
    p = make_params(alpha_w=0.0)
    with pytest.raises(DegenerateDenominator):
        two_proxy_from_moments(pm(p, "d", "w"), pm(p, "z", "w"), pm(p, "d", "y"), pm(p, "y", "z"),
                               pm(p, "d", "d"), pm(p, "d", "z"), 1.0, 1.0, tol=1e-10)


def test_two_proxy_w_equal_z(rng):
    data = simulate(make_params(), 1000, 1)
    r = two_proxy(data.d, data.z, data.z, data.y)
    dc, zc = data.d - data.d.mean(), data.z - data.z.mean()
    assert r.diagnostics["ratio"] == pytest.approx(np.dot(dc, zc) / np.dot(zc, zc), rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_two_proxy_equals_cross_moment_at_population(seed):
    p = sample_params(seed, with_w=True)
    tp = two_proxy_from_moments(pm(p, "d", "w"), pm(p, "z", "w"), pm(p, "d", "y"), pm(p, "y", "z"),
                                pm(p, "d", "d"), pm(p, "d", "z"), 1.0, 1.0, tol=1e-12)
    assert tp.beta_hat == pytest.approx(population_beta(p).beta_hat, rel=1e-9)


# --- bootstrap combination -------------------------------------------------------------

def test_weights():
    assert inverse_variance_weights(1.0, 1.0) == (0.5, 0.5)
    w_w, w_z = inverse_variance_weights(math.inf, 2.0)
    assert (w_w, w_z) == (0.0, 1.0)
    w_w, w_z = inverse_variance_weights(3.0, 1.0)
    assert w_w == pytest.approx(0.25) and w_w + w_z == 1.0


@settings(max_examples=50)
@given(st.floats(0, 1e6), st.floats(0, 1e6))
def test_weights_nonnegative_sum_to_one(vw, vz):
    w_w, w_z = inverse_variance_weights(vw, vz)
    assert w_w >= 0 and w_z >= 0
    assert w_w + w_z == 1.0


def test_bootstrap_config_validation():
    with pytest.raises(InvalidInput):
        BootstrapConfig(resamples=1)
    with pytest.raises(InvalidInput):
        BootstrapConfig(resample_fraction=0)
    with pytest.raises(InvalidInput):
        BootstrapConfig(seed=-1)


def test_cross_moment_wz_prefers_less_noisy_proxy():
    p = sample_params(3, with_w=True)
    data = simulate(p, 100_000, 3)
    r = cross_moment_wz(data.d, data.z, data.w, data.y, BootstrapConfig(resamples=20, seed=1))
    diag = r.diagnostics
    assert diag["weight_z"] > diag["weight_w"]
    assert diag["weight_z"] + diag["weight_w"] == 1.0
    expected = diag["weight_w"] * diag["mean_w"] + diag["weight_z"] * diag["mean_z"]
    assert r.beta_hat == pytest.approx(expected)
    assert diag["point_z"] == pytest.approx(get_beta(data.d, data.z, data.y).beta_hat)


def test_cross_moment_wz_deterministic_and_threads():
    data = simulate(sample_params(5, with_w=True), 20_000, 5)
    cfg = BootstrapConfig(resamples=8, resample_fraction=0.5, seed=2)
    a = cross_moment_wz(data.d, data.z, data.w, data.y, cfg)
    b = cross_moment_wz(data.d, data.z, data.w, data.y, cfg, threads=4)
    assert a.beta_hat == b.beta_hat
    assert a.diagnostics == b.diagnostics


def test_cross_moment_wz_falls_back_to_z():
    gauss_w = make_params(alpha_w=1.0)
    data = simulate(gauss_w, 50_000, 2)
    rng = np.random.default_rng(0)
    w = rng.standard_normal(50_000)
    r = cross_moment_wz(data.d, data.z, w, data.y, BootstrapConfig(resamples=6, seed=0))
    assert r.diagnostics["fallback"] == "z_only"
    assert r.diagnostics["weight_z"] == 1.0
    assert r.beta_hat == pytest.approx(r.diagnostics["mean_z"])


def test_cross_moment_wz_both_fail():
    g = make_params(family="gaussian", alpha_w=1.0)
    data = simulate(g, 20_000, 2)
    with pytest.raises(ProxyUnusable) as info:
        cross_moment_wz(data.d, data.z, data.w, data.y, BootstrapConfig(resamples=4, seed=0))
    assert info.value.proxy == "both"


def test_cross_moment_wz_equal_variance_is_average(monkeypatch):
    import crossmoment.baselines as bl

    values = iter([[1.0, 3.0], [2.0, 4.0], [3.0, 5.0]])
    monkeypatch.setattr(bl, "_resample_estimates", lambda *a, **k: next(values))
    monkeypatch.setattr(bl, "get_beta", lambda *a, **k: type("R", (), {"beta_hat": 0.0})())
    x = np.arange(10.0)
    r = bl.cross_moment_wz(x, x, x, x, BootstrapConfig(resamples=3))
    assert r.diagnostics["var_z"] == r.diagnostics["var_w"]
    assert r.beta_hat == pytest.approx((2.0 + 4.0) / 2)


@pytest.mark.slow
def test_did_monte_carlo_bias_params_a(params_a):
    bias = []
    for seed in range(4):
        data = simulate(params_a, 1_000_000, 50 + seed)
        bias.append(did_closed_form(data.d, data.z, data.y).beta_hat - 1.0)
    assert np.mean(bias) == pytest.approx(-0.2, abs=0.01)
