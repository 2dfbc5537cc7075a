import json
import math
import pathlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlwhittle.inference import sigma_matrix
from mlwhittle.model import ThetaSpace, implied_farima_params
from mlwhittle.simulate import SystemSpec, mix_seed, paper_farima, simulate_system
from mlwhittle.spectra import periodogram
from mlwhittle.whittle import (
    EstimateOptions,
    EstimationError,
    ObjectiveContext,
    PsiKind,
    alpha_grid,
    bandwidth_preset,
    default_m,
    estimate,
    estimate_known_beta,
    hessian,
    objective_R,
    objective_surface,
    omega_hat,
    profile_beta,
    score,
)
from oracles import direct_omega, direct_R, fd_gradient, fd_jacobian

GOLDEN = json.loads((pathlib.Path(__file__).parent / "golden" / "toy_n8.json").read_text())


def _farima_z(seed, n=512, delta0=(0.1, 0.4), rho=0.5, beta0=1.0):
    return simulate_system(SystemSpec(paper_farima(delta0, rho), beta0, seed), n)


def _random_theta(rng):
    return np.array([rng.uniform(-2, 2), rng.uniform(-1.5, 1.5), rng.uniform(-0.01, 0.2),
                     rng.uniform(0.25, 0.45)])


# ---------------------------------------------------------------------------
# psi and bandwidths


@given(st.floats(1e-6, math.pi))
def test_psi_nu_properties(lam):
    v = PsiKind.NU(np.array([lam, -lam]))
    assert abs(v[0]) == pytest.approx(2 * abs(math.sin(lam / 2)), rel=1e-12)
    assert v[1] == pytest.approx(np.conj(v[0]), rel=1e-12)
    assert PsiKind.ABS(np.array([-lam]))[0] == lam


def test_bandwidths():
    assert default_m(512) == 64 and default_m(2048) == 161 and default_m(128) == 25
    assert [bandwidth_preset(128, r) for r in ("half", "one", "two")] == [13, 25, 51]
    assert [bandwidth_preset(512, r) for r in ("half", "one", "two")] == [32, 64, 128]
    assert [bandwidth_preset(2048, r) for r in ("half", "one", "two")] == [81, 161, 323]


# ---------------------------------------------------------------------------
# Omega and R


@pytest.mark.parametrize("kind", ["abs", "nu"])
def test_golden_omega_and_R(kind):
    ctx = ObjectiveContext.from_series(np.array(GOLDEN["z"]), GOLDEN["m"], PsiKind(kind))
    om = omega_hat(ctx, GOLDEN["theta"])
    np.testing.assert_allclose([om.w11, om.w12, om.w22], GOLDEN[f"omega_{kind}"], rtol=1e-12)
    assert objective_R(ctx, GOLDEN["theta"]) == pytest.approx(GOLDEN[f"R_{kind}"], rel=1e-12)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["abs", "nu"]))
def test_omega_matches_direct_loops(seed, kind):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((40, 2))
    theta = _random_theta(rng)
    ctx = ObjectiveContext.from_series(z, 12, PsiKind(kind))
    np.testing.assert_allclose(omega_hat(ctx, theta).as_array(), direct_omega(z, 12, theta, kind),
                               rtol=1e-10, atol=1e-13)
    assert objective_R(ctx, theta) == pytest.approx(direct_R(z, 12, theta, kind), rel=1e-10,
                                                    abs=1e-12)


def test_zero_theta_is_plain_periodogram_average():
    z = np.random.default_rng(1).standard_normal((64, 2))
    ctx = ObjectiveContext.from_series(z, 10)
    ref = periodogram(z, 10).I.mean(axis=0).real / (2 * np.pi)
    np.testing.assert_allclose(omega_hat(ctx, [0, 0, 0, 0]).as_array(), ref, rtol=1e-13)


def test_zero_memory_objective_is_log_det():
    z = np.random.default_rng(2).standard_normal((64, 2))
    ctx = ObjectiveContext.from_series(z, 10, PsiKind.NU)
    theta = [0.7, -0.4, 0.0, 0.0]
    assert objective_R(ctx, theta) == pytest.approx(math.log(omega_hat(ctx, theta).det), rel=1e-13)


def test_white_noise_omega_is_flat_spectrum():
    z = np.random.default_rng(3).standard_normal((4096, 2))
    om = omega_hat(ObjectiveContext.from_series(z, 64), [0, 0, 0, 0]).as_array()
    assert np.all(np.abs(om - np.eye(2) / (2 * np.pi)) < 5 * 64**-0.5 / (2 * np.pi))


def test_objective_mean_shift_invariant():
    z = _farima_z(4)
    theta = [1.0, 0.3, 0.1, 0.4]
    a = objective_R(ObjectiveContext.from_series(z, 30), theta)
    b = objective_R(ObjectiveContext.from_series(z + [5.0, -3.0], 30), theta)
    assert a == pytest.approx(b, rel=1e-9)


def test_nonpositive_det_is_infinite():
    t = np.arange(1, 65)
    x = np.cos(2 * np.pi * 3 * t / 64)
    z = np.column_stack([2 * x, x])
    ctx = ObjectiveContext.from_series(z, 10)
    assert objective_R(ctx, [2.0, 0.0, 0.1, 0.3]) == math.inf


# ---------------------------------------------------------------------------
# derivatives


@pytest.mark.parametrize("kind", ["abs", "nu"])
def test_score_and_hessian_match_finite_differences(kind):
    rng = np.random.default_rng(10 if kind == "abs" else 11)
    for k in range(10):
        n = int(rng.choice([128, 256, 512]))
        z = _farima_z(k, n, tuple(np.sort(rng.uniform(0, 0.45, 2))), rng.uniform(-0.8, 0.8),
                      rng.uniform(-2, 2))
        ctx = ObjectiveContext.from_series(z, default_m(n), PsiKind(kind))
        theta = _random_theta(rng)
        s = score(ctx, theta)
        np.testing.assert_allclose(s, fd_gradient(lambda t: objective_R(ctx, t), theta), rtol=1e-5)
        H = hessian(ctx, theta)
        np.testing.assert_allclose(H, fd_jacobian(lambda t: score(ctx, t), theta), rtol=1e-4)
        assert np.array_equal(H, H.T)


def test_score_memory_components_centered_on_white_noise():
    reps, n, m = 200, 512, 64
    draws = np.empty((reps, 2))
    for r in range(reps):
        z = np.random.default_rng(mix_seed(21, r)).standard_normal((n, 2))
        draws[r] = score(ObjectiveContext.from_series(z, m), [0, 0, 0, 0])[2:]
    se = draws.std(axis=0, ddof=1) / np.sqrt(reps)
    assert np.all(np.abs(draws.mean(axis=0)) < 3 * se)


# ---------------------------------------------------------------------------
# beta profile


def test_profile_matches_brute_force_grid():
    rng = np.random.default_rng(5)
    space = ThetaSpace()
    for k in range(20):
        z = _farima_z(100 + k, 256, beta0=rng.uniform(-1, 1))
        ctx = ObjectiveContext.from_series(z, 40, PsiKind.ABS if k % 2 else PsiKind.NU)
        alpha = [rng.uniform(-1.5, 1.5), rng.uniform(0, 0.2), rng.uniform(0.25, 0.45)]
        p = profile_beta(ctx, alpha, space)
        assert p.c2 > 0 and not p.degenerate
        # coarse scan then a 1e-6 grid around the coarse minimiser
        coarse = np.arange(space.beta_lo, space.beta_hi + 1e-9, 1e-3)
        Rc = [objective_R(ctx, np.r_[b, alpha]) for b in coarse]
        b0 = coarse[int(np.argmin(Rc))]
        fine = np.arange(b0 - 2e-3, b0 + 2e-3, 1e-6)
        Rf = [objective_R(ctx, np.r_[b, alpha]) for b in fine]
        assert abs(p.beta_star - fine[int(np.argmin(Rf))]) < 1e-5


def test_det_is_quadratic_in_beta():
    z = _farima_z(6, 256)
    ctx = ObjectiveContext.from_series(z, 40)
    alpha = [0.4, 0.05, 0.35]
    p = profile_beta(ctx, alpha)
    for b in (-2.0, 0.0, 0.3, 1.7):
        assert omega_hat(ctx, np.r_[b, alpha]).det == pytest.approx(
            p.c0 + p.c1 * b + p.c2 * b * b, rel=1e-10)


def test_profile_exact_cointegration():
    x = _farima_z(7, 256)[:, 1]
    z = np.column_stack([1.5 * x, x])
    ctx = ObjectiveContext.from_series(z, 40)
    for alpha in ([0.0, 0.1, 0.3], [1.0, -0.01, 0.45]):
        p = profile_beta(ctx, alpha)
        assert p.beta_star == pytest.approx(1.5, abs=1e-9)
        assert abs(p.c0 + p.c1 * p.beta_star + p.c2 * p.beta_star**2) <= 1e-10 * p.c0


def test_profile_symmetric_case_zero_beta():
    # y and x live on disjoint Fourier frequencies, so I_yx = 0 on the band
    t = np.arange(1, 129)
    z = np.column_stack([np.cos(2 * np.pi * 3 * t / 128), np.cos(2 * np.pi * 5 * t / 128)])
    ctx = ObjectiveContext.from_series(z, 10)
    assert np.abs(ctx.Iyx).max() < 1e-12
    p = profile_beta(ctx, [0.3, 0.1, 0.3])
    assert abs(p.beta_star) < 1e-9


def test_profile_is_minimal_on_stage_one_grid():
    z = _farima_z(8, 256)
    ctx = ObjectiveContext.from_series(z, 40)
    space = ThetaSpace()
    surf = objective_surface(ctx, space, n_gamma=9, delta_step=0.05)
    betas = np.arange(space.beta_lo, space.beta_hi + 1e-9, 1e-3)
    for row in surf[:: max(1, len(surf) // 60)]:
        alpha = row[:3]
        n0_11, n0_12, n0_22, n1_11, n1_12, n2_11 = ctx.beta_coefficients(alpha)
        w11 = n0_11 + betas * n1_11 + betas**2 * n2_11
        w12 = n0_12 + betas * n1_12
        R = np.log(w11 * n0_22 - w12**2) - 2 * (alpha[1] + alpha[2]) * ctx.Lbar
        assert row[4] <= R.min() + 1e-9
        assert row[4] == pytest.approx(objective_R(ctx, np.r_[row[3], alpha]), rel=1e-10, abs=1e-10)


def test_alpha_grid_respects_space():
    space = ThetaSpace()
    g = alpha_grid(space, 5, 0.05)
    assert len(np.unique(g[:, 0])) == 5
    for row in g:
        assert space.contains(np.r_[0.0, row], tol=1e-12)
    assert np.isclose(g[:, 2].max(), space.delta2_max)


# ---------------------------------------------------------------------------
# estimation


def test_estimate_basic_properties():
    z = _farima_z(9, 1024)
    res = estimate(z)
    assert res.m == default_m(1024) and res.n == 1024
    assert res.converged
    assert res.space.contains(res.theta_hat.as_array(), tol=1e-12)
    assert res.omega_hat.is_positive_definite
    assert res.R_min == pytest.approx(objective_R(ObjectiveContext.from_series(z, res.m),
                                                  res.theta_hat), rel=1e-12)
    free = ~np.array(res.boundary_hit)
    assert np.all(np.abs(res.score[free]) < 1e-6)


def test_estimate_mean_shift_invariance():
    z = _farima_z(10, 512)
    a = estimate(z, 64).theta_hat.as_array()
    b = estimate(z + [3.0, -7.0], 64).theta_hat.as_array()
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-11)


@pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
def test_estimate_scale_equivariance(c):
    z = _farima_z(11, 512)
    a = estimate(z, 64)
    b = estimate(c * z, 64)
    np.testing.assert_allclose(a.theta_hat.as_array(), b.theta_hat.as_array(), rtol=0, atol=1e-7)
    np.testing.assert_allclose(b.omega_hat.as_array(), c**2 * a.omega_hat.as_array(), rtol=1e-6)


def test_estimate_exact_collinearity():
    x = _farima_z(12, 512)[:, 1]
    res = estimate(np.column_stack([0.8 * x, x]), 64)
    assert res.degenerate
    assert res.theta_hat.beta == pytest.approx(0.8, abs=1e-9)
    assert res.boundary_hit[2]
    assert res.R_min == -math.inf


def test_estimate_errors():
    z = _farima_z(13, 128)
    with pytest.raises(ValueError):
        estimate(z[:20])
    with pytest.raises(ValueError):
        estimate(z, 100)
    bad = z.copy()
    bad[5, 1] = np.inf
    with pytest.raises(ValueError):
        estimate(bad)
    const = z.copy()
    const[:, 1] = 2.5
    with pytest.raises(EstimationError, match="degenerate periodogram"):
        estimate(const)
    with pytest.raises(EstimationError, match="degenerate periodogram"):
        estimate_known_beta(const, beta0=1.0)


@pytest.mark.parametrize("start", ["grid", "baselines", "local"])
@pytest.mark.parametrize("hess", ["analytic", "sigma"])
def test_estimate_options(start, hess):
    z = _farima_z(14, 1024, delta0=(0.1, 0.35))
    res = estimate(z, options=EstimateOptions(start=start, hessian=hess, max_iter=300))
    assert res.space.contains(res.theta_hat.as_array(), tol=1e-12)
    assert res.R_min <= objective_R(ObjectiveContext.from_series(z, res.m),
                                    res.grid_stage_argmin) + 1e-12


def test_known_beta_matches_pinned_estimate():
    z = _farima_z(15, 512)
    res = estimate_known_beta(z, 64, beta0=1.0)
    assert res.beta_known and res.theta_hat.beta == 1.0
    ctx = ObjectiveContext.from_series(z, 64)
    # the alpha-score vanishes where the constraints are slack
    free = ~np.array(res.boundary_hit[1:])
    assert np.all(np.abs(score(ctx, res.theta_hat)[1:][free]) < 1e-6)
    space = ThetaSpace(beta_lo=1.0 - 1e-12, beta_hi=1.0 + 1e-12)
    pinned = estimate(z, 64, space=space)
    np.testing.assert_allclose(pinned.theta_hat.as_array(), res.theta_hat.as_array(), atol=1e-7)


def test_objective_surface_rows():
    z = _farima_z(16, 256)
    ctx = ObjectiveContext.from_series(z, 40)
    surf = objective_surface(ctx, n_gamma=5, delta_step=0.1)
    assert surf.shape[1] == 5
    np.testing.assert_array_equal(surf[:, :3], alpha_grid(ThetaSpace(), 5, 0.1))


# ---------------------------------------------------------------------------
# Monte Carlo properties


@pytest.mark.slow
def test_rate_improves_with_bandwidth():
    spec = paper_farima((0.05, 0.45), 0.9)
    errs = {81: [], 161: []}
    for r in range(200):
        z = simulate_system(SystemSpec(spec, 1.0, mix_seed(1, r)), 2048)
        for m in errs:
            errs[m].append(abs(estimate(z, m).theta_hat.beta - 1.0))
    assert np.median(errs[161]) < np.median(errs[81])


@pytest.mark.slow
def test_known_beta_alpha_consistent_and_gamma_variance():
    spec = paper_farima((0.1, 0.3), 0.5)
    gamma0, omega0 = implied_farima_params(spec)
    n, m, reps = 32768, 512, 200
    alpha = np.empty((reps, 3))
    for r in range(reps):
        z = simulate_system(SystemSpec(spec, 1.0, mix_seed(5, r)), n)
        alpha[r] = estimate_known_beta(z, m, beta0=1.0).theta_hat.as_array()[1:]
    se = alpha.std(axis=0, ddof=1) / np.sqrt(reps)
    assert np.all(np.abs(alpha.mean(axis=0) - [gamma0, 0.1, 0.3]) < 3 * se)
    S = sigma_matrix(gamma0, 0.2, omega0).matrix
    target = np.linalg.inv(S[1:, 1:])[0, 0]
    v = alpha[:, 0].var(ddof=1) * m
    # Gaussian approximation to the sampling error of a variance
    assert abs(v - target) < 3 * v * math.sqrt(2 / (reps - 1))


@pytest.mark.slow
def test_omega_hat_consistent_for_omega0():
    spec = paper_farima((0.1, 0.3), 0.5)
    _, omega0 = implied_farima_params(spec)
    n, m, reps = 16384, 400, 200
    om = np.empty((reps, 3))
    for r in range(reps):
        z = simulate_system(SystemSpec(spec, 1.0, mix_seed(2, r)), n)
        o = estimate(z, m).omega_hat
        om[r] = o.w11, o.w12, o.w22
    se = om.std(axis=0, ddof=1) / np.sqrt(reps)
    assert np.all(np.abs(om.mean(axis=0) - [omega0.w11, omega0.w12, omega0.w22]) < 3 * se)
