import json
import math
import pathlib

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mlwhittle.baselines import nbls_beta, simple_gamma, univariate_lw, univariate_lw_objective
from mlwhittle.simulate import SystemSpec, mix_seed, paper_farima, simulate_system
from mlwhittle.spectra import periodogram
from mlwhittle.whittle import default_m

GOLDEN = json.loads((pathlib.Path(__file__).parent / "golden" / "toy_n8.json").read_text())


@pytest.fixture(scope="module")
def sample():
    return simulate_system(SystemSpec(paper_farima((0.1, 0.4), 0.5), 1.0, seed=5), 1024)


def test_golden_toy_series():
    p = periodogram(np.array(GOLDEN["z"]), GOLDEN["m"])
    assert nbls_beta(p) == pytest.approx(GOLDEN["nbls_beta"], rel=1e-12)
    assert nbls_beta(p, 2) == pytest.approx(GOLDEN["nbls_beta_2"], rel=1e-12)
    assert simple_gamma(p, GOLDEN["nbls_beta_2"]) == pytest.approx(GOLDEN["simple_gamma_2"], rel=1e-10)


def test_nbls_exact_cointegration(sample):
    x = sample[:, 1]
    assert nbls_beta(periodogram(np.column_stack([-1.75 * x, x]), 100)) == pytest.approx(-1.75, rel=1e-13)


def test_nbls_errors(sample):
    p = periodogram(np.column_stack([sample[:, 0], np.full(len(sample), 2.0)]), 50)
    with pytest.raises(ValueError, match="constant"):
        nbls_beta(p)
    with pytest.raises(ValueError):
        nbls_beta(periodogram(sample, 50), 51)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3))
def test_nbls_invariance_and_equivariance(sample, a, b, c):
    m = 60
    b0 = nbls_beta(periodogram(sample, m))
    assert nbls_beta(periodogram(sample + [a, b], m)) == pytest.approx(b0, rel=1e-9, abs=1e-12)
    scaled = sample * [c, 1.0]
    assert nbls_beta(periodogram(scaled, m)) == pytest.approx(c * b0, rel=1e-12)


def test_simple_gamma_real_cross_periodogram_gives_zero():
    # the residual y - x is in phase with x, so every I_yx - I_xx is real
    n, m = 64, 8
    t = np.arange(1, n + 1)
    c1, c2 = np.cos(2 * np.pi * t / n), np.cos(6 * np.pi * t / n)
    x = c1 + c2
    p = periodogram(np.column_stack([x + 0.5 * c1, x]), m)
    assert np.abs((p.I_yx - p.I_xx).imag).max() < 1e-12
    assert simple_gamma(p, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_simple_gamma_refuses_full_band_nbls(sample):
    p = periodogram(sample, 80)
    with pytest.raises(ValueError, match="orientation"):
        simple_gamma(p, nbls_beta(p))


@given(st.floats(0.01, 100.0))
def test_simple_gamma_scale_invariance(sample, c):
    p0 = periodogram(sample, 80)
    g0 = simple_gamma(p0, nbls_beta(p0, 9))
    p1 = periodogram(c * sample, 80)
    assert simple_gamma(p1, nbls_beta(p1, 9)) == pytest.approx(g0, rel=1e-9, abs=1e-12)


def test_univariate_lw_white_noise():
    x = np.random.default_rng(0).standard_normal(2048)
    m = 161
    assert abs(univariate_lw(x, m)) < 3 * math.sqrt(1 / (4 * m))


def test_univariate_lw_is_grid_argmin(sample):
    x = sample[:, 1]
    m = 100
    d = univariate_lw(x, m)
    p = periodogram(sample, m)
    grid = np.linspace(-0.48, 0.49, 20001)
    f = univariate_lw_objective(p.I_xx, p.grid.lambdas, grid)
    assert d == pytest.approx(grid[np.argmin(f)], abs=1e-4)
    assert float(univariate_lw_objective(p.I_xx, p.grid.lambdas, np.array(d))) <= f.min() + 1e-12


@given(st.floats(1e-3, 1e3))
def test_univariate_lw_scale_invariance(sample, c):
    x = sample[:, 1]
    assert univariate_lw(c * x, 100) == pytest.approx(univariate_lw(x, 100), abs=1e-7)


def test_univariate_lw_errors():
    with pytest.raises(ValueError, match="degenerate"):
        univariate_lw(np.ones(64), 10)
    with pytest.raises(ValueError):
        univariate_lw(np.zeros(64) + np.arange(64), 33)


@pytest.mark.slow
def test_nbls_scaled_bias_stabilizes():
    # (n/m)^nu (beta_tilde - beta0) settles near a nonzero constant when rho != 0
    spec, nu, reps = paper_farima((0.1, 0.3), 0.5), 0.2, 300
    means, ses = [], []
    for n in (4096, 16384):
        m = default_m(n)
        v = [(n / m) ** nu * (nbls_beta(periodogram(simulate_system(
            SystemSpec(spec, 1.0, mix_seed(21, r)), n), m)) - 1.0) for r in range(reps)]
        means.append(np.mean(v))
        ses.append(np.std(v, ddof=1) / math.sqrt(reps))
    assert all(mu > 10 * se for mu, se in zip(means, ses))
    assert abs(means[1] / means[0] - 1) < 0.10


@pytest.mark.slow
def test_simple_gamma_one_sided_farima():
    n, d1, d2, a, reps = 16384, 0.1, 0.3, 0.5, 300
    spec = paper_farima((d1, d2), 0.5, a)
    m = default_m(n)
    g = [simple_gamma(periodogram(simulate_system(SystemSpec(spec, 1.0, mix_seed(21, r)), n), m), 1.0)
         for r in range(reps)]
    # phase of the band-summed spectral cross density of (u1, u2)
    lam = 2 * np.pi * np.arange(1, m + 1) / n
    h = 1 - np.exp(1j * lam)
    S = np.sum(h ** (-d1) * np.conj(h ** (-d2)) / np.abs(1 - a * np.exp(1j * lam)) ** 2)
    target = math.atan(-S.imag / S.real)
    assert abs(target - (d2 - d1) * math.pi / 2) < 0.02
    assert abs(np.mean(g) - target) < 3 * np.std(g, ddof=1) / math.sqrt(reps)


@pytest.mark.slow
def test_univariate_lw_strong_memory():
    n, reps = 2048, 200
    # a long filter keeps the low-frequency power of d = 0.45 from being truncated away
    spec = paper_farima((0.1, 0.45), 0.5, 0.0, truncation=200 * n)
    d = [univariate_lw(simulate_system(SystemSpec(spec, 1.0, mix_seed(22, r)), n)[:, 1], 161)
         for r in range(reps)]
    assert abs(np.mean(d) - 0.45) < 3 * np.std(d, ddof=1) / math.sqrt(reps)
