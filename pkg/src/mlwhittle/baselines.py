"""Closed-form and univariate estimators used as benchmarks and starting values."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .spectra import FourierGrid, PeriodogramSet, dft

__all__ = ["nbls_beta", "simple_gamma", "univariate_lw", "univariate_lw_objective"]


def nbls_beta(pset: PeriodogramSet, bandwidth: Optional[int] = None) -> float:
    """Narrow-band least squares: ``Re sum I_yx / sum I_xx`` over ``j = 1..m``.

    ``bandwidth`` restricts the sums to the first ``bandwidth`` frequencies.
    """
    k = pset.grid.m if bandwidth is None else int(bandwidth)
    if not 1 <= k <= pset.grid.m:
        raise ValueError(f"bandwidth must lie in [1, {pset.grid.m}]")
    den = float(pset.I_xx[:k].sum())
    if not den > 0:
        raise ValueError("sum of I_xx is zero (x is constant)")
    return float(pset.I_yx[:k].sum().real / den)


def simple_gamma(pset: PeriodogramSet, beta_tilde: float) -> float:
    """Phase of ``sum_j (I_yx - beta_tilde I_xx)`` as an estimate of ``gamma``.

    With ``I_yx = w_y conj(w_x) / n`` the residual cross-periodogram behaves
    like ``omega12 lambda^(-chi) exp(-i gamma)``, so the estimate is the
    arctangent of ``-Im / Re``, folded into ``(-pi/2, pi/2)``.

    Raises ``ValueError`` when the real part vanishes.  This always happens
    when ``beta_tilde`` is :func:`nbls_beta` over the same ``m`` frequencies,
    because that choice makes the real part zero by construction.
    """
    s = (pset.I_yx - beta_tilde * pset.I_xx).sum()
    scale = float(np.abs(pset.I_yx).sum() + abs(beta_tilde) * pset.I_xx.sum())
    if abs(s.real) <= 1e-10 * max(scale, 1e-300):
        raise ValueError(
            f"real part of the summed residual cross-periodogram is zero ({s.real:.3g}); "
            "phase orientation undefined (a narrow-band LS beta over the same band "
            "always produces this)"
        )
    return float(math.atan(-s.imag / s.real))


def univariate_lw_objective(I: np.ndarray, lam: np.ndarray, d) -> np.ndarray:
    """``log(mean lam^(2d) I) - 2 d mean log lam``, vectorised over ``d``."""
    d = np.asarray(d, dtype=float)
    loglam = np.log(lam)
    G = np.exp(2 * d[..., None] * loglam) @ I / len(I) if d.ndim else np.mean(lam ** (2 * d) * I)
    return np.log(G) - 2 * d * loglam.mean()


def univariate_lw(series, m: int, delta_range: tuple[float, float] = (-0.48, 0.49),
                  tol: float = 1e-8, n_coarse: int = 98) -> float:
    """Univariate local Whittle memory estimate.

    A coarse grid locates the bracket around the smallest value, then
    golden-section search refines it.
    """
    x = np.asarray(series, dtype=float)
    grid = FourierGrid(len(x), m)
    w = dft(x[:, None], m)[:, 0]
    I = np.abs(w) ** 2 / grid.n
    if not I.sum() > 0:
        raise ValueError("degenerate series: periodogram vanishes on the first m frequencies")
    lam = grid.lambdas
    lo, hi = delta_range
    d = np.linspace(lo, hi, n_coarse)
    f = univariate_lw_objective(I, lam, d)
    k = int(np.argmin(f))
    a, b = d[max(k - 1, 0)], d[min(k + 1, len(d) - 1)]
    obj = lambda t: float(univariate_lw_objective(I, lam, np.array(t)))
    invphi = (math.sqrt(5) - 1) / 2
    c, e = b - invphi * (b - a), a + invphi * (b - a)
    fc, fe = obj(c), obj(e)
    while b - a > tol:
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - invphi * (b - a)
            fc = obj(c)
        else:
            a, c, fc = c, e, fe
            e = a + invphi * (b - a)
            fe = obj(e)
    return 0.5 * (a + b)
