"""Discrete Fourier transforms and 2x2 periodogram matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["FourierGrid", "PeriodogramSet", "dft", "periodogram"]


@dataclass(frozen=True)
class FourierGrid:
    n: int
    m: int

    def __post_init__(self):
        if not 1 <= self.m <= self.n // 2:
            raise ValueError(f"bandwidth m={self.m} must lie in [1, n/2] for n={self.n}")

    @property
    def lambdas(self) -> np.ndarray:
        return 2 * np.pi * np.arange(1, self.m + 1) / self.n

    @property
    def lambda_m(self) -> float:
        return 2 * np.pi * self.m / self.n


@dataclass(frozen=True)
class PeriodogramSet:
    """Periodogram matrices ``I[j-1] = I_z(lambda_j)``, ``j = 1..m``.

    ``w`` keeps the DFT vectors so that ``I[j] = outer(w[j], conj(w[j])) / n``.
    """

    grid: FourierGrid
    w: np.ndarray

    @property
    def I(self) -> np.ndarray:
        return np.einsum("ja,jb->jab", self.w, self.w.conj()) / self.grid.n

    @property
    def I_yy(self) -> np.ndarray:
        return np.abs(self.w[:, 0]) ** 2 / self.grid.n

    @property
    def I_xx(self) -> np.ndarray:
        return np.abs(self.w[:, 1]) ** 2 / self.grid.n

    @property
    def I_yx(self) -> np.ndarray:
        return self.w[:, 0] * self.w[:, 1].conj() / self.grid.n

    def to_rows(self):
        """Rows ``(j, lambda_j, Re Iyy, Re Iyx, Im Iyx, Re Ixx)`` for export."""
        lam = self.grid.lambdas
        Iyx = self.I_yx
        return [
            (j + 1, lam[j], self.I_yy[j], Iyx[j].real, Iyx[j].imag, self.I_xx[j])
            for j in range(self.grid.m)
        ]


def dft(z: np.ndarray, m: int) -> np.ndarray:
    """``w(lambda_j) = sum_t z_t exp(i t lambda_j)``, ``t = 1..n``, for ``j = 1..m``."""
    z = np.asarray(z, dtype=float)
    n = z.shape[0]
    # sum_{t=1}^n z_t e^{i t lam_j} = e^{i lam_j} * n * ifft(z)[j]
    w = n * np.fft.ifft(z, axis=0)[1 : m + 1]
    phase = np.exp(2j * np.pi * np.arange(1, m + 1) / n)
    return w * phase[:, None]


def periodogram(z, m: int, demean: bool = False) -> PeriodogramSet:
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[1] != 2:
        raise ValueError("z must be an (n, 2) array")
    if not np.all(np.isfinite(z)):
        raise ValueError("z contains non-finite values")
    grid = FourierGrid(z.shape[0], m)
    if demean:
        z = z - z.mean(axis=0)
    return PeriodogramSet(grid, dft(z, m))
