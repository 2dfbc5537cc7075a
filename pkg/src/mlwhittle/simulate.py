"""Simulation of bivariate cointegrated long-memory systems.

Two recipes for ``u_t`` are provided: the one-sided fractional AR(1)

    diag{(1-L)^d1, (1-L)^d2} (1 - a L) u_t = R^{1/2} eps_t,

realised as a truncated moving average, and a bilateral power-law moving
average whose forward/backward tail weights fix the phase.  Observables are
then ``x_t = u2_t`` and ``y_t = u1_t + beta0 x_t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np
from scipy.signal import fftconvolve, lfilter
from scipy.special import zeta

from .model import MaTailSpec, frac_ma_coeffs

__all__ = [
    "FarimaSpec",
    "BilateralSpec",
    "SystemSpec",
    "paper_farima",
    "zeta_c0_rows",
    "simulate_u",
    "assemble_system",
    "apply_b0",
    "simulate_system",
    "mix_seed",
    "write_csv",
    "format_csv",
    "read_csv",
    "CsvFormatError",
]

MASK64 = (1 << 64) - 1

# (rng, shape) -> array of i.i.d. draws with zero mean and unit variance
Innovations = Callable[[np.random.Generator, tuple], np.ndarray]


def gaussian_innovations(rng: np.random.Generator, shape: tuple) -> np.ndarray:
    return rng.standard_normal(shape)


@dataclass(frozen=True)
class FarimaSpec:
    """One-sided fractional AR(1) recipe.

    ``truncation`` and ``burn_in`` default to ``n + 10000`` and ``truncation``.
    """

    delta0: tuple[float, float]
    ar_coeff: float = 0.5
    innov_cov_factor: np.ndarray = field(default_factory=lambda: np.eye(2))
    truncation: Optional[int] = None
    burn_in: Optional[int] = None

    def __post_init__(self):
        d1, d2 = self.delta0
        if not (0 <= d1 < 0.5 and 0 <= d2 < 0.5):
            raise ValueError("memory parameters must lie in [0, 1/2)")
        if abs(self.ar_coeff) >= 1:
            raise ValueError("|ar_coeff| must be < 1")
        r_half = np.asarray(self.innov_cov_factor, dtype=float)
        if r_half.shape != (2, 2):
            raise ValueError("innov_cov_factor must be 2x2")
        R = r_half @ r_half.T
        if np.linalg.eigvalsh(R)[0] <= 0:
            raise ValueError("innovation covariance is not positive definite")
        object.__setattr__(self, "innov_cov_factor", r_half)

    @property
    def innov_cov(self) -> np.ndarray:
        return self.innov_cov_factor @ self.innov_cov_factor.T

    def sizes(self, n: int) -> tuple[int, int]:
        J = self.truncation if self.truncation is not None else n + 10000
        burn = self.burn_in if self.burn_in is not None else J
        if J < n:
            raise ValueError("truncation must be at least n")
        if burn < J:
            raise ValueError("burn_in must be at least the truncation lag")
        return J, burn

    def ma_coeffs(self, J: int) -> np.ndarray:
        """(2, J+1) array of MA weights of each component."""
        return _farima_coeffs(tuple(self.delta0), float(self.ar_coeff), int(J))


@lru_cache(maxsize=32)
def _farima_coeffs(delta0: tuple, ar_coeff: float, J: int) -> np.ndarray:
    out = np.empty((2, J + 1))
    for i, d in enumerate(delta0):
        # (1 - a L)^{-1} applied to the fractional weights
        out[i] = lfilter([1.0], [1.0, -ar_coeff], frac_ma_coeffs(d, J))
    out.setflags(write=False)
    return out


def paper_farima(delta0, rho: float, ar_coeff: float = 0.5, **kw) -> FarimaSpec:
    """Fractional AR(1) with ``R = [[1, 2 rho], [2 rho, 4]]``."""
    R = np.array([[1.0, 2 * rho], [2 * rho, 4.0]])
    return FarimaSpec(tuple(delta0), ar_coeff, np.linalg.cholesky(R), **kw)


@dataclass(frozen=True)
class BilateralSpec:
    """Two-sided power-law moving average.

    Row ``k`` of ``C_j`` is ``xi_{+k} j^(d_k - 1)`` for ``j > 0`` and
    ``xi_{-k} |j|^(d_k - 1)`` for ``j < 0``; ``C_0`` rows default to ``xi_{+k}``.
    """

    tails: MaTailSpec
    truncation: int = 5000
    c0_row_1: Optional[np.ndarray] = None
    c0_row_2: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.truncation < 1:
            raise ValueError("truncation must be >= 1")

    def coeffs(self) -> np.ndarray:
        """(2J+1, 2, p) array with ``C_j`` stored at index ``j + J``."""
        t, J = self.tails, self.truncation
        j = np.arange(-J, J + 1)
        aj = np.abs(j).astype(float)
        aj[J] = 1.0
        C = np.empty((2 * J + 1, 2, t.p))
        for k, (plus, minus, d) in enumerate(
            ((t.xi_plus_1, t.xi_minus_1, t.delta0[0]), (t.xi_plus_2, t.xi_minus_2, t.delta0[1]))
        ):
            w = aj ** (d - 1)
            C[:, k, :] = np.where((j >= 0)[:, None], plus[None, :], minus[None, :]) * w[:, None]
        r1 = self.c0_row_1 if self.c0_row_1 is not None else t.xi_plus_1
        r2 = self.c0_row_2 if self.c0_row_2 is not None else t.xi_plus_2
        C[J, 0], C[J, 1] = r1, r2
        return C


def zeta_c0_rows(tails: MaTailSpec) -> tuple[np.ndarray, np.ndarray]:
    """``C_0`` rows that cancel the constant term of the tail sums.

    ``sum_{j>=1} j^(d-1) e^{ij lam} = Gamma(d) (-i lam)^(-d) + zeta(1-d) + O(lam)``,
    so ``C_0 = -(xi_+ + xi_-) zeta(1 - d)`` leaves ``C(lam)`` a pure power law
    up to ``O(lam)``.  With the default ``C_0 = xi_+`` the constant can nearly
    cancel the power law over the bandwidth and distort apparent memory.
    """
    rows = []
    for plus, minus, d in ((tails.xi_plus_1, tails.xi_minus_1, tails.delta0[0]),
                           (tails.xi_plus_2, tails.xi_minus_2, tails.delta0[1])):
        rows.append(-(plus + minus) * zeta(1.0 - d))
    return rows[0], rows[1]


@dataclass(frozen=True)
class SystemSpec:
    dgp: Union[FarimaSpec, BilateralSpec]
    beta0: float = 1.0
    seed: int = 0


def mix_seed(seed: int, index: int) -> int:
    """SplitMix64 finaliser applied to ``seed + (index + 1) * golden``."""
    z = (int(seed) + (int(index) + 1) * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _filter_valid(x: np.ndarray, h: np.ndarray, direct: bool) -> np.ndarray:
    if direct:
        return np.convolve(x, h, mode="valid")
    return fftconvolve(x, h, mode="valid")


def simulate_u(
    spec,
    n: int,
    seed: int,
    innovations: Innovations = gaussian_innovations,
    mean: Optional[np.ndarray] = None,
    direct: bool = False,
) -> np.ndarray:
    """Draw ``n`` observations of ``u_t`` as an ``(n, 2)`` array.

    ``mean`` adds a constant offset (used only to exercise invariance).
    ``direct=True`` replaces FFT convolution by ``np.convolve``.
    """
    if n < 16:
        raise ValueError("n must be at least 16")
    rng = np.random.default_rng(int(seed) & MASK64)
    if isinstance(spec, FarimaSpec):
        J, burn = spec.sizes(n)
        eps = innovations(rng, (burn + n, 2))
        eta = eps @ spec.innov_cov_factor.T
        coef = spec.ma_coeffs(J)
        u = np.empty((n, 2))
        for i in range(2):
            # valid output index k corresponds to time burn - J + k + J
            full = _filter_valid(eta[burn - J :, i], coef[i], direct)
            u[:, i] = full[:n]
    elif isinstance(spec, BilateralSpec):
        C = spec.coeffs()
        J, p = spec.truncation, spec.tails.p
        eps = innovations(rng, (n + 2 * J, p))
        u = np.zeros((n, 2))
        for k in range(2):
            for l in range(p):
                u[:, k] += _filter_valid(eps[:, l], C[:, k, l], direct)
    else:
        raise TypeError(f"unknown dgp type {type(spec).__name__}")
    if mean is not None:
        u = u + np.asarray(mean, dtype=float)
    return u


def assemble_system(u: np.ndarray, beta0: float) -> np.ndarray:
    """Invert ``B0 z_t = u_t``: returns columns ``(y, x)``."""
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("u contains non-finite values")
    z = np.empty_like(u)
    z[:, 1] = u[:, 1]
    z[:, 0] = u[:, 0] + beta0 * u[:, 1]
    return z


def apply_b0(z: np.ndarray, beta0: float) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.column_stack([z[:, 0] - beta0 * z[:, 1], z[:, 1]])


def simulate_system(system: SystemSpec, n: int, **kw) -> np.ndarray:
    return assemble_system(simulate_u(system.dgp, n, system.seed, **kw), system.beta0)


class CsvFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def format_csv(z: np.ndarray) -> str:
    """``y,x`` text with shortest round-trip float representations."""
    z = np.asarray(z, dtype=float)
    lines = ["y,x"] + [f"{y!r},{x!r}" for y, x in z.tolist()]
    return "\n".join(lines) + "\n"


def write_csv(path, z: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_csv(z))


def read_csv(source) -> np.ndarray:
    """Read a two-column ``y,x`` file or text stream, reporting the first malformed line."""
    if hasattr(source, "read"):
        return _parse_csv(source)
    with open(source, encoding="utf-8") as fh:
        return _parse_csv(fh)


def _parse_csv(fh) -> np.ndarray:
    rows = []
    header = fh.readline()
    if [h.strip() for h in header.strip().split(",")] != ["y", "x"]:
        raise CsvFormatError("expected header 'y,x'", 1)
    for lineno, line in enumerate(fh, start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise CsvFormatError(f"expected 2 fields, got {len(parts)}", lineno)
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise CsvFormatError(f"non-numeric value in {line!r}", lineno) from None
    if not rows:
        raise CsvFormatError("no data rows", 2)
    return np.array(rows)
