"""Parameter types and phase algebra for bivariate long-memory systems.

The phase ``gamma`` is the argument of the cross-spectrum of ``(u1, u2)`` as
the frequency tends to zero from above.  The functions here relate it to the
power-law tails of the cross-autocovariance (``kappa_plus``, ``kappa_minus``)
and to the tails of a bilateral moving-average representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import gamma as gamma_fn

__all__ = [
    "ThetaVector",
    "ThetaSpace",
    "OmegaMatrix",
    "PhaseKappa",
    "MaTailSpec",
    "phi_entry",
    "gamma_from_kappas",
    "kappas_from_phase",
    "kappas_from_ma_tails",
    "implied_farima_params",
    "frac_ma_coeffs",
]


@dataclass(frozen=True)
class ThetaVector:
    """Parameter vector ``(beta, gamma, delta1, delta2)``."""

    beta: float
    gamma: float
    delta1: float
    delta2: float

    def __post_init__(self):
        if not (-np.pi < self.gamma <= np.pi):
            raise ValueError(f"gamma must lie in (-pi, pi], got {self.gamma}")

    @property
    def nu(self) -> float:
        return self.delta2 - self.delta1

    def as_array(self) -> np.ndarray:
        return np.array([self.beta, self.gamma, self.delta1, self.delta2], dtype=float)

    @classmethod
    def from_array(cls, a) -> "ThetaVector":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


@dataclass(frozen=True)
class ThetaSpace:
    """Compact box for ``theta``.

    ``delta`` must satisfy ``-eta1 <= delta1 <= delta2 - eta2 <= 1/2 - eta2 - eta3``
    and ``gamma`` lies in ``[eta4 - pi/2, pi/2 - eta4]``.
    """

    eta1: float = 0.01
    eta2: float = 0.02
    eta3: float = 0.02
    eta4: float = 0.005
    beta_lo: float = -3.0
    beta_hi: float = 3.0

    def __post_init__(self):
        e1, e2, e3, e4 = self.eta1, self.eta2, self.eta3, self.eta4
        if min(e1, e2, e3, e4) <= 0:
            raise ValueError("eta1..eta4 must be positive")
        if not e1 < min(e2, e3):
            raise ValueError("need eta1 < min(eta2, eta3)")
        if not e2 + e3 < 0.5:
            raise ValueError("need eta2 + eta3 < 1/2")
        if not e4 < e3 - e1:
            raise ValueError("need eta4 < eta3 - eta1")
        if not self.beta_lo < self.beta_hi:
            raise ValueError("need beta_lo < beta_hi")

    @property
    def gamma_bounds(self) -> tuple[float, float]:
        return self.eta4 - np.pi / 2, np.pi / 2 - self.eta4

    @property
    def delta1_min(self) -> float:
        return -self.eta1

    @property
    def delta2_max(self) -> float:
        return 0.5 - self.eta3

    def contains(self, theta, tol: float = 0.0) -> bool:
        b, g, d1, d2 = np.asarray(
            theta.as_array() if isinstance(theta, ThetaVector) else theta, dtype=float
        )
        glo, ghi = self.gamma_bounds
        return bool(
            self.beta_lo - tol <= b <= self.beta_hi + tol
            and glo - tol <= g <= ghi + tol
            and d1 >= -self.eta1 - tol
            and d1 <= d2 - self.eta2 + tol
            and d2 <= self.delta2_max + tol
        )

    def project_delta(self, d1: float, d2: float) -> tuple[float, float]:
        """Euclidean projection of ``(d1, d2)`` onto the memory triangle."""
        lo, gap, hi = -self.eta1, self.eta2, self.delta2_max
        if d1 >= lo and d1 <= d2 - gap and d2 <= hi:
            return float(d1), float(d2)
        # vertices of the triangle
        verts = np.array([[lo, lo + gap], [lo, hi], [hi - gap, hi]])
        p = np.array([d1, d2], dtype=float)
        best, best_d = None, np.inf
        for i in range(3):
            a, b = verts[i], verts[(i + 1) % 3]
            ab = b - a
            t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
            q = a + t * ab
            dist = np.sum((p - q) ** 2)
            if dist < best_d:
                best, best_d = q, dist
        # guard against rounding pushing the point back outside
        q1 = max(best[0], lo)
        q2 = min(best[1], hi)
        q1 = min(q1, q2 - gap)
        return float(q1), float(q2)

    def project(self, theta) -> np.ndarray:
        b, g, d1, d2 = np.asarray(theta, dtype=float)
        glo, ghi = self.gamma_bounds
        d1, d2 = self.project_delta(d1, d2)
        return np.array(
            [np.clip(b, self.beta_lo, self.beta_hi), np.clip(g, glo, ghi), d1, d2]
        )

    def boundary_flags(self, theta, tol: float = 1e-7) -> tuple[bool, bool, bool, bool]:
        """Per-coordinate boundary contact of ``theta``."""
        b, g, d1, d2 = np.asarray(theta, dtype=float)
        glo, ghi = self.gamma_bounds
        on_gap = abs(d2 - self.eta2 - d1) <= tol
        return (
            bool(abs(b - self.beta_lo) <= tol or abs(b - self.beta_hi) <= tol),
            bool(abs(g - glo) <= tol or abs(g - ghi) <= tol),
            bool(abs(d1 + self.eta1) <= tol or on_gap),
            bool(abs(d2 - self.delta2_max) <= tol or on_gap),
        )


@dataclass(frozen=True)
class OmegaMatrix:
    """Symmetric 2x2 matrix with entries ``w11, w12, w22``."""

    w11: float
    w12: float
    w22: float

    @property
    def det(self) -> float:
        return self.w11 * self.w22 - self.w12**2

    @property
    def rho(self) -> float:
        return self.w12 / np.sqrt(self.w11 * self.w22)

    @property
    def is_positive_definite(self) -> bool:
        return self.w11 > 0 and self.w22 > 0 and self.det > 0

    def as_array(self) -> np.ndarray:
        return np.array([[self.w11, self.w12], [self.w12, self.w22]])

    @classmethod
    def from_array(cls, a) -> "OmegaMatrix":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0, 0]), float(0.5 * (a[0, 1] + a[1, 0])), float(a[1, 1]))

    def validate(self, require_coherent: bool = False) -> None:
        if not self.is_positive_definite:
            raise ValueError("Omega is not positive definite")
        if require_coherent and self.w12 == 0:
            raise ValueError("w12 = 0: phase is not identified")


@dataclass(frozen=True)
class PhaseKappa:
    """Tail weights of ``cov(u1_j, u2_0) ~ kappa_{sign j} |j|^(chi0 - 1)``."""

    kappa_plus: float
    kappa_minus: float
    chi0: float

    def __post_init__(self):
        if self.kappa_plus == 0 and self.kappa_minus == 0:
            raise ValueError("(kappa_plus, kappa_minus) must not both be zero")
        if not 0 < self.chi0 < 1:
            raise ValueError(f"chi0 must lie in (0, 1), got {self.chi0}")


@dataclass(frozen=True)
class MaTailSpec:
    """Tail weights of the rows of bilateral MA coefficients.

    Row ``k`` of ``C_j`` behaves like ``xi_plus_k |j|^(delta0k - 1)`` for
    ``j >= 0`` and ``xi_minus_k |j|^(delta0k - 1)`` for ``j < 0``.
    """

    xi_plus_1: np.ndarray
    xi_minus_1: np.ndarray
    xi_plus_2: np.ndarray
    xi_minus_2: np.ndarray
    delta0: tuple[float, float] = field(default=(0.1, 0.3))

    def __post_init__(self):
        vecs = [np.asarray(v, dtype=float) for v in
                (self.xi_plus_1, self.xi_minus_1, self.xi_plus_2, self.xi_minus_2)]
        p = vecs[0].shape
        if len(p) != 1 or p[0] < 2 or any(v.shape != p for v in vecs):
            raise ValueError("tail weights must be vectors of common length p >= 2")
        for name, v in zip(("xi_plus_1", "xi_minus_1", "xi_plus_2", "xi_minus_2"), vecs):
            object.__setattr__(self, name, v)
        d1, d2 = self.delta0
        if d1 <= 0 or d2 <= 0:
            raise ValueError("memory parameters must be strictly positive")
        if d1 + d2 >= 1:
            raise ValueError("need delta01 + delta02 < 1")

    @property
    def p(self) -> int:
        return self.xi_plus_1.shape[0]

    @property
    def chi0(self) -> float:
        return self.delta0[0] + self.delta0[1]


def phi_entry(lam: float, alpha, row: int) -> complex:
    """Diagonal entry of ``diag{|lam|^d1, |lam|^d2 exp(-i sign(lam) gamma)}``."""
    if lam == 0:
        raise ValueError("lambda = 0 is outside the domain")
    gamma, d1, d2 = alpha
    if row == 1:
        return complex(abs(lam) ** d1)
    if row == 2:
        return abs(lam) ** d2 * np.exp(-1j * np.sign(lam) * gamma)
    raise ValueError("row must be 1 or 2")


def gamma_from_kappas(pk: PhaseKappa) -> tuple[float, float]:
    """Phase and coherence ``(gamma0, omega12)`` implied by covariance tails."""
    kp, km, chi = pk.kappa_plus, pk.kappa_minus, pk.chi0
    t = np.tan(np.pi * chi / 2)
    s = kp + km
    if s == 0:
        # arctan of +-inf: take the limit
        g = np.sign(kp - km) * np.sign(t) * np.pi / 2
        # omega12 / cos(gamma) stays finite; the product (kp+km)/cos(g) has limit
        # (kp - km) tan(pi chi/2) / sin(g)
        w = (kp - km) * np.sin(np.pi * chi / 2) * gamma_fn(chi) / (2 * np.pi * np.sin(g))
        return float(g), float(w)
    g = np.arctan((kp - km) / s * t)
    w = s * gamma_fn(chi) * np.cos(np.pi * chi / 2) / (2 * np.pi * np.cos(g))
    return float(g), float(w)


def kappas_from_phase(omega12: float, chi0: float, gamma0: float) -> PhaseKappa:
    """Invert :func:`gamma_from_kappas`.

    ``kappa_pm = 2 pi omega12 sin(pi chi0 / 2 +- gamma0) / (Gamma(chi0) sin(pi chi0))``,
    which reduces to ``kappa_+ = 2 pi omega12 / Gamma(chi0)`` at ``gamma0 = pi chi0 / 2``.
    """
    if not 0 < chi0 < 1:
        raise ValueError("chi0 must lie in (0, 1)")
    if not -np.pi / 2 < gamma0 < np.pi / 2:
        raise ValueError("gamma0 must lie in (-pi/2, pi/2)")
    c = 2 * np.pi * omega12 / (gamma_fn(chi0) * np.sin(np.pi * chi0))
    a = np.pi * chi0 / 2
    return PhaseKappa(float(c * np.sin(a + gamma0)), float(c * np.sin(a - gamma0)), chi0)


def kappas_from_ma_tails(spec: MaTailSpec) -> PhaseKappa:
    """Cross-covariance tail weights of a bilateral power-law moving average.

    ``kappa_plus`` is the limit of ``j^(1-chi0) cov(u1_t, u2_{t+j})`` as
    ``j -> +inf`` and ``kappa_minus`` the limit as ``j -> -inf``.  With
    this orientation a causal moving average (``xi_minus = 0``) has
    ``gamma0 = (delta02 - delta01) pi / 2``, the phase the estimator
    recovers from fractional ARMA data.
    """
    d1, d2 = spec.delta0
    chi = d1 + d2
    p1, m1, p2, m2 = spec.xi_plus_1, spec.xi_minus_1, spec.xi_plus_2, spec.xi_minus_2
    kp = (p1 @ p2 * beta_fn(1 - chi, d1) + m1 @ p2 * beta_fn(d2, d1)
          + m1 @ m2 * beta_fn(1 - chi, d2))
    km = (p1 @ p2 * beta_fn(1 - chi, d2) + p1 @ m2 * beta_fn(d1, d2)
          + m1 @ m2 * beta_fn(1 - chi, d1))
    return PhaseKappa(float(kp), float(km), chi)


def implied_farima_params(spec) -> tuple[float, OmegaMatrix]:
    """True ``(gamma0, Omega0)`` of the one-sided fractional AR(1) system.

    ``spec`` is a :class:`mlwhittle.simulate.FarimaSpec`.  The short-memory
    part has spectral density ``|1 - a e^{i lam}|^{-2} R / (2 pi)``, so
    ``Omega0 = R / (2 pi (1 - a)^2)``.
    """
    a1 = 1.0 - spec.ar_coeff
    if a1 == 0:
        raise ValueError("AR polynomial has a unit root")
    d1, d2 = spec.delta0
    r_half = np.asarray(spec.innov_cov_factor, dtype=float)
    R = r_half @ r_half.T
    omega = OmegaMatrix.from_array(R / (2 * np.pi * a1**2))
    return float((d2 - d1) * np.pi / 2), omega


def frac_ma_coeffs(delta: float, J: int) -> np.ndarray:
    """First ``J + 1`` coefficients of ``(1 - L)^(-delta)``."""
    j = np.arange(1, J + 1, dtype=float)
    c = np.empty(J + 1)
    c[0] = 1.0
    c[1:] = np.cumprod((j - 1 + delta) / j)
    return c
