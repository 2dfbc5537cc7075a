"""Asymptotic covariance, Wald tests and related limit formulas."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from .model import OmegaMatrix, ThetaSpace, ThetaVector
from .spectra import FourierGrid
from .whittle import EstimationResult, PsiKind

__all__ = [
    "SCHEMA_VERSION",
    "HYPOTHESES",
    "SigmaAuditWarning",
    "SingularCovarianceError",
    "SigmaMatrix",
    "ScalingDelta",
    "WaldResult",
    "sigma_matrix",
    "estimate_covariance",
    "standard_errors",
    "confidence_intervals",
    "wald_test",
    "named_hypothesis",
    "chi2_sf",
    "plim_omega_misspec",
    "score_bias_misspec",
    "mean_clt_covariance",
    "result_record",
    "result_from_record",
    "dumps_record",
]

SCHEMA_VERSION = 1
PARAM_NAMES = ("beta", "gamma", "delta1", "delta2")


class SigmaAuditWarning(UserWarning):
    """Sigma failed its positive-definiteness audit."""


class SingularCovarianceError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class SigmaMatrix:
    matrix: np.ndarray
    gamma0: float
    nu0: float
    omega: OmegaMatrix
    form: str
    min_eigenvalue: float

    @property
    def positive_definite(self) -> bool:
        return self.min_eigenvalue > 0

    def audit(self) -> dict:
        """Eigen-structure summary for reporting."""
        w, V = np.linalg.eigh(self.matrix)
        return {
            "form": self.form,
            "rho": self.omega.rho,
            "eigenvalues": w.tolist(),
            "positive_definite": bool(w[0] > 0),
            "min_eigenvector": V[:, 0].tolist(),
        }


def sigma_matrix(gamma0: float, nu0: float, omega, form: str = "corrected",
                 audit: bool = True) -> SigmaMatrix:
    """Limit of the normalised Hessian at the truth.

    ``form="printed"`` reproduces the published entries verbatim.  The
    ``"corrected"`` form differs in two entries,

        sigma14 = -sigma13  (omega12/omega11 rather than omega22/omega11)
        sigma33 = sigma44 = 4 - sigma34,

    which is what the analytic Hessian converges to (see ``tests``).
    """
    if not 0 <= nu0 < 0.5:
        raise ValueError("nu0 must lie in [0, 1/2)")
    if not isinstance(omega, OmegaMatrix):
        omega = OmegaMatrix.from_array(omega)
    w11, w12, w22 = omega.w11, omega.w12, omega.w22
    rho = omega.rho
    if not abs(rho) < 1:
        raise ValueError("need |rho| < 1")
    mu = 1.0 / (1.0 - rho**2)
    cg, sg = math.cos(gamma0), math.sin(gamma0)
    s11 = 2 * mu * (1 / (1 - 2 * nu0) - cg**2 / (1 - nu0) ** 2) * w22 / w11
    s12 = -2 * mu / (1 - nu0) * sg * w12 / w11
    s13 = 2 * mu * nu0 / (1 - nu0) ** 2 * cg * w12 / w11
    s22 = 2 * mu * rho**2
    s34 = -s22
    if form == "printed":
        s14 = -2 * mu * nu0 / (1 - nu0) ** 2 * cg * w22 / w11
        s33 = 4 + s34
    elif form == "corrected":
        s14 = -s13
        s33 = 4 - s34
    else:
        raise ValueError(f"unknown form {form!r}")
    S = np.array([
        [s11, s12, s13, s14],
        [s12, s22, 0.0, 0.0],
        [s13, 0.0, s33, s34],
        [s14, 0.0, s34, s33],
    ])
    lam_min = float(np.linalg.eigvalsh(S)[0])
    if audit and lam_min <= 0:
        warnings.warn(
            f"Sigma ({form}) is not positive definite: smallest eigenvalue {lam_min:.6g}",
            SigmaAuditWarning,
            stacklevel=2,
        )
    return SigmaMatrix(S, float(gamma0), float(nu0), omega, form, lam_min)


@dataclass(frozen=True)
class ScalingDelta:
    """``diag(lambda_m^(-nu), 1, 1, 1)``."""

    nu: float
    lambda_m: float

    def __post_init__(self):
        if not self.lambda_m > 0:
            raise ValueError("lambda_m must be positive")

    @property
    def diag(self) -> np.ndarray:
        return np.array([self.lambda_m ** (-self.nu), 1.0, 1.0, 1.0])

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)

    @classmethod
    def estimated(cls, res: EstimationResult) -> "ScalingDelta":
        th = res.theta_hat
        return cls(th.delta2 - th.delta1, res.grid.lambda_m)


def _check_invertible(S: np.ndarray, what: str) -> None:
    w, V = np.linalg.eigh(S)
    if not w[0] > 1e-10 * max(abs(w[-1]), 1e-300):
        k = int(np.argmax(np.abs(V[:, 0])))
        direction = ", ".join(f"{p}={v:+.3f}" for p, v in zip(PARAM_NAMES, V[:, 0]))
        raise SingularCovarianceError(
            f"{what} is singular or indefinite (eigenvalue {w[0]:.3g}); "
            f"offending direction dominated by {PARAM_NAMES[k]} ({direction})"
        )


def estimate_covariance(res: EstimationResult, grid: Optional[FourierGrid] = None,
                        form: str = "corrected") -> np.ndarray:
    """Plug-in ``Var(theta_hat) = m^-1 D^-1 Sigma^-1 D^-1``."""
    grid = grid or res.grid
    th = res.theta_hat
    nu = th.delta2 - th.delta1
    if res.degenerate:
        raise SingularCovarianceError("estimate is degenerate (exactly collinear data)")
    if not res.omega_hat.is_positive_definite:
        raise SingularCovarianceError("Omega(theta_hat) is not positive definite")
    sig = sigma_matrix(th.gamma, nu, res.omega_hat, form=form, audit=False).matrix
    _check_invertible(sig, "Sigma_hat")
    d = ScalingDelta(nu, grid.lambda_m).diag
    V = np.linalg.inv(sig) / grid.m / np.outer(d, d)
    return 0.5 * (V + V.T)


def standard_errors(res: EstimationResult, **kw) -> np.ndarray:
    return np.sqrt(np.diag(estimate_covariance(res, **kw)))


def confidence_intervals(res: EstimationResult, level: float = 0.95, **kw) -> np.ndarray:
    """``(4, 2)`` array of Wald intervals."""
    from scipy.stats import norm

    z = norm.ppf(0.5 + level / 2)
    se = standard_errors(res, **kw)
    th = res.theta_hat.as_array()
    return np.column_stack([th - z * se, th + z * se])


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of chi-square via the regularised incomplete gamma function."""
    if x <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


@dataclass(frozen=True)
class WaldResult:
    statistic: float
    df: int
    p_value: float
    A: np.ndarray
    c: np.ndarray
    name: Optional[str] = None

    def rejects(self, level: float = 0.05) -> bool:
        return self.p_value < level

    def as_dict(self) -> dict:
        return {"name": self.name, "W": self.statistic, "df": self.df, "p": self.p_value}


def wald_test(res: EstimationResult, A, c=None, cov: Optional[np.ndarray] = None,
              name: Optional[str] = None, **kw) -> WaldResult:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    q = A.shape[0]
    c = np.zeros(q) if c is None else np.atleast_1d(np.asarray(c, dtype=float))
    if A.shape[1] != 4 or c.shape != (q,):
        raise ValueError("A must be q x 4 and c a q-vector")
    if np.linalg.matrix_rank(A) < q:
        raise ValueError("restriction matrix is rank deficient")
    V = estimate_covariance(res, **kw) if cov is None else cov
    r = A @ res.theta_hat.as_array() - c
    middle = A @ V @ A.T
    try:
        W = float(r @ np.linalg.solve(middle, r))
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError("A Var(theta) A' is singular") from exc
    W = max(W, 0.0)
    return WaldResult(W, q, chi2_sf(W, q), A, c, name)


HYPOTHESES = {
    "no-cointegration": ([1.0, 0.0, 0.0, 0.0], 0.0),
    "zero-phase": ([0.0, 1.0, 0.0, 0.0], 0.0),
    "purely-nondeterministic": ([0.0, 1.0, math.pi / 2, -math.pi / 2], 0.0),
    "weak-causality": ([0.0, 1.0, -math.pi / 2, -math.pi / 2], 0.0),
    "short-memory-error": ([0.0, 0.0, 1.0, 0.0], 0.0),
}


def named_hypothesis(name: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        row, c = HYPOTHESES[name]
    except KeyError:
        raise ValueError(
            f"unknown hypothesis {name!r}; choose from {sorted(HYPOTHESES)}"
        ) from None
    return np.array([row]), np.array([c])


def plim_omega_misspec(gamma_star: float, gamma0: float, omega) -> np.ndarray:
    """Probability limit of ``Omega(theta)`` with the phase fixed at ``gamma_star``."""
    if not isinstance(omega, OmegaMatrix):
        omega = OmegaMatrix.from_array(omega)
    off = omega.w12 * math.cos(gamma_star - gamma0)
    return np.array([[omega.w11, off], [off, omega.w22]])


def score_bias_misspec(gamma_star: float, gamma0: float, omega, nu0: float,
                       lambda_m: float) -> float:
    """Leading term of ``dR/dbeta`` at the truth when the phase is fixed wrongly.

    ``-(2 lambda_m^(-nu0) / (1 - nu0)) w12 w22 sin(g* - g0) sin(g*) / D`` with
    ``D = w11 w22 - w12^2 cos^2(g* - g0)``.  The sign is that of the
    analytic score; simulation confirms it.
    """
    if not isinstance(omega, OmegaMatrix):
        omega = OmegaMatrix.from_array(omega)
    w11, w12, w22 = omega.w11, omega.w12, omega.w22
    c = math.cos(gamma_star - gamma0)
    den = w11 * w22 - w12**2 * c**2
    if not den > 0:
        raise ValueError("denominator must be positive")
    num = w12 * w22 * math.sin(gamma_star - gamma0) * math.sin(gamma_star)
    return -2 * lambda_m ** (-nu0) / (1 - nu0) * num / den


@dataclass(frozen=True)
class MeanClt:
    covariance: np.ndarray
    exponents: tuple[float, float] = field(default=(0.5, 0.5))


def mean_clt_covariance(delta0, gamma0: float, omega) -> MeanClt:
    """Limit covariance of ``diag(n^(1/2-d1), n^(1/2-d2)) (zbar - E z)``."""
    if not isinstance(omega, OmegaMatrix):
        omega = OmegaMatrix.from_array(omega)
    W = omega.as_array()
    d = np.asarray(delta0, dtype=float)
    out = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            s = d[i] + d[j]
            if s >= 1:
                raise ValueError("need delta0i + delta0j < 1")
            cs = math.cos(math.pi * s / 2)
            out[i, j] = 2 * math.pi * W[i, j] * math.cos((i - j) * gamma0) / (
                gamma_fn(s + 2) * cs)
    return MeanClt(out, (0.5 - d[0], 0.5 - d[1]))


def result_record(res: EstimationResult, tests: Sequence[WaldResult] = (),
                  form: str = "corrected") -> dict:
    """JSON-ready summary of an estimate and its tests."""
    flags = {
        "converged": res.converged,
        "iterations": res.iterations,
        "boundary_hit": dict(zip(PARAM_NAMES, map(bool, res.boundary_hit))),
        "degenerate": res.degenerate,
        "profile_fallback": res.profile_fallback,
        "beta_known": res.beta_known,
    }
    try:
        se = standard_errors(res, form=form).tolist()
    except SingularCovarianceError as exc:
        se = [None] * 4
        flags["covariance_error"] = str(exc)
    om = res.omega_hat
    return {
        "schema_version": SCHEMA_VERSION,
        "n": res.n,
        "m": res.m,
        "psi": res.psi.value,
        "theta_hat": dict(zip(PARAM_NAMES, res.theta_hat.as_array().tolist())),
        "omega_hat": {"w11": om.w11, "w12": om.w12, "w22": om.w22},
        "R_min": res.R_min,
        "space": asdict(res.space),
        "se": dict(zip(PARAM_NAMES, se)),
        "tests": [t.as_dict() for t in tests],
        "flags": flags,
    }


def result_from_record(record: dict) -> EstimationResult:
    """Rebuild enough of an :class:`EstimationResult` to rerun inference on it."""
    try:
        if record.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {record.get('schema_version')!r}")
        th = ThetaVector(*(float(record["theta_hat"][p]) for p in PARAM_NAMES))
        om = OmegaMatrix(**{k: float(v) for k, v in record["omega_hat"].items()})
        flags = record.get("flags", {})
        space = ThetaSpace(**record["space"]) if "space" in record else ThetaSpace()
        return EstimationResult(
            theta_hat=th,
            omega_hat=om,
            R_min=float(record["R_min"]),
            converged=bool(flags.get("converged", True)),
            iterations=int(flags.get("iterations", 0)),
            boundary_hit=space.boundary_flags(th.as_array()),
            grid_stage_argmin=th,
            grid=FourierGrid(int(record["n"]), int(record["m"])),
            psi=PsiKind(record.get("psi", PsiKind.ABS.value)),
            space=space,
            degenerate=bool(flags.get("degenerate", False)),
            beta_known=bool(flags.get("beta_known", False)),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed estimation record: missing or invalid {exc}") from None


def dumps_record(record: dict, **kw) -> str:
    # repr-precision floats are json's default; keep NaN/inf out of the stream
    return json.dumps(record, allow_nan=True, **kw)
