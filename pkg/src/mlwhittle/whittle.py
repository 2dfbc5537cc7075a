"""Multiple local Whittle objective and its minimisation.

For ``theta = (beta, gamma, delta1, delta2)`` the concentrated objective is

    R(theta) = log det Omega(theta) - 2 (delta1 + delta2) mean_j log|psi(lambda_j)|

with ``Omega(theta) = Re mean_j Psi_j B I_j B' conj(Psi_j) / (2 pi)``.  The
``1/(2 pi)`` puts ``Omega`` on the scale of the spectral density (the
periodogram has mean ``2 pi f``); it shifts ``R`` by a constant only.  Writing
``log psi_j = L_j + i phi_j`` every entry of ``Omega`` has the form
``Re mean_j exp(k_j(alpha)) P_j(beta)`` with ``k_j`` affine in
``alpha = (gamma, delta1, delta2)`` and ``P_j`` at most quadratic in ``beta``.
This makes the score and Hessian exact and cheap, and ``det Omega`` a
quadratic in ``beta`` that can be minimised in closed form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import OmegaMatrix, ThetaSpace, ThetaVector
from .spectra import FourierGrid, PeriodogramSet, periodogram

__all__ = [
    "PsiKind",
    "ObjectiveContext",
    "EstimateOptions",
    "EstimationResult",
    "EstimationError",
    "default_m",
    "bandwidth_preset",
    "omega_hat",
    "objective_R",
    "profile_beta",
    "score",
    "hessian",
    "alpha_grid",
    "objective_surface",
    "estimate",
    "estimate_known_beta",
]


class EstimationError(RuntimeError):
    """Raised when no admissible point of the parameter space exists."""


class PsiKind(enum.Enum):
    ABS = "abs"
    NU = "nu"

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self is PsiKind.ABS:
            return np.abs(lam).astype(complex)
        return (1 - np.exp(1j * lam)) * np.exp(1j * np.sign(lam) * np.pi / 2)


def default_m(n: int) -> int:
    return int(math.floor(n ** (2 / 3) + 1e-9))


def bandwidth_preset(n: int, rule: str) -> int:
    """``half``, ``one`` or ``two`` times ``n^(2/3)``, rounded to the nearest integer."""
    factor = {"half": 0.5, "one": 1.0, "two": 2.0}[rule]
    return int(math.floor(factor * n ** (2 / 3) + 0.5))


class ObjectiveContext:
    """Per-frequency quantities shared by every evaluation of ``R``."""

    def __init__(self, pset: PeriodogramSet, psi: PsiKind = PsiKind.ABS):
        self.pset = pset
        self.psi = PsiKind(psi)
        lam = pset.grid.lambdas
        logpsi = np.log(self.psi(lam))
        self.L = logpsi.real
        self.phi = logpsi.imag
        self.Lbar = float(self.L.mean())
        # spectral-density scale: E I(lambda) ~ 2 pi f(lambda)
        self.Iyy = pset.I_yy / (2 * np.pi)
        self.Ixx = pset.I_xx / (2 * np.pi)
        self.Iyx = pset.I_yx / (2 * np.pi)
        if not np.all(np.isfinite(self.L)):
            raise ValueError("log psi is not finite on the grid")

    @classmethod
    def from_series(cls, z, m: int, psi: PsiKind = PsiKind.ABS) -> "ObjectiveContext":
        return cls(periodogram(z, m), psi)

    @property
    def grid(self) -> FourierGrid:
        return self.pset.grid

    @property
    def m(self) -> int:
        return self.pset.grid.m

    # --- building blocks -------------------------------------------------

    def weights(self, alpha):
        """Per-frequency weights for one or many ``alpha`` (leading axes broadcast)."""
        g, d1, d2 = (np.asarray(a, dtype=float)[..., None] for a in alpha)
        w11 = np.exp(2 * d1 * self.L)
        w22 = np.exp(2 * d2 * self.L)
        e12 = np.exp((d1 + d2) * self.L + 1j * (g + (d1 - d2) * self.phi))
        return w11, w22, e12

    def beta_coefficients(self, alpha):
        """``N0, N1, N2`` entries with ``Omega(beta) = N0 + beta N1 + beta^2 N2``.

        Returns ``(n0_11, n0_12, n0_22, n1_11, n1_12, n2_11)``.
        """
        w11, w22, e12 = self.weights(alpha)
        n0_11 = (w11 * self.Iyy).mean(-1)
        n1_11 = -2 * (w11 * self.Iyx.real).mean(-1)
        n2_11 = (w11 * self.Ixx).mean(-1)
        n0_12 = (e12 * self.Iyx).mean(-1).real
        n1_12 = -(e12 * self.Ixx).mean(-1).real
        n0_22 = (w22 * self.Ixx).mean(-1)
        return n0_11, n0_12, n0_22, n1_11, n1_12, n2_11

    def _terms(self, theta):
        """``(exp(k), grad k, P, P', P'')`` for the 11, 12 and 22 entries."""
        b, g, d1, d2 = theta
        w11, w22, e12 = self.weights((g, d1, d2))
        L, phi, zero = self.L, self.phi, np.zeros_like(self.L)
        c, a, yx = self.Ixx, self.Iyy, self.Iyx
        ell = L + 1j * phi
        terms = {
            (0, 0): (w11, (zero, 2 * L, zero), a - 2 * b * yx.real + b * b * c,
                     -2 * yx.real + 2 * b * c, 2 * c),
            (0, 1): (e12, (1j + zero, ell, ell.conj()), yx - b * c, -c, zero),
            (1, 1): (w22, (zero, zero, 2 * L), c, zero, zero),
        }
        return terms


def _as_theta(theta) -> np.ndarray:
    if isinstance(theta, ThetaVector):
        return theta.as_array()
    return np.asarray(theta, dtype=float)


def omega_hat(ctx: ObjectiveContext, theta) -> OmegaMatrix:
    return OmegaMatrix.from_array(_omega_array(ctx, _as_theta(theta)))


def _omega_array(ctx: ObjectiveContext, theta: np.ndarray) -> np.ndarray:
    b = theta[0]
    n0_11, n0_12, n0_22, n1_11, n1_12, n2_11 = ctx.beta_coefficients(theta[1:])
    w11 = n0_11 + b * n1_11 + b * b * n2_11
    w12 = n0_12 + b * n1_12
    return np.array([[w11, w12], [w12, n0_22]])


def objective_R(ctx: ObjectiveContext, theta) -> float:
    """Concentrated local Whittle objective; ``+inf`` where ``det Omega <= 0``."""
    theta = _as_theta(theta)
    om = _omega_array(ctx, theta)
    det = om[0, 0] * om[1, 1] - om[0, 1] ** 2
    if not det > 0:
        return math.inf
    return float(math.log(det) - 2 * (theta[2] + theta[3]) * ctx.Lbar)


def _derivatives(ctx: ObjectiveContext, theta: np.ndarray, order: int):
    """Omega with first (and optionally second) partial derivatives."""
    m = ctx.m
    om = np.zeros((2, 2))
    d1 = np.zeros((4, 2, 2))
    d2 = np.zeros((4, 4, 2, 2)) if order > 1 else None
    for (r, s), (E, grad, P, P1, P2) in ctx._terms(theta).items():
        G = np.stack([np.zeros(m, dtype=complex)] + [np.asarray(x, dtype=complex) for x in grad])
        X, Y, Z = E * P, E * P1, E * P2
        val = X.mean().real
        first = (G * X).mean(-1).real
        first[0] += Y.mean().real
        om[r, s] = val
        d1[:, r, s] = first
        if order > 1:
            sec = np.einsum("kj,lj,j->kl", G, G, X).real / m
            gy = (G * Y).mean(-1).real
            sec[0, :] += gy
            sec[:, 0] += gy
            sec[0, 0] += Z.mean().real
            d2[:, :, r, s] = sec
    om[1, 0] = om[0, 1]
    d1[:, 1, 0] = d1[:, 0, 1]
    if order > 1:
        d2[:, :, 1, 0] = d2[:, :, 0, 1]
    return om, d1, d2


def _score_hessian(ctx: ObjectiveContext, theta: np.ndarray, order: int):
    om, d1, d2 = _derivatives(ctx, theta, order)
    det = om[0, 0] * om[1, 1] - om[0, 1] ** 2
    if not det > 0:
        raise np.linalg.LinAlgError("Omega(theta) is singular")
    inv = np.array([[om[1, 1], -om[0, 1]], [-om[0, 1], om[0, 0]]]) / det
    P = np.einsum("ab,kbc->kac", inv, d1)
    s = np.einsum("kaa->k", P)
    s[2:] -= 2 * ctx.Lbar
    if order == 1:
        return s, None
    H = np.einsum("ab,klba->kl", inv, d2) - np.einsum("kab,lba->kl", P, P)
    H = 0.5 * (H + H.T)
    return s, H


def score(ctx: ObjectiveContext, theta) -> np.ndarray:
    return _score_hessian(ctx, _as_theta(theta), 1)[0]


def hessian(ctx: ObjectiveContext, theta) -> np.ndarray:
    return _score_hessian(ctx, _as_theta(theta), 2)[1]


@dataclass(frozen=True)
class BetaProfile:
    beta_star: float
    c0: float
    c1: float
    c2: float
    degenerate: bool = False


def _golden(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _det_coefficients(n0_11, n0_12, n0_22, n1_11, n1_12, n2_11):
    c0 = n0_11 * n0_22 - n0_12**2
    c1 = n1_11 * n0_22 - 2 * n0_12 * n1_12
    c2 = n2_11 * n0_22 - n1_12**2
    return c0, c1, c2


def profile_beta(ctx: ObjectiveContext, alpha, space: Optional[ThetaSpace] = None) -> BetaProfile:
    """Minimiser of ``R(., alpha)`` over ``[beta_lo, beta_hi]``.

    ``det Omega(beta, alpha) = c0 + c1 beta + c2 beta^2``; with ``c2 > 0`` the
    minimiser is the clipped vertex, otherwise a golden-section search is used.
    """
    space = space or ThetaSpace()
    c0, c1, c2 = (float(x) for x in _det_coefficients(*ctx.beta_coefficients(alpha)))
    if c2 > 0:
        b = float(np.clip(-c1 / (2 * c2), space.beta_lo, space.beta_hi))
        return BetaProfile(b, c0, c1, c2)
    a = np.asarray(alpha, dtype=float)
    b = _golden(lambda t: objective_R(ctx, np.r_[t, a]), space.beta_lo, space.beta_hi)
    return BetaProfile(b, c0, c1, c2, degenerate=True)


def alpha_grid(space: ThetaSpace, n_gamma: int = 25, delta_step: float = 0.025) -> np.ndarray:
    """Stage-one grid of ``(gamma, delta1, delta2)`` rows inside the space."""
    glo, ghi = space.gamma_bounds
    gam = np.linspace(glo, ghi, n_gamma)
    dmax = space.delta2_max
    d = np.arange(-space.eta1, dmax + 1e-12, delta_step)
    if dmax - d[-1] > 1e-12:
        d = np.append(d, dmax)
    pairs = [(a, b) for a in d for b in d if a <= b - space.eta2 + 1e-12]
    pairs = np.array(pairs)
    G = np.repeat(gam, len(pairs))
    D = np.tile(pairs, (n_gamma, 1))
    return np.column_stack([G, D])


def _grid_coefficients(ctx: ObjectiveContext, grid: np.ndarray):
    """``beta_coefficients`` over grid rows, sharing work across equal ``delta`` pairs."""
    pairs, inv = np.unique(grid[:, 1:], axis=0, return_inverse=True)
    inv = inv.ravel()
    d1, d2 = pairs[:, :1], pairs[:, 1:]
    ell = ctx.L + 1j * ctx.phi
    w11 = np.exp(2 * d1 * ctx.L)
    w22 = np.exp(2 * d2 * ctx.L)
    e12 = np.exp(d1 * ell + d2 * ell.conj())
    n0_11 = (w11 @ ctx.Iyy / ctx.m)[inv]
    n1_11 = (-2 * w11 @ ctx.Iyx.real / ctx.m)[inv]
    n2_11 = (w11 @ ctx.Ixx / ctx.m)[inv]
    n0_22 = (w22 @ ctx.Ixx / ctx.m)[inv]
    rot = np.exp(1j * grid[:, 0])
    n0_12 = (rot * (e12 @ ctx.Iyx / ctx.m)[inv]).real
    n1_12 = -(rot * (e12 @ ctx.Ixx / ctx.m)[inv]).real
    return n0_11, n0_12, n0_22, n1_11, n1_12, n2_11


def _profiled_on_grid(ctx: ObjectiveContext, grid: np.ndarray, space: ThetaSpace,
                      beta_fixed: Optional[float] = None):
    """Vectorised beta-profile and objective over rows of ``grid``."""
    c0, c1, c2 = _det_coefficients(*_grid_coefficients(ctx, grid))
    if beta_fixed is not None:
        beta = np.full(len(grid), float(beta_fixed))
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            beta = np.where(c2 > 0, -c1 / (2 * c2), 0.0)
        beta = np.clip(beta, space.beta_lo, space.beta_hi)
    det = c0 + c1 * beta + c2 * beta**2
    with np.errstate(divide="ignore", invalid="ignore"):
        R = np.where(det > 0, np.log(np.where(det > 0, det, 1.0)), np.inf)
    R = R - 2 * (grid[:, 1] + grid[:, 2]) * ctx.Lbar
    if beta_fixed is None:
        for i in np.flatnonzero(~(c2 > 0)):
            p = profile_beta(ctx, grid[i], space)
            beta[i] = p.beta_star
            R[i] = objective_R(ctx, np.r_[p.beta_star, grid[i]])
    return beta, R, c0, c1, c2


def objective_surface(ctx: ObjectiveContext, space: Optional[ThetaSpace] = None,
                      n_gamma: int = 25, delta_step: float = 0.025) -> np.ndarray:
    """Rows ``(gamma, delta1, delta2, beta_star, R)`` over the stage-one grid."""
    space = space or ThetaSpace()
    grid = alpha_grid(space, n_gamma, delta_step)
    beta, R, *_ = _profiled_on_grid(ctx, grid, space)
    return np.column_stack([grid, beta, R])


@dataclass(frozen=True)
class EstimateOptions:
    n_gamma: int = 25
    delta_step: float = 0.025
    tol: float = 1e-8
    max_iter: int = 100
    hessian: str = "analytic"  # or "sigma"
    start: str = "grid"  # "baselines" or "local"
    degenerate_tol: float = 1e-12


@dataclass
class EstimationResult:
    theta_hat: ThetaVector
    omega_hat: OmegaMatrix
    R_min: float
    converged: bool
    iterations: int
    boundary_hit: tuple
    grid_stage_argmin: ThetaVector
    grid: FourierGrid
    psi: PsiKind
    space: ThetaSpace
    score: np.ndarray = field(default_factory=lambda: np.full(4, np.nan))
    degenerate: bool = False
    profile_fallback: bool = False
    beta_known: bool = False

    @property
    def m(self) -> int:
        return self.grid.m

    @property
    def n(self) -> int:
        return self.grid.n


def _safe_newton_direction(H: np.ndarray, s: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(H)
    scale = max(np.max(np.abs(w)), 1e-300)
    w = np.maximum(np.abs(w), 1e-10 * scale)
    return -V @ ((V.T @ s) / w)


def _sigma_surrogate(ctx: ObjectiveContext, theta: np.ndarray) -> np.ndarray:
    from .inference import sigma_matrix

    om = omega_hat(ctx, theta)
    nu = max(theta[3] - theta[2], 0.0)
    Sig = sigma_matrix(theta[1], min(nu, 0.499), om, audit=False).matrix
    D = np.diag([ctx.grid.lambda_m ** (-nu), 1.0, 1.0, 1.0])
    # Delta^-1 H Delta^-1 tends to Sigma itself
    return D @ Sig @ D


def _constraints(space: ThetaSpace):
    """Rows ``(a, b)`` of the linear inequalities ``a . theta <= b`` defining the space."""
    glo, ghi = space.gamma_bounds
    A = np.array([
        [1, 0, 0, 0], [-1, 0, 0, 0],
        [0, 1, 0, 0], [0, -1, 0, 0],
        [0, 0, -1, 0], [0, 0, 1, -1], [0, 0, 0, 1],
    ], dtype=float)
    b = np.array([space.beta_hi, -space.beta_lo, ghi, -glo,
                  space.eta1, -space.eta2, space.delta2_max])
    return A, b


def _active_set_direction(H, s, A_act):
    """Newton direction on the face ``A_act d = 0`` and its multipliers."""
    if len(A_act):
        _, sv, Vt = np.linalg.svd(A_act)
        rank = int(np.sum(sv > 1e-12))
        Z = Vt[rank:].T
    else:
        Z = np.eye(len(s))
    if Z.shape[1] == 0:
        d = np.zeros(len(s))
    else:
        d = Z @ _safe_newton_direction(Z.T @ H @ Z, Z.T @ s)
    if len(A_act):
        # first-order multipliers; the Newton estimate -(s + H d) can flip sign
        # when H is indefinite and release a constraint the step then hits
        mu = np.linalg.lstsq(A_act.T, -s, rcond=None)[0]
    else:
        mu = np.zeros(0)
    return d, mu


def _newton(ctx, theta0, space, opts: EstimateOptions, fixed_beta: bool = False):
    """Active-set Newton iterations with step halving inside the space."""
    A, b = _constraints(space)
    if fixed_beta:
        A, b = A[2:], b[2:]
    theta = np.asarray(theta0, dtype=float).copy()
    theta[1:] = space.project(theta)[1:]
    if not fixed_beta:
        theta[0] = np.clip(theta[0], space.beta_lo, space.beta_hi)
    idx = slice(1, 4) if fixed_beta else slice(0, 4)
    R = objective_R(ctx, theta)
    step_norm = np.inf
    it = 0
    for it in range(1, opts.max_iter + 1):
        s, H = _score_hessian(ctx, theta, 2)
        if opts.hessian == "sigma":
            try:
                H = _sigma_surrogate(ctx, theta)
            except (ValueError, np.linalg.LinAlgError):
                pass
        s, H = s[idx], H[idx, idx]
        Asub = A[:, idx]
        room = b - Asub @ theta[idx]
        active = list(np.flatnonzero(room <= 1e-10))
        pinned: set = set()
        while True:
            d, mu = _active_set_direction(H, s, Asub[active])
            free = [i for i, k in enumerate(active) if k not in pinned]
            if free and mu[free].min() < -1e-12:
                active.pop(free[int(np.argmin(mu[free]))])
                continue
            # a released constraint the direction runs straight into stays active
            slope = Asub @ d
            stuck = [k for k in range(len(b)) if k not in active and slope[k] > 1e-15 and room[k] <= 1e-10]
            if not stuck:
                break
            active += stuck
            pinned.update(stuck)
        # largest feasible step along d
        blocking = [k for k in range(len(b)) if k not in active and slope[k] > 1e-15]
        t_max = min([1.0] + [max(room[k], 0.0) / slope[k] for k in blocking])
        t = t_max
        accepted = False
        # in the quadratic region R changes by rounding noise only, so a full
        # Newton step is taken without the descent test
        local = t_max == 1.0 and float(np.linalg.norm(d)) <= 1e-6
        for _ in range(60):
            cand = theta.copy()
            cand[idx] = theta[idx] + t * d
            Rc = objective_R(ctx, cand)
            if Rc <= R or (local and math.isfinite(Rc)):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # no decrease along a descent direction: stationary up to rounding
            step_norm = 0.0 if abs(float(s @ d)) <= 1e-10 * (1 + abs(R)) else math.inf
            break
        if not fixed_beta:
            prof = profile_beta(ctx, cand[1:], space)
            cand_p = cand.copy()
            cand_p[0] = prof.beta_star
            Rp = objective_R(ctx, cand_p)
            if Rp < Rc:
                cand, Rc = cand_p, Rp
        step_norm = float(np.linalg.norm(cand - theta))
        theta, R = cand, Rc
        if step_norm <= opts.tol:
            break
    return theta, R, step_norm <= opts.tol, it


def _check_input(z, m):
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[1] != 2:
        raise ValueError("z must be an (n, 2) array")
    if z.shape[0] < 32:
        raise ValueError("need at least 32 observations")
    if not np.all(np.isfinite(z)):
        raise ValueError("z contains non-finite values")
    return z


def _check_periodogram(ctx: ObjectiveContext, z: np.ndarray) -> None:
    # a constant column leaves only rounding noise of order eps^2 n x^2 at j >= 1
    energy = np.sum(z**2, axis=0) * ctx.m
    if not (ctx.Iyy.sum() > 1e-24 * energy[0] and ctx.Ixx.sum() > 1e-24 * energy[1]):
        raise EstimationError("degenerate periodogram")


def _baseline_start(ctx: ObjectiveContext, z: np.ndarray, space: ThetaSpace) -> np.ndarray:
    from .baselines import nbls_beta, simple_gamma, univariate_lw

    pset, m = ctx.pset, ctx.m
    b = nbls_beta(pset)
    # the phase needs a beta that is not fitted on the same band
    try:
        g = simple_gamma(pset, nbls_beta(pset, max(1, math.ceil(math.sqrt(m)))))
    except ValueError:
        g = 0.0
    d1 = univariate_lw(z[:, 0] - b * z[:, 1], m)
    d2 = univariate_lw(z[:, 1], m)
    return space.project([b, g, d1, d2])


def _finish(ctx, theta, R, conv, it, start, space, degenerate=False, fallback=False,
            beta_known=False) -> EstimationResult:
    try:
        s = score(ctx, theta)
    except np.linalg.LinAlgError:
        s = np.full(4, np.nan)
    return EstimationResult(
        theta_hat=ThetaVector.from_array(theta),
        omega_hat=omega_hat(ctx, theta),
        R_min=float(R),
        converged=bool(conv),
        iterations=int(it),
        boundary_hit=space.boundary_flags(theta),
        grid_stage_argmin=ThetaVector.from_array(start),
        grid=ctx.grid,
        psi=ctx.psi,
        space=space,
        score=s,
        degenerate=degenerate,
        profile_fallback=fallback,
        beta_known=beta_known,
    )


def _grid_start(ctx, space, opts, beta_fixed=None):
    grid = alpha_grid(space, opts.n_gamma, opts.delta_step)
    beta, R, c0, c1, c2 = _profiled_on_grid(ctx, grid, space, beta_fixed)
    fallback = bool(np.any(~(c2 > 0))) and beta_fixed is None
    if not np.any(np.isfinite(R)):
        return None, grid, (c0, c1, c2), fallback
    # smallest R, ties broken lexicographically on (gamma, delta1, delta2)
    tied = np.flatnonzero(R == R.min())
    i = tied[np.lexsort((grid[tied, 2], grid[tied, 1], grid[tied, 0]))[0]]
    return np.r_[beta[i], grid[i]], grid, (c0, c1, c2), fallback


def estimate(z, m: Optional[int] = None, psi: PsiKind = PsiKind.ABS,
             space: Optional[ThetaSpace] = None,
             options: Optional[EstimateOptions] = None) -> EstimationResult:
    """Local Whittle estimate of ``(beta, gamma, delta1, delta2)``.

    A coarse grid over ``alpha`` with ``beta`` profiled out in closed form
    supplies the start for projected Newton iterations on all four
    coordinates.
    """
    z = _check_input(z, m)
    m = default_m(z.shape[0]) if m is None else m
    space = space or ThetaSpace()
    opts = options or EstimateOptions()
    ctx = ObjectiveContext.from_series(z, m, psi)
    _check_periodogram(ctx, z)

    start, grid, (c0, c1, c2), fallback = _grid_start(ctx, space, opts)
    # exactly collinear data: det Omega vanishes at the profiled beta for every alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = c0 - np.where(c2 > 0, c1**2 / (4 * c2), np.nan)
        scale = np.abs(c0) + np.abs(c1) + np.abs(c2)
        rel = vertex / scale
    if np.all(c2 > 0) and np.nanmax(rel) <= opts.degenerate_tol:
        crit = np.log(c2 / scale) - 2 * (grid[:, 1] + grid[:, 2]) * ctx.Lbar
        i = int(np.argmin(crit))
        b = float(np.clip(-c1[i] / (2 * c2[i]), space.beta_lo, space.beta_hi))
        theta = np.r_[b, grid[i]]
        return _finish(ctx, theta, -math.inf, False, 0, theta, space, degenerate=True)
    if start is None:
        raise EstimationError("det Omega(theta) <= 0 on the whole grid")

    theta0 = start
    if opts.start == "local":
        theta0 = _baseline_start(ctx, z, space)
    elif opts.start == "baselines":
        cand = _baseline_start(ctx, z, space)
        if objective_R(ctx, cand) < objective_R(ctx, start):
            theta0 = cand
    theta, R, conv, it = _newton(ctx, theta0, space, opts)
    return _finish(ctx, theta, R, conv, it, start, space, fallback=fallback)


def estimate_known_beta(z, m: Optional[int] = None, psi: PsiKind = PsiKind.ABS,
                        space: Optional[ThetaSpace] = None, beta0: float = 0.0,
                        options: Optional[EstimateOptions] = None) -> EstimationResult:
    """As :func:`estimate` with ``beta`` held at ``beta0``."""
    z = _check_input(z, m)
    m = default_m(z.shape[0]) if m is None else m
    space = space or ThetaSpace()
    opts = options or EstimateOptions()
    ctx = ObjectiveContext.from_series(z, m, psi)
    _check_periodogram(ctx, z)
    start, *_ = _grid_start(ctx, space, opts, beta_fixed=beta0)
    if start is None:
        raise EstimationError("det Omega(theta) <= 0 on the whole grid")
    theta, R, conv, it = _newton(ctx, start, space, opts, fixed_beta=True)
    return _finish(ctx, theta, R, conv, it, start, space, beta_known=True)
