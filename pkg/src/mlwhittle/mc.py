"""Monte Carlo harness for the local Whittle estimator and its Wald tests.

Each replication simulates the fractional AR(1) system, estimates ``theta``
and runs the requested Wald tests.  Replication ``i`` draws its innovations
from ``mix_seed(seed, i)``, and aggregation walks the replications in index
order, so results do not depend on how many workers were used.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .inference import (
    PARAM_NAMES,
    SCHEMA_VERSION,
    SingularCovarianceError,
    ScalingDelta,
    confidence_intervals,
    named_hypothesis,
    sigma_matrix,
    wald_test,
)
from .model import ThetaSpace, implied_farima_params
from .simulate import assemble_system, mix_seed, paper_farima, simulate_u
from .whittle import (
    EstimateOptions,
    EstimationError,
    PsiKind,
    bandwidth_preset,
    default_m,
    estimate,
)

__all__ = [
    "McConfig",
    "CellSummary",
    "McResult",
    "McFailure",
    "TABLE1_HYPOTHESES",
    "resolve_m",
    "run",
    "summarize",
    "write_jsonl",
    "write_summary_json",
    "summary_csv",
]

# beta = 0, gamma = nu pi / 2 and delta1 = 0, the three columns of the rejection table
TABLE1_HYPOTHESES = ("no-cointegration", "purely-nondeterministic", "short-memory-error")
MAX_FAILURE_SHARE = 0.05

MRule = Union[str, int]


class McFailure(RuntimeError):
    """Raised when more than 5% of replications fail."""


def resolve_m(n: int, rule: MRule) -> int:
    """Bandwidth for sample size ``n``: ``half``, ``one``, ``two``, ``default`` or an integer."""
    if isinstance(rule, (int, np.integer)):
        return int(rule)
    if rule == "default":
        return default_m(n)
    try:
        return bandwidth_preset(n, rule)
    except KeyError:
        raise ValueError(f"unknown bandwidth rule {rule!r}") from None


@dataclass(frozen=True)
class McConfig:
    """Design of a Monte Carlo experiment.

    ``m_rule`` is a single rule or a sequence of rules; every ``(n, m)`` pair
    forms one cell of the output table.
    """

    delta0: tuple[float, float] = (0.05, 0.45)
    rho: float = 0.75
    beta0: float = 1.0
    ar_coeff: float = 0.5
    n_list: tuple[int, ...] = (512,)
    m_rule: Union[MRule, tuple[MRule, ...]] = "one"
    reps: int = 1000
    seed: int = 0
    hypotheses: tuple[str, ...] = TABLE1_HYPOTHESES
    level: float = 0.05
    psi: PsiKind = PsiKind.ABS
    truncation: Optional[int] = None
    space: ThetaSpace = field(default_factory=ThetaSpace)
    options: EstimateOptions = field(default_factory=EstimateOptions)

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")
        if not self.n_list:
            raise ValueError("n_list is empty")
        for h in self.hypotheses:
            named_hypothesis(h)
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "hypotheses", tuple(self.hypotheses))
        object.__setattr__(self, "psi", PsiKind(self.psi))
        for n, m in self.cells:
            if not 1 <= m <= n // 2:
                raise ValueError(f"bandwidth m={m} must lie in [1, n/2] for n={n}")

    @property
    def m_rules(self) -> tuple:
        r = self.m_rule
        return tuple(r) if isinstance(r, (tuple, list)) else (r,)

    @property
    def cells(self) -> list[tuple[int, int]]:
        return [(n, resolve_m(n, r)) for n in self.n_list for r in self.m_rules]

    @property
    def dgp(self):
        kw = {} if self.truncation is None else {"truncation": self.truncation}
        return paper_farima(self.delta0, self.rho, self.ar_coeff, **kw)

    @property
    def theta0(self) -> np.ndarray:
        gamma0, _ = implied_farima_params(self.dgp)
        return np.array([self.beta0, gamma0, *self.delta0])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["psi"] = self.psi.value
        d["m_rule"] = list(self.m_rules)
        return d


@dataclass
class CellSummary:
    """Aggregates for one ``(n, m)`` cell.

    ``rejection`` maps a hypothesis name to ``(frequency, binomial SE)``;
    the per-parameter dictionaries are keyed by ``beta``, ``gamma``,
    ``delta1``, ``delta2``.
    """

    n: int
    m: int
    reps: int
    n_ok: int
    n_failed: int
    rejection: dict = field(default_factory=dict)
    bias: dict = field(default_factory=dict)
    sd: dict = field(default_factory=dict)
    theory_sd: dict = field(default_factory=dict)
    coverage: dict = field(default_factory=dict)
    boundary: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)


@dataclass
class McResult:
    config: McConfig
    cells: list
    records: list = field(default_factory=list)

    def cell(self, n: int, m: int) -> CellSummary:
        for c in self.cells:
            if (c.n, c.m) == (n, m):
                return c
        raise KeyError((n, m))

    def summary_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "cells": [asdict(c) for c in self.cells],
        }


def _replicate(cfg: McConfig, n: int, m: int, index: int) -> dict:
    seed = mix_seed(cfg.seed, index)
    rec = {"index": index, "seed": seed, "n": n, "m": m}
    try:
        z = assemble_system(simulate_u(cfg.dgp, n, seed), cfg.beta0)
        res = estimate(z, m, psi=cfg.psi, space=cfg.space, options=cfg.options)
        rec["theta_hat"] = res.theta_hat.as_array().tolist()
        rec["boundary_hit"] = list(map(bool, res.boundary_hit))
        rec["converged"] = bool(res.converged)
        if not res.converged:
            rec["failure"] = "optimizer did not converge"
            return rec
        ci = confidence_intervals(res, 0.95)
        rec["ci95"] = ci.tolist()
        tests = {}
        for h in cfg.hypotheses:
            w = wald_test(res, *named_hypothesis(h), name=h)
            tests[h] = {"W": w.statistic, "p": w.p_value, "reject": w.rejects(cfg.level)}
        rec["tests"] = tests
    except (EstimationError, SingularCovarianceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        rec["failure"] = f"{type(exc).__name__}: {exc}"
    return rec


def _theory_sd(cfg: McConfig, n: int, m: int) -> np.ndarray:
    gamma0, omega0 = implied_farima_params(cfg.dgp)
    nu0 = cfg.delta0[1] - cfg.delta0[0]
    S = sigma_matrix(gamma0, nu0, omega0, audit=False).matrix
    if np.linalg.eigvalsh(S)[0] <= 0:
        return np.full(4, np.nan)
    d = ScalingDelta(nu0, 2 * np.pi * m / n).diag
    return np.sqrt(np.diag(np.linalg.inv(S)) / m) / d


def _aggregate(cfg: McConfig, n: int, m: int, recs: list) -> CellSummary:
    ok = [r for r in recs if "failure" not in r]
    failures: dict = {}
    for r in recs:
        if "failure" in r:
            key = r["failure"].split(":")[0]
            failures[key] = failures.get(key, 0) + 1
    cell = CellSummary(n, m, len(recs), len(ok), len(recs) - len(ok), failures=failures)
    k = len(ok)
    for h in cfg.hypotheses:
        if k:
            p = sum(r["tests"][h]["reject"] for r in ok) / k
            cell.rejection[h] = (p, math.sqrt(p * (1 - p) / k))
        else:
            cell.rejection[h] = (math.nan, math.nan)
    th0 = cfg.theta0
    est = np.array([r["theta_hat"] for r in ok]).reshape(k, 4)
    ci = np.array([r["ci95"] for r in ok]).reshape(k, 4, 2)
    bnd = np.array([r["boundary_hit"] for r in recs if "boundary_hit" in r], dtype=bool).reshape(-1, 4)
    tsd = _theory_sd(cfg, n, m)
    for j, name in enumerate(PARAM_NAMES):
        cell.bias[name] = float(est[:, j].mean() - th0[j]) if k else math.nan
        cell.sd[name] = float(est[:, j].std(ddof=1)) if k > 1 else math.nan
        cell.theory_sd[name] = float(tsd[j])
        inside = (ci[:, j, 0] <= th0[j]) & (th0[j] <= ci[:, j, 1])
        cell.coverage[name] = float(inside.mean()) if k else math.nan
        cell.boundary[name] = int(bnd[:, j].sum())
    return cell


def run(config: McConfig, workers: int = 1) -> McResult:
    """Run every cell of ``config``.

    Failed replications are kept in ``records`` with a ``failure`` message
    and excluded from the frequencies.  Raises :class:`McFailure` if more
    than 5% of the replications of any cell fail.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    cells, records = [], []
    for n, m in config.cells:
        idx = range(config.reps)
        if workers == 1:
            recs = [_replicate(config, n, m, i) for i in idx]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                recs = list(pool.map(lambda i: _replicate(config, n, m, i), idx))
        cell = _aggregate(config, n, m, recs)
        if cell.n_failed > MAX_FAILURE_SHARE * config.reps:
            raise McFailure(
                f"{cell.n_failed} of {config.reps} replications failed at n={n}, m={m}: {cell.failures}"
            )
        cells.append(cell)
        records.extend(recs)
    return McResult(config, cells, records)


_SHORT = {
    "no-cointegration": "beta=0",
    "zero-phase": "gamma=0",
    "purely-nondeterministic": "gamma=nu*pi/2",
    "weak-causality": "gamma=-nu*pi/2",
    "short-memory-error": "delta1=0",
}


def _pct(x: float) -> str:
    return "   nan" if math.isnan(x) else f"{100 * x:6.1f}"


def summarize(result: McResult) -> str:
    """Plain-text rejection table followed by a bias/SD/coverage appendix."""
    cfg = result.config
    hyps = list(cfg.hypotheses)
    head = f"{'delta0':>12} {'rho':>5} {'n':>6} {'m':>5}"
    out = ["Rejection frequencies (%) at level {:g}".format(cfg.level)]
    out.append(head + "".join(f" {_SHORT.get(h, h):>14}" for h in hyps) + f" {'ok':>6} {'failed':>6}")
    d0 = f"({cfg.delta0[0]:g},{cfg.delta0[1]:g})"
    for c in result.cells:
        row = f"{d0:>12} {cfg.rho:5g} {c.n:6d} {c.m:5d}"
        row += "".join(f" {_pct(c.rejection[h][0]):>14}" for h in hyps)
        out.append(row + f" {c.n_ok:6d} {c.n_failed:6d}")
    out.append("")
    out.append("Estimator accuracy")
    out.append(f"{'n':>6} {'m':>5} {'param':>7} {'bias':>10} {'sd':>10} {'theory_sd':>10} "
               f"{'cover95':>8} {'boundary':>8}")
    for c in result.cells:
        for p in PARAM_NAMES:
            out.append(
                f"{c.n:6d} {c.m:5d} {p:>7} {c.bias[p]:10.4f} {c.sd[p]:10.4f} "
                f"{c.theory_sd[p]:10.4f} {_pct(c.coverage[p]):>8} {c.boundary[p]:8d}"
            )
    return "\n".join(out) + "\n"


def write_jsonl(result: McResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in result.records:
            fh.write(json.dumps(r) + "\n")


def write_summary_json(result: McResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(result.summary_dict(), fh, indent=2)
        fh.write("\n")


def summary_csv(result: McResult) -> str:
    """One row per cell: rejection frequencies, SEs and per-parameter aggregates."""
    hyps = list(result.config.hypotheses)
    cols = ["n", "m", "reps", "n_ok", "n_failed"]
    cols += [f"{h}_{s}" for h in hyps for s in ("freq", "se")]
    cols += [f"{p}_{s}" for p in PARAM_NAMES for s in ("bias", "sd", "theory_sd", "coverage", "boundary")]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for c in result.cells:
        row = [c.n, c.m, c.reps, c.n_ok, c.n_failed]
        for h in hyps:
            row += list(c.rejection[h])
        for p in PARAM_NAMES:
            row += [c.bias[p], c.sd[p], c.theory_sd[p], c.coverage[p], c.boundary[p]]
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()
