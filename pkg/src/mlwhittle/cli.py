"""Command-line front end: ``mlwhittle {simulate,estimate,wald,mc,surface}``.

Exit status is 0 on success, 1 on usage or input errors and 2 on numerical
failure.  Errors are also written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields
from typing import Optional, Sequence

import numpy as np

from . import mc
from .inference import (
    HYPOTHESES,
    SCHEMA_VERSION,
    SingularCovarianceError,
    dumps_record,
    named_hypothesis,
    result_from_record,
    result_record,
    wald_test,
)
from .model import ThetaSpace
from .simulate import CsvFormatError, assemble_system, format_csv, paper_farima, read_csv, simulate_u
from .whittle import (
    EstimateOptions,
    EstimationError,
    ObjectiveContext,
    PsiKind,
    default_m,
    estimate,
    objective_surface,
)
from .spectra import periodogram

__all__ = ["main", "UsageError"]

_SPACE = ThetaSpace()
_OPTS = EstimateOptions()


class UsageError(Exception):
    """Bad flags, config keys or input files (exit status 1)."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.line = line


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kw):
        kw.setdefault("allow_abbrev", False)
        super().__init__(*args, **kw)

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


_SPACE_HELP = {
    "eta1": "delta1 >= -eta1",
    "eta2": "delta2 - delta1 >= eta2",
    "eta3": "delta2 <= 1/2 - eta3",
    "eta4": "|gamma| <= pi/2 - eta4",
    "beta_lo": "lower bound of beta",
    "beta_hi": "upper bound of beta",
}


class _DefaultsFormatter(argparse.HelpFormatter):
    def _get_help_string(self, action):
        h = action.help or ""
        d = action.default
        if "%(default)" not in h and d is not None and d is not False and d != argparse.SUPPRESS:
            h += " (default: %(default)s)"
        return h


def _m_rule(text: str):
    if text in ("half", "one", "two", "default"):
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected an integer or one of half/one/two/default, got {text!r}"
        ) from None


def _add_space(p):
    g = p.add_argument_group("parameter space")
    for f in fields(ThetaSpace):
        g.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=float,
                       default=getattr(_SPACE, f.name), help=_SPACE_HELP[f.name])


def _add_estimation(p, with_m=True):
    if with_m:
        p.add_argument("--m", type=int, default=None,
                       help="bandwidth (default: floor(n^(2/3)))")
    p.add_argument("--psi", choices=[k.value for k in PsiKind], default=PsiKind.ABS.value,
                   help="frequency weight |lambda| (abs) or |1 - e^{i lambda}| with phase (nu)")
    g = p.add_argument_group("optimiser")
    g.add_argument("--n-gamma", type=int, default=_OPTS.n_gamma, help="gamma points in the start grid")
    g.add_argument("--delta-step", type=float, default=_OPTS.delta_step,
                   help="delta spacing in the start grid")
    g.add_argument("--tol", type=float, default=_OPTS.tol, help="Newton step tolerance")
    g.add_argument("--max-iter", type=int, default=_OPTS.max_iter, help="Newton iteration cap")
    g.add_argument("--start", choices=["grid", "baselines", "local"], default=_OPTS.start,
                   help="starting value: grid argmin, closed-form baselines, or baselines refined locally")
    _add_space(p)


def _add_dgp(p):
    g = p.add_argument_group("data generating process")
    g.add_argument("--delta1", type=float, default=0.05, help="memory of the cointegrating error")
    g.add_argument("--delta2", type=float, default=0.45, help="memory of x")
    g.add_argument("--rho", type=float, default=0.75, help="innovation correlation")
    g.add_argument("--beta0", type=float, default=1.0, help="cointegrating coefficient")
    g.add_argument("--ar", type=float, default=0.5, help="common AR(1) coefficient")
    g.add_argument("--truncation", type=int, default=None,
                   help="MA truncation lag (default: n + 10000)")
    g.add_argument("--seed", type=int, default=0, help="base seed of the random generator")


def build_parser() -> argparse.ArgumentParser:
    fmt = _DefaultsFormatter
    top = _Parser(prog="mlwhittle", description="Local Whittle estimation of fractional cointegration.",
                  formatter_class=fmt)
    top.add_argument("--config", default=None,
                     help="file of key=value lines mirroring the flags; flags win on conflict")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate (y, x) and write CSV", formatter_class=fmt)
    p.add_argument("--n", type=int, required=True, help="sample size")
    _add_dgp(p)
    p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")

    p = sub.add_parser("estimate", help="estimate theta from a CSV series", formatter_class=fmt)
    p.add_argument("input", help="CSV with header y,x ('-' for stdin)")
    _add_estimation(p)
    p.add_argument("--test", dest="tests", action="append", default=None,
                   choices=sorted(HYPOTHESES), help="named hypothesis to test (repeatable)")
    p.add_argument("--sigma-form", choices=["corrected", "printed"], default="corrected",
                   help="Sigma entries used for standard errors")
    p.add_argument("--periodogram", default=None,
                   help="also write the periodogram ordinates j = 1..m as CSV to this path")
    p.add_argument("--out", default="-", help="output JSON path ('-' for stdout)")

    p = sub.add_parser("wald", help="Wald tests from a series or a stored estimate",
                       formatter_class=fmt)
    p.add_argument("input", help="CSV series or JSON record written by 'estimate'")
    _add_estimation(p)
    p.add_argument("--hypothesis", dest="hypotheses", action="append", default=None,
                   choices=sorted(HYPOTHESES), help="named hypothesis (repeatable)")
    p.add_argument("--A", dest="A", default=None,
                   help="custom restriction rows, e.g. '1,0,0,0;0,0,1,0'")
    p.add_argument("--c", dest="c", default=None, help="custom right-hand side, e.g. '0;0'")
    p.add_argument("--level", type=float, default=0.05, help="nominal test size")
    p.add_argument("--sigma-form", choices=["corrected", "printed"], default="corrected",
                   help="Sigma entries used for standard errors")
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")

    p = sub.add_parser("mc", help="Monte Carlo replication of rejection frequencies",
                       formatter_class=fmt)
    p.add_argument("--preset", choices=["table1-row"], default=None,
                   help="table1-row: the three tests beta = 0, gamma = nu pi/2, delta1 = 0 (the default design)")
    _add_dgp(p)
    p.add_argument("--n", type=int, action="append", default=None,
                   help="sample size (repeatable; default 512)")
    p.add_argument("--m", dest="m_rule", type=_m_rule, action="append", default=None,
                   help="bandwidth: integer or half/one/two times n^(2/3) (repeatable; default one)")
    p.add_argument("--reps", type=int, default=1000, help="replications per cell")
    p.add_argument("--hypothesis", dest="hypotheses", action="append", default=None,
                   choices=sorted(HYPOTHESES),
                   help="hypotheses to test (repeatable; default: the three table columns)")
    p.add_argument("--level", type=float, default=0.05, help="nominal test size")
    _add_estimation(p, with_m=False)
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("--records", default=None, help="JSON-lines file of per-replication records")
    p.add_argument("--summary", default=None, help="summary JSON file")
    p.add_argument("--csv", default=None, help="summary CSV file")

    p = sub.add_parser("surface", help="profiled objective over the start grid as CSV",
                       formatter_class=fmt)
    p.add_argument("input", help="CSV series with header y,x")
    _add_estimation(p)
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    return top


def _read_config(path: str) -> dict:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"config {path}: expected key=value", lineno)
                k, v = (s.strip() for s in line.split("=", 1))
                out[k.replace("_", "-")] = v
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    return out


def _merge_config(parser, argv: list[str]) -> list[str]:
    """Insert config entries as flags before the user's own flags."""
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config", default=None)
    known, rest = pre.parse_known_args(argv)
    if known.config is None:
        return argv
    if not rest or rest[0].startswith("-"):
        raise UsageError("a subcommand must follow --config")
    cmd, user = rest[0], rest[1:]
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if cmd not in subparsers.choices:
        return argv
    sp = subparsers.choices[cmd]
    flags = {o: a for a in sp._actions for o in a.option_strings if o.startswith("--")}
    given = {u.split("=", 1)[0] for u in user if u.startswith("--")}
    extra = []
    for key, value in _read_config(known.config).items():
        flag = f"--{key}"
        if flag not in flags:
            raise UsageError(f"config {known.config}: unknown key {key!r} for '{cmd}'")
        if flag in given:
            continue
        action = flags[flag]
        values = [v.strip() for v in value.split(",")] if isinstance(action, argparse._AppendAction) else [value]
        for v in values:
            extra += [flag, v]
    return [cmd] + extra + user


def _space(a) -> ThetaSpace:
    try:
        return ThetaSpace(**{f.name: getattr(a, f.name) for f in fields(ThetaSpace)})
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _options(a) -> EstimateOptions:
    return EstimateOptions(n_gamma=a.n_gamma, delta_step=a.delta_step, tol=a.tol,
                           max_iter=a.max_iter, start=a.start)


def _read_series(path: str) -> np.ndarray:
    try:
        return read_csv(sys.stdin if path == "-" else path)
    except CsvFormatError as exc:
        raise UsageError(f"{path}: {exc}", exc.line) from None
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _check_m(z: np.ndarray, m: Optional[int]) -> None:
    n = z.shape[0]
    if m is not None and not 1 <= m <= n // 2:
        raise UsageError(f"--m {m} must lie in [1, n/2] for n={n}")
    if n < 32:
        raise UsageError(f"need at least 32 observations, got {n}")


def _emit(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _estimate_from(a, z):
    _check_m(z, a.m)
    return estimate(z, a.m, psi=PsiKind(a.psi), space=_space(a), options=_options(a))


def _cmd_simulate(a) -> None:
    if a.n < 16:
        raise UsageError("--n must be at least 16")
    kw = {} if a.truncation is None else {"truncation": a.truncation}
    try:
        spec = paper_farima((a.delta1, a.delta2), a.rho, a.ar, **kw)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise UsageError(f"invalid process parameters: {exc}") from None
    z = assemble_system(simulate_u(spec, a.n, a.seed), a.beta0)
    _emit(format_csv(z), a.out)


def _cmd_estimate(a) -> None:
    z = _read_series(a.input)
    res = _estimate_from(a, z)
    if a.periodogram:
        rows = periodogram(z, res.m).to_rows()
        lines = ["j,lambda,Iyy,Iyx_re,Iyx_im,Ixx"]
        lines += [",".join(repr(v) if isinstance(v, int) else repr(float(v)) for v in r) for r in rows]
        _emit("\n".join(lines) + "\n", a.periodogram)
    tests = [wald_test(res, *named_hypothesis(h), name=h, form=a.sigma_form) for h in a.tests or []]
    _emit(dumps_record(result_record(res, tests, form=a.sigma_form), indent=2) + "\n", a.out)


def _parse_matrix(text: str, what: str) -> np.ndarray:
    try:
        return np.array([[float(v) for v in row.split(",")] for row in text.split(";")])
    except ValueError:
        raise UsageError(f"cannot parse {what} {text!r}") from None


def _cmd_wald(a) -> None:
    if a.input.endswith(".json"):
        try:
            with open(a.input, encoding="utf-8") as fh:
                res = result_from_record(json.load(fh))
        except (OSError, json.JSONDecodeError, ValueError) as exc:
            raise UsageError(f"cannot load estimate from {a.input}: {exc}") from None
    else:
        res = _estimate_from(a, _read_series(a.input))
    tests = []
    for h in a.hypotheses or []:
        tests.append(wald_test(res, *named_hypothesis(h), name=h, form=a.sigma_form))
    if a.A is not None:
        A = _parse_matrix(a.A, "--A")
        c = _parse_matrix(a.c, "--c").ravel() if a.c is not None else None
        try:
            tests.append(wald_test(res, A, c, name="custom", form=a.sigma_form))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if not tests:
        raise UsageError("give at least one --hypothesis or --A")
    out = {
        "schema_version": SCHEMA_VERSION,
        "level": a.level,
        "tests": [dict(t.as_dict(), reject=t.rejects(a.level)) for t in tests],
    }
    _emit(json.dumps(out, indent=2) + "\n", a.out)


def _cmd_mc(a) -> None:
    # the table1-row preset is the default design: the three table tests
    hyps = a.hypotheses or list(mc.TABLE1_HYPOTHESES)
    if a.threads < 1:
        raise UsageError("--threads must be >= 1")
    try:
        cfg = mc.McConfig(
            delta0=(a.delta1, a.delta2), rho=a.rho, beta0=a.beta0, ar_coeff=a.ar,
            n_list=tuple(a.n or [512]), m_rule=tuple(a.m_rule or ["one"]), reps=a.reps,
            seed=a.seed, hypotheses=tuple(hyps), level=a.level, psi=PsiKind(a.psi),
            truncation=a.truncation, space=_space(a), options=_options(a),
        )
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise UsageError(f"invalid Monte Carlo configuration: {exc}") from None
    res = mc.run(cfg, workers=a.threads)
    if a.records:
        mc.write_jsonl(res, a.records)
    if a.summary:
        mc.write_summary_json(res, a.summary)
    if a.csv:
        _emit(mc.summary_csv(res), a.csv)
    sys.stdout.write(mc.summarize(res))


def _cmd_surface(a) -> None:
    z = _read_series(a.input)
    _check_m(z, a.m)
    m = a.m if a.m is not None else default_m(z.shape[0])
    ctx = ObjectiveContext.from_series(z, m, PsiKind(a.psi))
    rows = objective_surface(ctx, _space(a), a.n_gamma, a.delta_step)
    lines = ["gamma,delta1,delta2,beta_star,R"]
    lines += [",".join(repr(float(v)) for v in r) for r in rows]
    _emit("\n".join(lines) + "\n", a.out)


_COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "wald": _cmd_wald,
    "mc": _cmd_mc,
    "surface": _cmd_surface,
}


def _fail(kind: str, message: str, code: int, line: Optional[int] = None) -> int:
    err = {"schema_version": SCHEMA_VERSION, "error": kind, "message": message}
    if line is not None:
        err["line"] = line
    sys.stderr.write(json.dumps(err) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_merge_config(parser, argv))
        _COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", str(exc), 1, exc.line)
    except (EstimationError, SingularCovarianceError, np.linalg.LinAlgError,
            FloatingPointError, mc.McFailure) as exc:
        return _fail("numerical", str(exc), 2)
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
    return 0


if __name__ == "__main__":
    sys.exit(main())
