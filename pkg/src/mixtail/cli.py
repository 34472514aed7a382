"""Command-line interface: catalog tables, law tables, fits, experiments.

Every run that writes into an output directory leaves exactly one
``manifest.json`` recording the command line, a hash of the resolved
parameters, the master seed, the code version and the output file
names.  Re-running the same command reproduces every output body byte
for byte; only the manifest timestamp changes.  All numeric CSV fields
are printed with 17 significant digits so a re-parse recovers the
exact double.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import (
    DegenerateModelError,
    DomainError,
    InputError,
    InvariantError,
    NumericError,
    RangeError,
    UnknownPairError,
)

_USAGE_ERRORS = (
    InputError,
    DomainError,
    RangeError,
    UnknownPairError,
    DegenerateModelError,
)

_TAIL_KEYS = ("beta0", "beta1", "delta", "gamma", "mu", "c1")


class _UsageError(Exception):
    def __init__(self, message: str, usage: str = ""):
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad flags as a usage error (exit 1)
    instead of calling sys.exit itself.

    No option string here starts with a digit, so any token of the
    form -<digit>... is a value; this lets grids with negative starts
    (--grid -2:2:0.01) parse without the = form.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = re.compile(r"^-\d")

    def error(self, message: str):  # noqa: D102 - argparse hook
        raise _UsageError(message, self.format_usage())


@dataclass(frozen=True)
class RunManifest:
    """Provenance record written once per output directory."""

    command: list
    config_hash: str
    master_seed: int | None
    code_version: str
    timestamp: str
    outputs: list


# ---------------------------------------------------------------------------
# small parsing/formatting helpers


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _parse_grid(spec: str) -> np.ndarray:
    """start:stop:step, endpoint included when it falls on the lattice."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise InputError(f"grid must be start:stop:step, got {spec!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise InputError(f"non-numeric grid spec {spec!r}") from exc
    if step <= 0.0 or stop < start:
        raise InputError(f"grid needs stop >= start and step > 0, got {spec!r}")
    count = int(math.floor((stop - start) / step + 1e-9))
    return start + step * np.arange(count + 1)


def _parse_kv(spec: str) -> dict:
    """Comma-separated key=value pairs with float values."""
    out = {}
    for item in spec.split(","):
        key, sep, val = item.partition("=")
        if not sep or not key.strip():
            raise InputError(f"expected key=value, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError as exc:
            raise InputError(f"non-numeric value in {item!r}") from exc
    return out


def _parse_int_list(spec: str) -> list:
    try:
        return [int(float(tok)) for tok in str(spec).split(",") if tok.strip()]
    except ValueError as exc:
        raise InputError(f"bad integer list {spec!r}") from exc


def _coerce(raw: str):
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "'\"":
        return raw[1:-1]
    return raw


def _parse_config(path: str) -> dict:
    """Flat key = value file; # starts a comment; no sections."""
    out = {}
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as exc:
        raise InputError(f"cannot read config {path!r}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, val = body.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key or not val:
            raise InputError(f"{path}:{lineno}: expected key = value")
        out[key] = _coerce(val)
    return out


def _read_column(source: str) -> np.ndarray:
    """One column of numbers from a file or stdin; a single leading
    non-numeric line is treated as a header."""
    if source == "-":
        lines = sys.stdin.read().splitlines()
    else:
        try:
            lines = open(source, encoding="utf-8").read().splitlines()
        except OSError as exc:
            raise InputError(f"cannot read data {source!r}: {exc}") from exc
    values = []
    for i, line in enumerate(lines):
        tok = line.split(",")[0].strip()
        if not tok:
            continue
        try:
            values.append(float(tok))
        except ValueError:
            if i == 0:
                continue
            raise InputError(f"non-numeric data line {i + 1}: {line!r}")
    if not values:
        raise InputError(f"no numeric values in {source!r}")
    return np.asarray(values, dtype=float)


def _json_ready(obj):
    from .simlab import _json_safe

    return _json_safe(obj)


# ---------------------------------------------------------------------------
# output plumbing


def _default_workers() -> int:
    env = os.environ.get("MIXTAIL_WORKERS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InputError(f"MIXTAIL_WORKERS must be an integer: {env!r}") from exc
    return os.cpu_count() or 1


class _Sink:
    """Collects outputs for one command, to a directory or stdout."""

    def __init__(self, outdir, argv, params):
        self.outdir = outdir
        self.argv = list(argv)
        self.params = dict(params)
        self.names = []
        if outdir:
            os.makedirs(outdir, exist_ok=True)

    def _put(self, name: str, body: str):
        if self.outdir:
            with open(os.path.join(self.outdir, name), "w", encoding="utf-8") as fh:
                fh.write(body)
            self.names.append(name)
        else:
            sys.stdout.write(body)

    def csv(self, name: str, header, rows):
        lines = [",".join(header)]
        for row in rows:
            lines.append(
                ",".join(v if isinstance(v, str) else _fmt(v) for v in row)
            )
        self._put(name, "\n".join(lines) + "\n")

    def json(self, name: str, payload: str):
        self._put(name, payload if payload.endswith("\n") else payload + "\n")

    def finish(self) -> None:
        """Write the manifest; every output directory gets exactly one."""
        if not self.outdir:
            return
        ident = {k: v for k, v in self.params.items() if k != "workers"}
        digest = hashlib.sha256(
            json.dumps(_json_ready(ident), sort_keys=True).encode()
        ).hexdigest()
        manifest = RunManifest(
            command=self.argv,
            config_hash=digest,
            master_seed=self.params.get("seed"),
            code_version=__version__,
            timestamp=datetime.now(timezone.utc).isoformat(),
            outputs=sorted(self.names),
        )
        path = os.path.join(self.outdir, "manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_json_ready(asdict(manifest)), fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_dist_eval(args, argv) -> int:
    from .generators import get_pair, log_density_ratio

    pair = get_pair(args.pair)
    xs = _parse_grid(args.grid)
    with np.errstate(over="ignore"):
        f0 = np.exp(pair.log_f0(xs))
        f1 = np.exp(pair.log_f1(xs))
        h = np.exp(log_density_ratio(pair, xs))
    sink = _Sink(args.out, argv, {"pair": args.pair, "grid": args.grid})
    sink.csv("dist.csv", ["x", "f0", "f1", "h"], zip(xs, f0, f1, h))
    sink.finish()
    return 0


def _cmd_asym_table(args, argv) -> int:
    from .asymptotics import SlowVariationParams, error_rate_theory, stabilizing

    try:
        params = SlowVariationParams(**_parse_kv(args.params))
    except TypeError as exc:
        raise InputError(f"unknown tail parameter: {exc}") from exc
    grid = _parse_int_list(args.n_grid)
    if not grid:
        raise InputError("empty --n-grid")
    rows = []
    for n in grid:
        trip = stabilizing(params, n)
        rows.append(
            (n, trip.center, trip.scale, trip.threshold, error_rate_theory(params, n))
        )
    sink = _Sink(args.out, argv, {"params": args.params, "n_grid": args.n_grid})
    sink.csv("asym.csv", ["n", "A_n", "B_n", "T_n", "theory_rate"], rows)
    sink.finish()
    return 0


def _cmd_law_table(args, argv) -> int:
    from .stable_laws import g_cdf, g_pdf, skew_cauchy_cdf, skew_cauchy_pdf

    xs = _parse_grid(args.grid)
    if args.law == "G":
        # support is the positive axis; tabulate zero to its left
        pdf = np.asarray([float(g_pdf(x)) if x > 0 else 0.0 for x in xs])
        cdf = np.asarray([float(g_cdf(x)) if x > 0 else 0.0 for x in xs])
    else:
        pdf = np.atleast_1d(skew_cauchy_pdf(xs, args.beta))
        cdf = np.asarray([skew_cauchy_cdf(float(x), args.beta) for x in xs])
    sink = _Sink(
        args.out, argv, {"law": args.law, "beta": args.beta, "grid": args.grid}
    )
    sink.csv("law.csv", ["x", "pdf", "cdf"], zip(xs, pdf, cdf))
    sink.finish()
    return 0


def _fit_payload(fit, upper: float, n: int) -> dict:
    return {
        "theta_hat": fit.theta_hat_hi,
        "theta_hat_lo": fit.theta_hat_lo,
        "lambda": fit.lambda_,
        "r": fit.r_stat,
        "wald": fit.wald,
        "rao": fit.rao,
        "positive": fit.positive,
        "iterations": fit.iterations,
        "grad_at_zero": fit.grad_at_zero,
        "upper_bound": upper,
        "n": n,
    }


def _cmd_fit(args, argv) -> int:
    from .generators import get_pair, theta_bounds
    from .inference import activity_rates, fit_theta, ratio_sample

    pair = get_pair(args.pair)
    x = _read_column(args.data)
    sample = ratio_sample(pair, x)
    upper = 1.0
    if args.extended:
        upper = theta_bounds(pair).theta_max
        if not math.isfinite(upper):
            raise NumericError(
                f"extended upper bound for {args.pair!r} is unbounded"
            )
    fit = fit_theta(sample, upper=upper)
    payload = json.dumps(
        _json_ready(_fit_payload(fit, upper, sample.n)), indent=2, sort_keys=True
    )
    sink = _Sink(
        args.out,
        argv,
        {"pair": args.pair, "extended": bool(args.extended), "n": sample.n},
    )
    sink.json("fit.json", payload)
    if args.out:
        rates = activity_rates(sample, fit.theta_hat_hi).rates
        sink.csv(
            "activity.csv",
            ["unit", "h", "activity_rate"],
            zip(range(sample.n), sample.h, rates),
        )
    sink.finish()
    return 0


def _resolve_sim_params(args, needs_pair: bool, needs_tail: bool) -> dict:
    cfg = _parse_config(args.config) if args.config else {}
    merged = dict(cfg)
    for key in (
        "pair",
        "n",
        "replicates",
        "seed",
        "workers",
        "conditioning",
        "target",
        "n_grid",
        "fast",
        "tau",
        "tail",
    ):
        val = getattr(args, key, None)
        if val is not None and val is not False:
            merged[key] = val
    if needs_tail:
        if isinstance(merged.get("tail"), str):
            merged.update(_parse_kv(merged.pop("tail")))
        missing = [k for k in ("beta0",) if k not in merged]
        if merged.get("pair") is not None:
            raise InputError("this experiment takes tail parameters, not a pair")
        if missing:
            raise InputError("tail parameters required (at least beta0=...)")
    elif needs_pair and not merged.get("pair"):
        raise InputError("--pair (or config key pair) is required")
    for key in ("n", "replicates"):
        if key not in merged:
            raise InputError(f"missing required parameter {key!r}")
    merged.setdefault("seed", 0)
    merged.setdefault("workers", _default_workers())
    return merged


def _experiment_config(params: dict, conditioning: str):
    from .asymptotics import SlowVariationParams
    from .simlab import ExperimentConfig

    if any(k in params for k in _TAIL_KEYS):
        tail_kwargs = {k: float(params[k]) for k in _TAIL_KEYS if k in params}
        pair_or_tail = SlowVariationParams(**tail_kwargs)
    else:
        pair_or_tail = str(params["pair"])
    target = params.get("target")
    grid = params.get("n_grid")
    return ExperimentConfig(
        pair_or_tail=pair_or_tail,
        n=int(params["n"]),
        replicates=int(params["replicates"]),
        master_seed=int(params["seed"]),
        workers=int(params["workers"]),
        conditioning=params.get("conditioning", conditioning),
        target_conditioned=None if target is None else int(target),
        n_grid=None if grid is None else tuple(_parse_int_list(grid)),
        fast=bool(params.get("fast", False)),
    )


def _emit_experiment(result, outdir, argv, params) -> int:
    if not outdir:
        raise InputError("experiments require --out DIR")
    sink = _Sink(outdir, argv, params)
    sink.json("results.json", result.summary_json())
    if result.vectors:
        names = sorted(result.vectors)
        columns = [np.asarray(result.vectors[k], dtype=float) for k in names]
        sink.csv("samples.csv", names, zip(*columns))
    if result.histograms:
        rows = []
        for name in sorted(result.histograms):
            hist = result.histograms[name]
            edges, counts = hist["edges"], hist["counts"]
            for j, count in enumerate(counts):
                rows.append((name, _fmt(edges[j]), _fmt(edges[j + 1]), str(count)))
        sink.csv("hist.csv", ["histogram", "bin_lo", "bin_hi", "count"], rows)
    sink.finish()
    return 0 if result.status == "complete" else 3


def _cmd_sim(args, argv) -> int:
    from .simlab import (
        boundary_rate_experiment,
        conditional_lr_experiment,
        joint_limit_experiment,
        non_null_boundary_experiment,
    )

    kind = args.kind
    needs_tail = kind == "joint"
    params = _resolve_sim_params(args, needs_pair=not needs_tail, needs_tail=needs_tail)
    default_conditioning = "positivity" if kind in ("lr", "joint") else "none"
    config = _experiment_config(params, default_conditioning)
    if kind == "rate":
        grid = list(config.n_grid) if config.n_grid else [config.n]
        result = boundary_rate_experiment(config, grid)
    elif kind == "lr":
        result = conditional_lr_experiment(config)
    elif kind == "joint":
        result = joint_limit_experiment(config.pair_or_tail, config)
    else:
        result = non_null_boundary_experiment(config.pair_or_tail, config)
    return _emit_experiment(result, args.out, argv, params)


def _cmd_composite_fit(args, argv) -> int:
    from .composite import composite_fit

    x = _read_column(args.data)
    res = composite_fit(x, args.tau)
    payload = {
        "theta_hat": res["theta_hat"],
        "nu_hat": res["nu_hat"],
        "lambda": res["lambda"],
        "positive": res["positive"],
        "tau": args.tau,
        "n": int(x.size),
        "profile_nus": res["profile_nus"],
        "profile_lambdas": res["profile_lambdas"],
    }
    sink = _Sink(args.out, argv, {"tau": args.tau, "n": int(x.size)})
    sink.json(
        "composite_fit.json",
        json.dumps(_json_ready(payload), indent=2, sort_keys=True),
    )
    sink.finish()
    return 0


def _cmd_composite_sim(args, argv) -> int:
    from .simlab import composite_boundary_experiment

    params = _resolve_sim_params(args, needs_pair=False, needs_tail=False)
    # the null draws are standard normal; no catalog pair is involved
    params.setdefault("pair", "gaussian_null")
    if "tau" not in params:
        raise InputError("--tau is required")
    config = _experiment_config(params, "positivity")
    result = composite_boundary_experiment(config, float(params["tau"]))
    return _emit_experiment(result, args.out, argv, params)


# ---------------------------------------------------------------------------
# parser assembly and dispatch


def _build_parser() -> _Parser:
    parser = _Parser(prog="mixtail", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    dist = sub.add_parser("dist", help="generator catalog tables")
    dist_sub = dist.add_subparsers(dest="action", required=True)
    de = dist_sub.add_parser("eval", help="tabulate f0, f1 and the ratio")
    de.add_argument("--pair", required=True)
    de.add_argument("--grid", required=True, help="start:stop:step")
    de.add_argument("--out")
    de.set_defaults(func=_cmd_dist_eval)

    asym = sub.add_parser("asym", help="stabilizing sequence tables")
    asym_sub = asym.add_subparsers(dest="action", required=True)
    at = asym_sub.add_parser("table", help="A_n, B_n, T_n, theory rate")
    at.add_argument("--params", required=True, help="beta0=...,delta=...")
    at.add_argument("--n-grid", required=True, dest="n_grid", help="n1,n2,...")
    at.add_argument("--out")
    at.set_defaults(func=_cmd_asym_table)

    law = sub.add_parser("law", help="reference law tables")
    law_sub = law.add_subparsers(dest="action", required=True)
    lt = law_sub.add_parser("table", help="x, pdf, cdf table")
    lt.add_argument("--law", required=True, choices=["G", "skew-cauchy"])
    lt.add_argument("--beta", type=float, default=1.0)
    lt.add_argument("--grid", required=True, help="start:stop:step")
    lt.add_argument("--out")
    lt.set_defaults(func=_cmd_law_table)

    fit = sub.add_parser("fit", help="boundary fit of one data column")
    fit.add_argument("--pair", required=True)
    fit.add_argument("--data", required=True, help="file of x values, or -")
    fit.add_argument(
        "--extended",
        action="store_true",
        help="use the extended upper bound instead of 1",
    )
    fit.add_argument("--out")
    fit.set_defaults(func=_cmd_fit)

    sim = sub.add_parser("sim", help="Monte Carlo experiments")
    sim.add_argument("kind", choices=["rate", "lr", "joint", "nonnull"])
    _add_sim_flags(sim)
    sim.set_defaults(func=_cmd_sim)

    comp = sub.add_parser("composite", help="composite family fit/experiments")
    comp_sub = comp.add_subparsers(dest="action", required=True)
    cf = comp_sub.add_parser("fit", help="profile fit over nu in (0, tau]")
    cf.add_argument("--tau", type=float, required=True)
    cf.add_argument("--data", required=True, help="file of x values, or -")
    cf.add_argument("--out")
    cf.set_defaults(func=_cmd_composite_fit)
    cs = comp_sub.add_parser("sim", help="null rate of the composite fit")
    cs.add_argument("--tau", type=float)
    _add_sim_flags(cs)
    cs.set_defaults(func=_cmd_composite_sim)

    return parser


def _add_sim_flags(p) -> None:
    p.add_argument("--config", help="flat key = value parameter file")
    p.add_argument("--pair")
    p.add_argument("--tail", help="beta0=...,delta=... for tail experiments")
    p.add_argument("--n", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--target", type=int, help="conditioned replicate target")
    p.add_argument("--conditioning", choices=["none", "positivity"])
    p.add_argument("--n-grid", dest="n_grid", help="n1,n2,... (rate curves)")
    p.add_argument("--fast", action="store_true", help="max-stratified sampling")
    p.add_argument("--out", required=True)


def dispatch(argv) -> int:
    """Parse and run one command, mapping failures to exit codes:
    1 usage/input, 2 numeric, 3 capped or partial experiment."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return int(args.func(args, ["mixtail", *argv]))
    except _UsageError as exc:
        sys.stderr.write(f"error: {exc}\n{exc.usage}")
        return 1
    except _USAGE_ERRORS as exc:
        # KeyError subclasses repr their message; unwrap it
        msg = exc.args[0] if exc.args else str(exc)
        sys.stderr.write(f"error: {msg}\n")
        return 1
    except (NumericError, InvariantError, FloatingPointError) as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return 2


def main(argv=None) -> int:
    return dispatch(sys.argv[1:] if argv is None else list(argv))


if __name__ == "__main__":
    sys.exit(main())
