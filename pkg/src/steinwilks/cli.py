"""Command-line front end.

Commands: bound, simulate, rate-sweep, dim-sweep, verify.  Flags may come
from a flat key=value config file (--config); explicit flags win.  Exit
codes: 0 success, 2 configuration error, 3 numerical failure; verify exits 1
when any acceptance criterion fails.

Machine-readable outputs (JSON, CSV) are byte-stable: rerunning a command
with the same master seed reproduces them exactly regardless of
STEIN_WILKS_THREADS.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bound import assemble_bound, exponential_corollary_bound, normal_corollary_bound
from .contract import get_model
from .errors import ConfigError, NumericalError
from .mc import (
    chisq_expectation, dimension_sweep, estimate_distance, rate_sweep,
    sweep_rows_to_csv, wilks_ks_check,
)
from .testfunc import (
    BUILTIN_TEST_FUNCTIONS, GridSpec, tabulated_test_function, validate_test_function,
)


def _parse_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, value = line.partition("=")
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    if getattr(args, "config", None):
        defaults = _parse_config_file(args.config)
        for key, value in defaults.items():
            if getattr(args, key, None) is None:
                setattr(args, key, value)
    return args


def _theta_vector(spec: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in str(spec).split(",")])
    except ValueError as exc:
        raise ConfigError(f"cannot parse theta0 {spec!r}") from exc


def _load_test_function(spec: str):
    spec = str(spec)
    if spec in BUILTIN_TEST_FUNCTIONS:
        return BUILTIN_TEST_FUNCTIONS[spec]()
    try:
        with open(spec) as fh:
            table = json.load(fh)
    except OSError as exc:
        raise ConfigError(
            f"h must be one of {sorted(BUILTIN_TEST_FUNCTIONS)} or a table file; "
            f"cannot read {spec!r}: {exc}"
        ) from exc
    h = tabulated_test_function(table, name=spec)
    x_max = float(np.max(np.asarray(table["x"], dtype=float)))
    validate_test_function(h, GridSpec(x_max=max(x_max, 1.0)))
    return h


def _resolve_run(args) -> dict:
    model_kwargs = {}
    if args.model == "logistic":
        model_kwargs["dim"] = len(_theta_vector(args.theta0))
        if getattr(args, "covariates", None):
            model_kwargs["covariates"] = args.covariates
    model = get_model(args.model, **model_kwargs)
    theta0 = _theta_vector(args.theta0)
    n = int(args.n)
    if n < 1:
        raise ConfigError("n must be >= 1")
    r = int(args.r) if args.r is not None else model.dim
    h = _load_test_function(args.h)
    return {"model": model, "theta0": theta0, "n": n, "r": r, "h": h}


def _emit(payload: dict, args, human_lines) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
        for line in human_lines:
            print(line)
    else:
        sys.stdout.write(text)
        for line in human_lines:
            print(line, file=sys.stderr)


def _bound_table(report: dict) -> list:
    terms = report["terms"]
    rows = [("r", terms["r"]), ("k1", terms["k1"]), ("k1*", terms["k1_star"]),
            ("k2", terms["k2"]), ("k2*", terms["k2_star"]), ("total", report["total"])]
    width = max(len(name) for name, _ in rows)
    lines = [f"{name:<{width}}  {value:10.3f}" for name, value in rows]
    lines.append(f"certified: {report['certified']}")
    return lines


def cmd_bound(args) -> int:
    run = _resolve_run(args)
    bb = assemble_bound(run["model"], run["theta0"], run["n"], run["r"], run["h"],
                        eps=float(args.eps) if args.eps is not None else None)
    payload = bb.to_dict()
    if args.corollary:
        prefactored = not args.no_prefactor
        if args.model == "exponential":
            payload["corollary"] = exponential_corollary_bound(
                float(run["theta0"][0]), run["n"], run["h"], prefactored)
        elif args.model == "normal":
            payload["corollary"] = normal_corollary_bound(
                float(run["theta0"][1]), run["n"], run["h"])
        else:
            raise ConfigError("closed-form corollaries exist for exponential and normal only")
    _emit(payload, args, _bound_table(payload))
    return 0


def cmd_simulate(args) -> int:
    run = _resolve_run(args)
    reps = int(args.reps)
    if reps < 10_000:
        raise ConfigError("simulate needs reps >= 10^4")
    seed = int(args.seed)
    est = estimate_distance(run["model"], run["theta0"], run["n"], run["r"],
                            run["h"], reps, seed)
    bb = assemble_bound(run["model"], run["theta0"], run["n"], run["r"], run["h"])
    ks = None
    if args.ks:
        ks = wilks_ks_check(run["model"], run["theta0"], run["n"], run["r"], reps, seed)
    payload = {
        "config": {
            "model": args.model,
            "theta0": [float(v) for v in run["theta0"]],
            "n": run["n"], "r": run["r"], "h": run["h"].name,
            "reps": reps, "master_seed": seed,
        },
        "mc": {
            "distance": est.mean, "stderr": est.stderr,
            "reps": est.reps, "failed_reps": est.failed_reps,
        },
        "chisq_ref": chisq_expectation(run["h"], run["r"]),
        "bound": bb.to_dict(),
        "within_bound": bool(est.mean + 3.0 * est.stderr <= bb.total),
    }
    if ks is not None:
        payload["ks"] = ks
    _emit(payload, args, [
        f"distance {est.mean:.6g} +- {est.stderr:.2g} vs bound {bb.total:.6g}",
    ])
    return 0


def cmd_rate_sweep(args) -> int:
    run = _resolve_run(args)
    n_grid = [int(float(v)) for v in str(args.n_grid).split(",")]
    rows, slope = rate_sweep(run["model"], run["theta0"], run["h"], n_grid, run["r"])
    if args.out:
        sweep_rows_to_csv(rows, args.out)
    else:
        sweep_rows_to_csv(rows, "/dev/stdout")
    print(f"log-log slope: {slope:.4f}", file=sys.stderr if not args.out else sys.stdout)
    return 0


def cmd_dim_sweep(args) -> int:
    d_grid = [int(v) for v in str(args.d_grid).split(",")]
    h = _load_test_function(args.h)
    rows = dimension_sweep(int(args.n), d_grid, int(args.reps), int(args.seed), h,
                           covariates=args.covariates or "rademacher")
    if args.out:
        sweep_rows_to_csv(rows, args.out)
    else:
        sweep_rows_to_csv(rows, "/dev/stdout")
    return 0


def cmd_verify(args) -> int:
    from .acceptance import run_criteria

    ids = None
    if args.criteria:
        ids = [int(v) for v in str(args.criteria).split(",")]
    results = run_criteria(ids)
    failed = [res for res in results if not res.passed]
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steinwilks",
        description="Explicit chisquare-approximation bounds for likelihood-ratio "
                    "tests, with Monte Carlo validation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_model=True):
        p.add_argument("--config", help="flat key=value config file; flags override")
        p.add_argument("--out", help="output path for the machine-readable report")
        if needs_model:
            p.add_argument("--model", choices=["exponential", "normal", "logistic"])
            p.add_argument("--theta0", help="comma-separated parameter vector")
            p.add_argument("--n", help="sample size")
            p.add_argument("--r", help="tested leading coordinates (default: d)")
            p.add_argument("--h", default=None,
                           help="test function: ht, zero, or a JSON table path")
            p.add_argument("--covariates", choices=["rademacher", "normal"],
                           help="logistic covariate law")

    p_bound = sub.add_parser("bound", help="evaluate the bound at one configuration")
    common(p_bound)
    p_bound.add_argument("--eps", help="localisation radius override")
    p_bound.add_argument("--corollary", action="store_true",
                         help="include the closed-form corollary value")
    p_bound.add_argument("--no-prefactor", action="store_true",
                         help="evaluate the exponential corollary display verbatim")
    p_bound.set_defaults(func=cmd_bound)

    p_sim = sub.add_parser("simulate", help="Monte Carlo distance vs the bound")
    common(p_sim)
    p_sim.add_argument("--reps", help="replicates (>= 10^4)")
    p_sim.add_argument("--seed", help="master seed")
    p_sim.add_argument("--ks", action="store_true", help="also report the KS distance")
    p_sim.set_defaults(func=cmd_simulate)

    p_rate = sub.add_parser("rate-sweep", help="bound decay across an n-grid")
    common(p_rate)
    p_rate.add_argument("--n-grid", help="comma-separated n values (>= 4, 3 decades)")
    p_rate.set_defaults(func=cmd_rate_sweep)

    p_dim = sub.add_parser("dim-sweep", help="logistic bound scaling across dimensions")
    common(p_dim, needs_model=False)
    p_dim.add_argument("--n", help="sample size per replicate")
    p_dim.add_argument("--d-grid", help="comma-separated dimensions")
    p_dim.add_argument("--reps", help="replicates per dimension")
    p_dim.add_argument("--seed", help="master seed")
    p_dim.add_argument("--h", default=None, help="test function id or table path")
    p_dim.add_argument("--covariates", choices=["rademacher", "normal"])
    p_dim.set_defaults(func=cmd_dim_sweep)

    p_verify = sub.add_parser("verify", help="run the acceptance criteria")
    p_verify.add_argument("--criteria", help="comma-separated criterion ids (default all)")
    p_verify.set_defaults(func=cmd_verify)
    return parser


REQUIRED = {
    "bound": ("model", "theta0", "n"),
    "simulate": ("model", "theta0", "n", "reps", "seed"),
    "rate-sweep": ("model", "theta0", "n_grid"),
    "dim-sweep": ("n", "d_grid", "reps", "seed"),
    "verify": (),
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        missing = [name for name in REQUIRED[args.command]
                   if getattr(args, name, None) is None]
        if missing:
            raise ConfigError(
                f"{args.command} requires {', '.join(m.replace('_', '-') for m in missing)}"
            )
        if getattr(args, "h", None) is None and args.command != "verify":
            args.h = "ht"
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
