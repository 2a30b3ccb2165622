"""Command-line entry point.

    rvcv run --config FILE [--cores N] [--out DIR]
    rvcv gen-data --experiment ising|sir --seed S --out FILE
    rvcv oracle --experiment ising --theta-grid a:b:n [--data FILE]
    rvcv example NAME

Errors print ``error [category]: message`` to stderr and exit with the
category's code (2 invalid input, 3 numerical degeneracy, 4 resource
limits, 5 simulation failure).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings

import numpy as np

from .errors import InvalidArgumentError, RvcvError
from .experiments.config import EXAMPLES, EXPERIMENTS, load_config
from .experiments.runners import generate_ising_data, generate_sir_data, run_experiment
from .grf.io import read_lattice, write_lattice
from .grf.ising import ising_posterior_mean_grid
from .sde import write_observations

log = logging.getLogger("rvcv")


def _grid(spec: str) -> np.ndarray:
    try:
        a, b, n = spec.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as exc:
        raise InvalidArgumentError(f"theta grid must look like a:b:n, got {spec!r}") from exc
    if not b > a or n < 3:
        raise InvalidArgumentError("theta grid needs a < b and n >= 3")
    return np.linspace(a, b, n)


def _cmd_run(args) -> int:
    config = load_config(args.config, out=args.out)
    report = run_experiment(config, workers=args.cores)
    summary = {"experiment": report.experiment, "rows": len(report.rows), "files": report.paths,
               "timings": report.timings}
    if report.rho_fit:
        summary["rho_fit"] = {k: report.rho_fit[k] for k in ("rho_inf", "C", "residual")}
    if "allocation" in report.extra:
        summary["argmin_K"] = {a["K0"]: a["argmin_K"] for a in report.extra["allocation"]}
    print(json.dumps(summary, indent=2, default=str))
    return 0


def _cmd_gen_data(args) -> int:
    if args.experiment == "ising":
        ms = EXAMPLES["ising"]["model"]
        theta = ms["theta_true"] if args.theta is None else args.theta[0]
        data = generate_ising_data(args.rows, args.cols, theta, args.seed)
        write_lattice(args.out, data)
    else:
        ms = dict(EXAMPLES["sir"]["model"], data_seed=args.seed)
        if args.theta is not None:
            if len(args.theta) != 2:
                raise InvalidArgumentError("SIR needs two rates: --theta t1 t2")
            ms["theta_true"] = list(args.theta)
        if args.n_obs is not None:
            ms["n_obs"] = args.n_obs
        times, states = generate_sir_data(ms)
        write_observations(args.out, times, states)
    print(args.out)
    return 0


def _cmd_oracle(args) -> int:
    if args.data:
        data, _ = read_lattice(args.data)
    else:
        data = generate_ising_data(args.rows, args.cols, args.theta, args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        mean = ising_posterior_mean_grid(data, args.prior_sd, _grid(args.theta_grid))
    out = {"posterior_mean": mean, "shape": list(data.shape), "warnings": [str(w.message) for w in caught]}
    print(json.dumps(out, indent=2))
    return 0


def _cmd_example(args) -> int:
    print(json.dumps(EXAMPLES[args.name], indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rvcv", description="Reduced-variance control variates for intractable models.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--cores", type=int, default=None, help="simulation threads (default: all available)")
    run.add_argument("--out", default=None, help="output directory (overrides the config)")
    run.set_defaults(func=_cmd_run)

    gen = sub.add_parser("gen-data", help="write a self-generated dataset")
    gen.add_argument("--experiment", choices=("ising", "sir"), required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--rows", type=int, default=16)
    gen.add_argument("--cols", type=int, default=16)
    gen.add_argument("--theta", type=float, nargs="+", default=None)
    gen.add_argument("--n-obs", type=int, default=None)
    gen.set_defaults(func=_cmd_gen_data)

    orc = sub.add_parser("oracle", help="grid posterior mean for Ising data")
    orc.add_argument("--experiment", choices=("ising",), required=True)
    orc.add_argument("--theta-grid", required=True, help="a:b:n")
    orc.add_argument("--data", default=None, help="lattice file; otherwise data are generated")
    orc.add_argument("--prior-sd", type=float, default=5.0)
    orc.add_argument("--rows", type=int, default=16)
    orc.add_argument("--cols", type=int, default=16)
    orc.add_argument("--theta", type=float, default=0.4)
    orc.add_argument("--seed", type=int, default=11)
    orc.set_defaults(func=_cmd_oracle)

    ex = sub.add_parser("example", help="print an example config")
    ex.add_argument("name", choices=EXPERIMENTS)
    ex.set_defaults(func=_cmd_example)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RvcvError as exc:
        print(f"error [{exc.category}]: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
