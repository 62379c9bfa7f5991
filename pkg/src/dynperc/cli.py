"""Command-line entry point: ``dynperc <command> [--config F] [--seed S] ...``."""
from __future__ import annotations

import argparse
import sys
import time
import warnings

import numpy as np

from . import estimators as est
from .config import COMMANDS, ConfigError, ExperimentSpec, build_spec, load_config
from .io import OutputDir, build_tag

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


class HardFailure(RuntimeError):
    """A check that must hold did not."""


def _series_rows(bundle: dict):
    for key in sorted(bundle):
        yield from bundle[key].rows()


SERIES_COLUMNS = ["quantity", "t", "value", "se", "samples", "rejected"]


def run_sweep(spec: ExperimentSpec, out: OutputDir, header: dict, tag: str) -> dict:
    bundle = est.sweep(spec.params, spec.workers, spec.options["truncated"])
    out.write_csv("series.csv", SERIES_COLUMNS, _series_rows(bundle), header, tag)
    ov = bundle["chem_overlap"]
    integ = est.overlap_integral(ov.ts, ov.values, ov.se)
    out.write_csv("overlap_integral.csv", ["trapezoid", "lower", "upper", "monotone", "note"],
                  [[integ.value, integ.lower, integ.upper, integ.monotone, integ.note]], header, tag)
    return {"rejected": ov.rejected, "samples_used": ov.samples}


def run_coincidence(spec, out, header, tag) -> dict:
    s = est.coincidence_rate(spec.params, spec.options["ts"], spec.workers)
    out.write_csv("coincidence.csv", SERIES_COLUMNS, s.rows(), header, tag)
    return {"rejected": s.rejected, "samples_used": s.samples}


def run_oracle(spec, out, header, tag) -> dict:
    from . import oracle

    path = spec.options["instances"]
    instances = oracle.load_instances(path) if path else oracle.default_instances()
    rows = []
    lines = []
    try:
        for rep in oracle.run_all(instances):
            rows.append([rep.instance, "PASS", rep.polynomials.get("cov(t)", "")])
            lines += rep.lines()
    except oracle.IdentityFailure as exc:
        raise HardFailure(str(exc)) from exc
    out.write_csv("oracle.csv", ["instance", "status", "covariance"], rows, header, tag)
    out.write_text("oracle_report.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return {"instances": len(rows)}


def run_radius(spec, out, header, tag) -> dict:
    o = spec.options
    rows, tab = est.radius_survey(spec.params, o["t"], o["edges_per_sample"], o["interior"],
                                  spec.workers)
    out.write_csv("radius_tail.csv",
                  ["ell", "count_ge", "survival", "in_fit", "slope", "intercept", "r2"],
                  [[int(l), int(c), float(s), bool(m), tab.slope, tab.intercept, tab.r2]
                   for l, c, s, m in zip(tab.ells, tab.counts, tab.survival, tab.fit_mask)],
                  header, tag)
    out.write_csv("radius_edges.csv", ["sample", "edge", "r", "scanned"],
                  [[i, int(e), int(r), int(s)] for i, edges, rr, ss in rows
                   for e, r, s in zip(edges, rr, ss)], header, tag)
    loc = est.locality_survey(spec.params, o["t"], o["ells"], o["locality_trials"], o["interior"],
                              spec.workers)
    out.write_csv("radius_locality.csv", ["trial", "edge", "ell", "agree"], loc, header, tag)
    bad = sum(not x[3] for x in loc)
    if bad:
        raise HardFailure(f"locality check disagreed in {bad} trials")
    return {"edges": tab.total, "overflow": tab.overflow, "locality_disagreements": bad}


def run_animal(spec, out, header, tag) -> dict:
    from .animal import animal_bound_check

    o = spec.options
    rows = animal_bound_check(spec.params.d, [int(v) for v in o["Ls"]], [int(v) for v in o["Ns"]],
                              float(o["q"]), spec.params.samples, spec.params.seed,
                              int(o["dependence"]))
    out.write_csv("animal.csv", ["L", "N", "q", "mean", "se", "ratio", "samples"],
                  [[r.L, r.N, r.q, r.mean, r.se, r.ratio, r.samples] for r in rows], header, tag)
    return {"cells": len(rows)}


def run_regime(spec, out, header, tag) -> dict:
    rep = est.regime_sweep(spec.params, spec.options["betas"], spec.workers)
    cols = ["n", "beta", "t", "t_hat", "corr", "corr_se", "overlap_fraction", "overlap_se", "note"]
    out.write_csv("regime.csv", cols,
                  [[rep.n, r.beta, r.t, rep.t_hat, r.corr, r.corr_se, r.overlap_fraction,
                    r.overlap_se, r.note] for r in rep.rows], header, tag)
    return {"rejected": rep.rejected, "t_hat": rep.t_hat}


def _scaling(name, fn):
    def run(spec, out, header, tag):
        rows = fn(spec.params, [int(v) for v in spec.options["ns"]], spec.workers)
        out.write_csv(f"{name}.csv",
                      ["n", "mean", "se", "per_n", "per_n_se", "samples", "rejected", "note"],
                      [[r.n, r.mean, r.se, r.per_n, r.per_n_se, r.samples, r.rejected, r.note]
                       for r in rows], header, tag)
        return {"rejected": sum(r.rejected for r in rows)}
    return run


RUNNERS = {
    "sweep": run_sweep,
    "coincidence": run_coincidence,
    "oracle": run_oracle,
    "radius": run_radius,
    "animal": run_animal,
    "regime": run_regime,
    "time-constant": _scaling("time_constant", est.time_constant),
    "variance-scaling": _scaling("variance_scaling", est.variance_scaling),
}


def run(spec: ExperimentSpec) -> int:
    """Run one experiment into ``spec.out``; returns the exit status."""
    tag = build_tag()
    header = {"command": spec.command, "params": spec.params.to_dict(), "options": spec.options}
    start = time.time()
    try:
        with OutputDir(spec.out) as out:
            extra = RUNNERS[spec.command](spec, out, header, tag)
            manifest = {"spec": spec.to_dict(), "build": tag, "seed": spec.params.seed,
                        "wall_time_s": round(time.time() - start, 3), **extra}
            out.write_json("manifest.json", manifest)
    except HardFailure as exc:
        print(f"hard failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (est.EstimationError, FileExistsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynperc",
                                     description="Dynamical percolation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--out", help="output directory (must not exist)")
        p.add_argument("--workers", type=int)
    return parser


def spec_from_args(args) -> ExperimentSpec:
    base = load_config(args.config, args.command) if args.config else None
    data = base.to_dict() if base else {"command": args.command}
    data["command"] = args.command
    params = dict(data.get("params", {}))
    if args.seed is not None:
        params["seed"] = args.seed
    if args.samples is not None:
        params["samples"] = args.samples
    if params:
        data["params"] = params
    if args.out is not None:
        data["out"] = args.out
    if args.workers is not None:
        data["workers"] = args.workers
    return build_spec(data, args.command)


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            spec = spec_from_args(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    np.seterr(all="ignore")
    return run(spec)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
