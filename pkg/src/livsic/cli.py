"""Command-line front end.

Usage::

    livsic {obstructions,growth,shadow,solve,verify} --config RUN.json [--out DIR]
           [--seed N] [--override key=value ...]

Each run writes ``report.json`` (the config, mathematical results and a
separate ``metadata`` block) and ``series.csv``; ``solve`` and ``verify``
also write ``transfer.json``.  Exit codes: 0 pass, 1 mathematical failure,
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys

import numpy as np

from . import __version__, kernels
from .cocycle import Cocycle, scan_obstructions
from .config import ConfigError, RunConfig, Setup, apply_overrides, build, load_config
from .dynamics import CertificateError, TooFarError
from .jsonio import plain
from .growth import (
    build_sample_set,
    distortion_rate,
    growth_inequality_check,
    periodic_rates,
    subexponential_check,
    uniform_rate,
)
from .ring import SingularError, norms
from .transfer import (
    CoverageError,
    ExactTransfer,
    NoPairsError,
    compare_transfers,
    consistency_check,
    solve,
    verify_coboundary,
)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Run:
    """Collects results and series rows for one subcommand."""

    def __init__(self, command: str, cfg: RunConfig, out: str):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.results: dict = {}
        self.series_header: list = []
        self.series_rows: list = []
        self.passed = True

    def write(self):
        os.makedirs(self.out, exist_ok=True)
        report = {
            "command": self.command,
            "passed": self.passed,
            "config": self.cfg.to_json(),
            "results": self.results,
            "metadata": {
                "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                "version": __version__,
                "kernel_backend": kernels.BACKEND,
            },
        }
        with open(os.path.join(self.out, "report.json"), "w") as fh:
            json.dump(plain(report), fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
        with open(os.path.join(self.out, "series.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            if self.series_header:
                w.writerow(self.series_header)
            w.writerows(self.series_rows)


# --------------------------------------------------------------------------
# subcommands

def run_obstructions(run: _Run, setup: Setup):
    a = run.cfg.analysis
    scan = scan_obstructions(Cocycle(setup.generator), a["period_bound"])
    ok = scan.max_deviation <= a["obstruction_tol"]
    run.results["obstructions"] = {
        "period_bound": a["period_bound"],
        "points": len(scan.entries),
        "max_deviation": scan.max_deviation,
        "min_deviation": min((e[3] for e in scan.entries), default=0.0),
        "max_deviation_by_period": {str(k): v for k, v in sorted(scan.by_period().items())},
        "tol": a["obstruction_tol"],
        "passed": ok,
    }
    run.series_header = ["period", "point_id", "deviation"]
    run.series_rows = [[p, i, repr(d)] for p, i, _, d in scan.entries]
    run.passed &= ok


def run_growth(run: _Run, setup: Setup):
    a = run.cfg.analysis
    cocycle = Cocycle(setup.generator)
    system = setup.system
    x0 = _dense_point(system, a["orbit_length"], run.cfg.seed) if a["dense_points"] else None
    samples = build_sample_set(system, a["period_bound"], a["orbit_length"], a["dense_points"], x0)
    report = uniform_rate(cocycle, samples, a["n_max"])
    spectrum = periodic_rates(cocycle, a["period_bound"])
    verdict = growth_inequality_check(report, spectrum, a["growth_tol"])
    sub = subexponential_check(cocycle, a["eps"], samples, a["n_max"])
    dist = distortion_rate(cocycle, samples, a["n_max"])
    run.results.update({
        "growth": report.to_json(),
        "periodic_spectrum": spectrum.to_json(),
        "inequality": verdict.to_json(),
        "subexponential": sub.to_json(),
        "distortion": dist.to_json(),
    })
    fam = {f.name: f.log_max for f in sub.families}
    run.series_header = ["n", "s_hat", "s_hat_over_n", "log_distortion",
                         "log_max_forward", "log_max_backward", "log_max_inverse"]
    run.series_rows = [
        [int(n), repr(float(s)), repr(float(s / n)), repr(float(d)),
         repr(float(fam["forward"][i])), repr(float(fam["backward"][i])), repr(float(fam["inverse"][i]))]
        for i, (n, s, d) in enumerate(zip(report.n, report.s_hat, dist.log_distortion))
    ]
    run.passed &= verdict.passed


def run_shadow(run: _Run, setup: Setup):
    a = run.cfg.analysis
    system = setup.system
    rng = np.random.default_rng(run.cfg.seed)
    delta = a["return_delta"] if a["return_delta"] is not None else system.delta0
    certs, failures, tries = [], [], 0
    while len(certs) + len(failures) < a["returns"] and tries < 50 * max(1, a["returns"]):
        tries += 1
        x = system.random_point(rng)
        found = system.find_returns(x, a["return_min"], a["return_max"], delta)
        if not found:
            continue
        try:
            certs.append(system.close_orbit(x, found[0]))
        except (CertificateError, TooFarError) as exc:
            failures.append({"period": found[0], "error": str(exc)})
    if not certs and not failures:
        raise NoReturnsError(f"no returns within {delta:g} for periods {a['return_min']}..{a['return_max']}")
    fit = _closing_fit(system, certs)
    run.results["shadow"] = {
        "configured": system.closing_constants,
        "measured": fit,
        "certificates": len(certs),
        "all_bound_ok": all(c.bound_ok for c in certs) and not failures,
        "failures": failures,
        "worst_margin": min((min(c.margins()) for c in certs), default=None),
        "examples": [c.to_json() for c in certs[:3]],
    }
    run.series_header = ["certificate", "period", "i", "distance", "bound"]
    run.series_rows = [[j, c.period, i, repr(d), repr(b)]
                       for j, c in enumerate(certs) for i, (d, b) in enumerate(zip(c.distances, c.bounds()))]
    run.passed &= not failures


class NoReturnsError(RuntimeError):
    pass


def _closing_fit(system, certs) -> dict:
    """``lambda`` from the decay of ``dist_i / return_distance`` in ``min(i, n - i)``,
    and the least ``C`` that makes the configured-rate bound hold."""
    ms, rs = [], []
    for c in certs:
        if c.return_distance <= 0:
            continue
        n = c.period
        for i, d in enumerate(c.distances):
            ms.append(min(i, n - i))
            rs.append(d / c.return_distance)
    if not ms:
        return {"lambda": None, "C": 0.0, "pairs": 0}
    ms, rs = np.array(ms), np.array(rs)
    C = float((rs * np.exp(system.lam * ms)).max() / 2.0)
    levels = np.unique(ms)
    env = np.array([rs[ms == m].max() for m in levels])
    good = env > 0
    lam = None
    if good.sum() >= 2:
        lam = float(-np.polyfit(levels[good], np.log(env[good]), 1)[0])
    return {"lambda": lam, "C": C, "pairs": int(len(ms))}


def _dense_point(system, length: int, seed: int):
    return system.dense_orbit(length, seed=seed)[0]


def run_solve(run: _Run, setup: Setup):
    a = run.cfg.analysis
    system = setup.system
    cocycle = Cocycle(setup.generator)
    rng = np.random.default_rng(run.cfg.seed)
    length = a["orbit_length"]
    x0, coverage = system.dense_orbit(length, seed=run.cfg.seed)
    table = solve(cocycle, length, x0, coverage, a["holder_pairs"], rng)
    delta = a["delta"] if a["delta"] is not None else table.coverage_radius
    try:
        consistency = consistency_check(table, cocycle, delta, horizon=60, rng=rng)
        cons_json = consistency.to_json()
    except NoPairsError as exc:
        consistency, cons_json = None, {"passed": False, "error": str(exc)}
    report = verify_coboundary(table, cocycle, a["verify_samples"], a["verify_tol"], rng, consistency)
    ok = report.passed and consistency is not None and consistency.passed
    results = {
        "orbit_length": length,
        "coverage_radius": table.coverage_radius,
        "holder_fit": table.holder.to_json(),
        "consistency": cons_json,
        "verification": {k: v for k, v in report.to_json().items() if k != "consistency"},
    }
    if setup.transfer is not None:
        try:
            cmp = compare_transfers(table, ExactTransfer(setup.transfer), setup.ring, a["compare_samples"], rng)
            results["compare_known_transfer"] = cmp.to_json()
            ok &= cmp.passed
        except (CoverageError, SingularError) as exc:
            results["compare_known_transfer"] = {"passed": False, "error": str(exc)}
            ok = False
    results["passed"] = bool(ok)
    run.results["solve"] = results
    table.save(os.path.join(run.out, "transfer.json"))
    run.series_header = ["k", "log_norm_t"]
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(norms(table.values))
    run.series_rows = [[k, repr(float(v))] for k, v in enumerate(logs)]
    run.passed &= bool(ok)


def run_verify(run: _Run, setup: Setup):
    """End to end: obstructions, growth, closing certificates and the solver."""
    steps = [("obstructions", run_obstructions), ("growth", run_growth),
             ("shadow", run_shadow), ("solve", run_solve)]
    summary = {}
    for name, fn in steps:
        before = run.passed
        run.passed = True
        fn(run, setup)
        summary[name] = run.passed
        run.passed = before and run.passed
    run.results["summary"] = summary


COMMANDS = {
    "obstructions": run_obstructions,
    "growth": run_growth,
    "shadow": run_shadow,
    "solve": run_solve,
    "verify": run_verify,
}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="livsic", description="Livšic-type analysis of Banach-ring cocycles.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="run configuration (JSON)")
    p.add_argument("--out", help="output directory (default: config 'out' or ./out)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value, e.g. analysis.n_max=40 (repeatable)")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        cfg = load_config(args.config)
        overrides = list(args.override)
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        cfg = apply_overrides(cfg, overrides)
        setup = build(cfg)
    except ConfigError as exc:
        print(f"livsic: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    run = _Run(args.command, cfg, args.out or cfg.out)
    os.makedirs(run.out, exist_ok=True)
    try:
        COMMANDS[args.command](run, setup)
    except (NoReturnsError, NoPairsError, CoverageError, SingularError, CertificateError) as exc:
        run.results["error"] = f"{type(exc).__name__}: {exc}"
        run.passed = False
    run.write()
    status = "PASS" if run.passed else "FAIL"
    print(f"livsic {args.command}: {status} (report: {os.path.join(run.out, 'report.json')})")
    return EXIT_PASS if run.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
