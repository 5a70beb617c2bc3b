"""Acceptance suite: one pass/fail line per criterion in the terminal summary.

Run with ``pytest tests/test_acceptance.py`` (or ``python tests/test_acceptance.py``).
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from livsic.cli import main
from livsic.cocycle import Cocycle, ConstantGenerator, scan_obstructions
from livsic.config import build, parse_config
from livsic.dynamics import ShiftOfFiniteType, ToralAutomorphism
from livsic.growth import (
    build_sample_set,
    distortion_rate,
    growth_inequality_check,
    periodic_rates,
    pointwise_rates,
    subexponential_check,
    uniform_rate,
)
from livsic.ring import MatrixRing, norms

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RESULTS: dict = {}
LN2, LN3 = math.log(2), math.log(3)


def record(number: int, title: str, ok: bool, detail: str):
    RESULTS[number] = (title, bool(ok), detail)
    assert ok, f"criterion {number} ({title}): {detail}"


@pytest.fixture(scope="module")
def shift():
    return ShiftOfFiniteType.full_shift(2)


@pytest.fixture(scope="module")
def setup():
    """The shipped synthetic coboundary: window-1 t* = exp(random matrix)."""
    return build(parse_config((CONFIGS / "coboundary_sft.json").read_text()))


@pytest.fixture(scope="module")
def cob(setup):
    return Cocycle(setup.generator)


@pytest.fixture(scope="module")
def samples12(shift):
    return build_sample_set(shift, 12)


def _tstar_constant(setup):
    vals = np.stack(list(setup.transfer.table.values()))
    return float(norms(vals).max() * norms(np.linalg.inv(vals)).max())


def test_criterion_1_coboundary_roundtrip(tmp_path, cob):
    start = time.perf_counter()
    scan = scan_obstructions(cob, 12)
    code = main(["solve", "--config", str(CONFIGS / "coboundary_sft.json"), "--out", str(tmp_path)])
    elapsed = time.perf_counter() - start
    res = json.loads((tmp_path / "report.json").read_text())["results"]["solve"]
    ver, cmp = res["verification"], res["compare_known_transfer"]
    ok = (scan.max_deviation <= 1e-8 and code == 0 and res["orbit_length"] == 1 << 16
          and ver["passed"] and ver["max_residual"] <= ver["tol"] and cmp["passed"] and elapsed <= 300)
    record(1, "coboundary roundtrip", ok,
           f"max obstruction {scan.max_deviation:.1e}, residual {ver['max_residual']:.1e} <= tol {ver['tol']:.1e}, "
           f"t* spread {cmp['spread']:.1e} <= {cmp['tol']:.1e}, {elapsed:.0f} s")


def test_criterion_2_obstruction_necessity(setup, shift):
    scaled = Cocycle(setup.generator.scaled(math.exp(0.1)))
    fixed = [dev for period, _, _, dev in scan_obstructions(scaled, 1).entries]
    spectrum = periodic_rates(scaled, 12)
    worst = max(abs(e[3] - 0.1) for e in spectrum.entries)
    ok = min(fixed) >= 0.10 and worst <= 1e-9 and len(spectrum.entries) == 2 ** 13 - 2
    record(2, "obstruction necessity", ok,
           f"min fixed-point deviation {min(fixed):.4f}, max |r_p - 0.1| {worst:.1e}")


def test_criterion_3_growth_inequality(shift, cob, samples12):
    m2, r1 = MatrixRing(2), MatrixRing(1)
    from livsic.cocycle import WindowGenerator
    cases = {
        "identity": Cocycle(ConstantGenerator(shift, m2.identity)),
        "coboundary": cob,
        "2/3 window": Cocycle(WindowGenerator(shift, 0, {(0,): 2.0, (1,): 3.0}, r1)),
    }
    parts, ok = [], True
    for name, c in cases.items():
        v = growth_inequality_check(uniform_rate(c, samples12, 60), periodic_rates(c, 12), 0.05)
        ok &= v.passed
        parts.append(f"{name}: r_hat {v.r_hat:.4f} <= sup r_p {v.sup_rp:.4f} + 0.05")
        if name == "2/3 window":
            ok &= abs(v.r_hat - LN3) <= 0.01 and abs(v.sup_rp - LN3) <= 0.01
    record(3, "growth inequality", ok, "; ".join(parts))


def test_criterion_4_subexponential(setup, cob, shift):
    samples = build_sample_set(shift, 12, 1 << 14, 256)
    rep = subexponential_check(cob, 0.02, samples, 60)
    K = _tstar_constant(setup)
    ok = all(abs(s) <= 0.02 for s in rep.slopes) and all(c <= K * 1.1 for c in rep.constants)
    record(4, "sub-exponential bounds", ok,
           f"slopes {', '.join(f'{s:.1e}' for s in rep.slopes)}; constants "
           f"{', '.join(f'{c:.3f}' for c in rep.constants)} <= {1.1 * K:.3f}")


def test_criterion_5_closing_certificates(shift):
    systems = {"full 2-shift": shift, "cat map": ToralAutomorphism.cat_map()}
    rng = np.random.default_rng(2024)
    counts, ok = {}, True
    for name, system in systems.items():
        certs = []
        while len(certs) < 100:
            x = system.random_point(rng)
            found = system.find_returns(x, 2, 40, system.delta0)
            if found:
                certs.append(system.close_orbit(x, found[0]))
        ok &= all(c.bound_ok for c in certs)
        if system is shift:
            ok &= system.C == 0.5 and system.lam == LN2
            ok &= all(d <= math.ldexp(c.return_distance, -min(i, c.period - i))
                      for c in certs for i, d in enumerate(c.distances))
        counts[name] = sum(c.bound_ok for c in certs)
    record(5, "closing certificates", ok, ", ".join(f"{k}: {v}/100" for k, v in counts.items()))


def test_criterion_6_periodic_counts(shift):
    cat = ToralAutomorphism.cat_map()
    A = np.array([[2, 1], [1, 1]], dtype=object)
    ok = True
    P = np.eye(2, dtype=object)
    for n in range(1, 9):
        P = P.dot(A)
        det = abs((P[0, 0] - 1) * (P[1, 1] - 1) - P[0, 1] * P[1, 0])
        ok &= len(cat.periodic_points(n)) == det
    ok &= len(cat.periodic_points(1)) == 1 and len(cat.periodic_points(2)) == 5
    ok &= all(len(shift.periodic_points(n)) == 2 ** n for n in range(1, 13))
    record(6, "periodic-point counts", ok, "cat map n<=8 and full shift n<=12 checked")


def test_criterion_7_pointwise_rates(cob, shift):
    x0, _ = shift.dense_orbit(1 << 12)
    rates = pointwise_rates(cob, x0, 1000)[499:]
    width = float(rates.max() - rates.min())
    record(7, "pointwise growth rates", width <= 0.05, f"width {width:.2e} over n = 500..1000")


def test_criterion_8_non_coboundary(tmp_path):
    code = main(["solve", "--config", str(CONFIGS / "constant_two.json"), "--out", str(tmp_path)])
    cons = json.loads((tmp_path / "report.json").read_text())["results"]["solve"]["consistency"]
    w = cons["worst_pair"]
    gap, bound = float(w["gap"]), float(w["bound"])
    ok = code == 1 and not cons["passed"] and gap > 10 * bound
    record(8, "non-coboundary detection", ok,
           f"exit {code}, worst pair (k={w['k']}, m={w['m']}) gap {gap:.3g} vs bound {bound:.3g}")


def test_criterion_9_distortion_gate(cob, shift, samples12):
    good = distortion_rate(cob, samples12, 60)
    diag = Cocycle(ConstantGenerator(shift, MatrixRing(2).element(np.diag([2.0, 0.5]))))
    bad = distortion_rate(diag, samples12, 60)
    al = good.alpha * good.lam
    ok = good.margin >= 0.3 * al and bad.margin < 0 and bad.to_json()["status"] == "violated"
    record(9, "distortion hypothesis gate", ok,
           f"coboundary margin {good.margin:.4f} >= {0.3 * al:.4f}; diag margin {bad.margin:.4f} (violated)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
