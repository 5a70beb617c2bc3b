"""Growth of ``s(n, x) = log |a(n, x)|``.

The maximum over the whole space is replaced by a maximum over an explicit
:class:`SampleSet` (periodic points plus points of a dense orbit), and every
report carries the description of that set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .cocycle import Cocycle
from .dynamics import BudgetError
from .ring import inverses


@dataclass
class SampleSet:
    points: list
    description: str

    def __len__(self):
        return len(self.points)


def build_sample_set(system, period_bound: int = 12, dense_length: int = 0,
                     dense_points: int = 0, x0=None) -> SampleSet:
    """Periodic points of period ``<= period_bound`` and, optionally,
    ``dense_points`` evenly spaced points of a dense orbit segment.

    If enumeration exceeds its budget the periodic part stops at the last
    complete period and the description says so.
    """
    seen, points = set(), []
    top = 0
    for n in range(1, period_bound + 1):
        try:
            found = system.periodic_points(n)
        except BudgetError:
            break
        for p in found:
            if p not in seen:
                seen.add(p)
                points.append(p)
        top = n
    parts = [f"{len(points)} periodic points of period <= {top}"]
    if top < period_bound:
        parts.append(f"enumeration budget exceeded at period {top + 1}")
    if dense_points and dense_length:
        if x0 is None:
            x0, _ = system.dense_orbit(dense_length)
        stride = max(1, dense_length // dense_points)
        dense = [system.apply(x0, i * stride) for i in range(dense_points)]
        points.extend(dense)
        parts.append(f"{len(dense)} dense-orbit points (stride {stride}, orbit length {dense_length})")
    return SampleSet(points, "; ".join(parts))


def log_norm(cocycle: Cocycle, n: int, x) -> float:
    return math.log(cocycle.evaluate(n, x).norm())


def _forward_values(cocycle, samples, n_max):
    return cocycle.generator.stacked_values(samples.points, 0, n_max)


def log_norm_table(cocycle: Cocycle, samples: SampleSet, n_max: int) -> np.ndarray:
    """``s(n, x)`` for every sample point and ``n = 1..n_max``: shape (B, n_max)."""
    return kernels.chain_log_norms(_forward_values(cocycle, samples, n_max))


def _slope(ns, ys) -> float:
    return float(np.polyfit(np.asarray(ns, dtype=float), np.asarray(ys, dtype=float), 1)[0])


@dataclass
class GrowthReport:
    n: np.ndarray
    s_hat: np.ndarray
    r_hat: float
    samples: str
    subadditivity_violations: list = field(default_factory=list)

    @property
    def rates(self) -> np.ndarray:
        return self.s_hat / self.n

    def to_json(self):
        return {
            "n_max": int(self.n[-1]),
            "r_hat": self.r_hat,
            "argmin_n": int(self.n[int(np.argmin(self.rates))]),
            "s_hat": self.s_hat.tolist(),
            "s_hat_over_n": self.rates.tolist(),
            "samples": self.samples,
            "subadditivity_violations": self.subadditivity_violations,
        }


def uniform_rate(cocycle: Cocycle, samples: SampleSet, n_max: int, slack: float = 1e-9) -> GrowthReport:
    """``r_hat = min_n s_hat(n) / n`` with ``s_hat(n)`` the max of ``s(n, .)`` over the samples."""
    if not len(samples):
        raise ValueError("empty sample set")
    if n_max < 1:
        raise ValueError("n_max must be positive")
    table = log_norm_table(cocycle, samples, n_max)
    s_hat = table.max(axis=0)
    n = np.arange(1, n_max + 1)
    r_hat = float((s_hat / n).min())
    violations = []
    for a in range(1, n_max + 1):
        for b in range(a, n_max + 1 - a):
            excess = s_hat[a + b - 1] - s_hat[a - 1] - s_hat[b - 1]
            if excess > slack:
                violations.append([a, b, float(excess)])
    return GrowthReport(n, s_hat, r_hat, samples.description, violations)


@dataclass
class PeriodicSpectrum:
    entries: list  # (period, index within enumeration, point, r_p)
    n_max: int
    truncated: bool = False

    @property
    def sup_rp(self) -> float:
        return max(e[3] for e in self.entries)

    @property
    def argmax(self):
        return max(self.entries, key=lambda e: e[3])

    def to_json(self):
        best = self.argmax
        by_period = {}
        for k, _, _, r in self.entries:
            lo, hi = by_period.get(k, (r, r))
            by_period[k] = (min(lo, r), max(hi, r))
        return {
            "n_max": self.n_max,
            "truncated": self.truncated,
            "count": len(self.entries),
            "sup_rp": self.sup_rp,
            "argmax": {"period": best[0], "point": best[2].to_json()},
            "range_by_period": {str(k): list(v) for k, v in sorted(by_period.items())},
        }


def periodic_rates(cocycle: Cocycle, n_max: int) -> PeriodicSpectrum:
    """``r_p = s(k, p) / k`` for every ``p`` with ``sigma^k p = p`` and ``k <= n_max``."""
    entries = []
    gen = cocycle.generator
    for k in range(1, n_max + 1):
        try:
            points = cocycle.system.periodic_points(k)
        except BudgetError:
            return PeriodicSpectrum(entries, k - 1, truncated=True)
        logs = kernels.chain_log_norms(gen.stacked_values(points, 0, k))[:, -1]
        entries.extend((k, i, p, float(v / k)) for i, (p, v) in enumerate(zip(points, logs)))
    return PeriodicSpectrum(entries, n_max)


@dataclass
class Verdict:
    passed: bool
    r_hat: float
    sup_rp: float
    gap: float
    tol: float

    def to_json(self):
        return {"passed": self.passed, "r_hat": self.r_hat, "sup_rp": self.sup_rp,
                "gap": self.gap, "tol": self.tol}


def growth_inequality_check(report: GrowthReport, spectrum: PeriodicSpectrum, tol: float) -> Verdict:
    """Passes when ``r_hat <= sup r_p + tol``."""
    gap = report.r_hat - spectrum.sup_rp
    return Verdict(bool(gap <= tol), report.r_hat, spectrum.sup_rp, float(gap), tol)


@dataclass
class FamilyFit:
    name: str
    log_max: np.ndarray     # max over samples of log-norm, per n
    C: float                # least C with |.| <= C exp(eps n) on the sample
    slope: float            # least-squares slope of log_max over n = 1..n_max

    def to_json(self):
        return {"name": self.name, "C": self.C, "slope": self.slope, "log_max": self.log_max.tolist()}


@dataclass
class SubexponentialReport:
    eps: float
    families: list
    samples: str

    @property
    def constants(self) -> tuple:
        return tuple(f.C for f in self.families)

    @property
    def slopes(self) -> tuple:
        return tuple(f.slope for f in self.families)

    @property
    def violated(self) -> bool:
        return any(f.slope > self.eps for f in self.families)

    def to_json(self):
        return {"eps": self.eps, "violated": self.violated, "samples": self.samples,
                "families": [f.to_json() for f in self.families]}


def family_log_norms(cocycle: Cocycle, samples: SampleSet, n_max: int) -> dict:
    """Log-norms of ``a(n,x)``, ``a(-n,x)`` and ``a(n,x)^-1`` for ``n = 1..n_max``."""
    gen, ring = cocycle.generator, cocycle.ring
    fwd = gen.stacked_values(samples.points, 0, n_max)
    back = gen.stacked_values(samples.points, -n_max, n_max)
    return {
        "forward": kernels.chain_log_norms(fwd),
        "backward": kernels.chain_log_norms(inverses(back, ring)[:, ::-1]),
        "inverse": kernels.chain_log_norms(inverses(fwd, ring), left=False),
    }


def subexponential_check(cocycle: Cocycle, eps: float, samples: SampleSet, n_max: int) -> SubexponentialReport:
    """Fitted constants for the three bounds ``|.| <= C exp(eps n)``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = np.arange(1, n_max + 1)
    fams = []
    for name, table in family_log_norms(cocycle, samples, n_max).items():
        log_max = table.max(axis=0)
        c = float(np.exp(max(0.0, float((log_max - eps * n).max()))))
        fams.append(FamilyFit(name, log_max, c, _slope(n, log_max)))
    return SubexponentialReport(eps, fams, samples.description)


@dataclass
class DistortionReport:
    n: np.ndarray
    log_distortion: np.ndarray
    rate: float
    window: tuple
    alpha: float
    lam: float
    samples: str

    @property
    def threshold(self) -> float:
        return self.alpha * self.lam / 2.0

    @property
    def margin(self) -> float:
        return self.threshold - self.rate

    @property
    def hypothesis_ok(self) -> bool:
        return self.margin > 0.0

    def refit(self) -> float:
        lo, hi = self.window
        sel = (self.n >= lo) & (self.n <= hi)
        return _slope(self.n[sel], self.log_distortion[sel])

    def to_json(self):
        return {
            "rate": self.rate, "fit_window": list(self.window), "alpha": self.alpha, "lambda": self.lam,
            "threshold": self.threshold, "margin": self.margin, "hypothesis_ok": self.hypothesis_ok,
            "status": "satisfied" if self.hypothesis_ok else "violated",
            "log_distortion": self.log_distortion.tolist(), "samples": self.samples,
        }


def distortion_rate(cocycle: Cocycle, samples: SampleSet, n_max: int,
                    alpha: float | None = None, lam: float | None = None) -> DistortionReport:
    """Slope of ``max_x log max(|a(n,x)|, |a(n,x)^-1|)`` over the upper half of ``1..n_max``."""
    fams = family_log_norms(cocycle, samples, n_max)
    per_point = np.maximum(fams["forward"], fams["inverse"])
    log_dist = per_point.max(axis=0)
    n = np.arange(1, n_max + 1)
    window = (max(1, n_max // 2), n_max)
    sel = n >= window[0]
    rate = _slope(n[sel], log_dist[sel]) if sel.sum() >= 2 else float(log_dist[-1] / n_max)
    alpha = cocycle.generator.alpha if alpha is None else alpha
    lam = cocycle.system.lam if lam is None else lam
    return DistortionReport(n, log_dist, rate, window, alpha, lam, samples.description)


@dataclass
class HyperbolicTimes:
    n: int
    ks: list
    eps: float
    r_ref: float

    @property
    def density(self) -> float:
        return len(self.ks) / self.n

    def first_unbroken(self) -> int | None:
        """Smallest ``K`` such that every ``k`` in ``[K, n]`` qualifies."""
        good = set(self.ks)
        if self.n not in good:
            return None
        k = self.n
        while k - 1 >= 1 and k - 1 in good:
            k -= 1
        return k


def hyperbolic_times(cocycle: Cocycle, x, n: int, eps: float, r_ref: float) -> HyperbolicTimes:
    """All ``1 <= k <= n`` with ``s(n, x) - s(n - k, sigma^k x) >= (r_ref - eps) k``."""
    vals = cocycle.generator.values(x, 0, n)
    # suffix products a(n-k, sigma^k x), built by multiplying on the right
    logs = kernels.chain_log_norms(vals[::-1], left=False)
    total = logs[-1]
    ks = []
    for k in range(1, n + 1):
        rest = 0.0 if k == n else logs[n - 1 - k]
        if total - rest >= (r_ref - eps) * k - 1e-12 * max(1.0, abs(total)):
            ks.append(k)
    return HyperbolicTimes(n, ks, eps, r_ref)


def pointwise_rates(cocycle: Cocycle, x, n_max: int) -> np.ndarray:
    """``s(n, x) / n`` for ``n = 1..n_max`` along one orbit."""
    logs = kernels.chain_log_norms(cocycle.generator.values(x, 0, n_max))
    return logs / np.arange(1, n_max + 1)
