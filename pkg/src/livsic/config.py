"""Run configuration: one JSON document per run.

Example::

    {
      "system": {"type": "sft", "alphabet": 2},
      "ring": {"type": "matrix", "dim": 2},
      "generator": {"type": "coboundary",
                    "transfer": {"type": "random_window", "radius": 1, "scale": 0.5}},
      "analysis": {"n_max": 60, "period_bound": 12, "orbit_length": 65536},
      "seed": 0
    }

Generator types: ``identity``, ``constant`` (``value``), ``window``
(``radius``, ``table`` keyed by words, optional ``exp`` to exponentiate the
entries), ``random_window`` (``radius``, ``scale``), ``expr`` (``formula``,
``constants``) and ``coboundary`` (``transfer``: another generator spec).
Any generator spec may carry ``factor`` or ``log_factor`` (multiply by
``exp(log_factor)``) and ``alpha``.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass

import numpy as np

from .cocycle import (
    CoboundaryGenerator,
    ConstantGenerator,
    ExprGenerator,
    Generator,
    WindowGenerator,
    parse_word,
    random_window_table,
    window_coboundary,
)
from .dynamics import ShiftOfFiniteType, system_from_json
from .expr import FormulaError
from .ring import MatrixRing, SingularError, exp_element, ring_from_json

ANALYSIS_DEFAULTS = {
    "n_max": 60,
    "period_bound": 12,
    "orbit_length": 1 << 16,
    "eps": 0.02,
    "delta": None,             # consistency radius; None means the coverage radius
    "obstruction_tol": 1e-8,
    "growth_tol": 0.05,
    "verify_tol": None,        # None means the coverage-derived default
    "verify_samples": 500,
    "compare_samples": 100,
    "holder_pairs": 2000,
    "returns": 100,
    "return_min": 4,
    "return_max": 40,
    "return_delta": None,      # None means delta0
    "dense_points": 64,
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class RunConfig:
    raw: dict

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def analysis(self) -> dict:
        return {**ANALYSIS_DEFAULTS, **self.raw.get("analysis", {})}

    @property
    def out(self) -> str:
        return self.raw.get("out", "out")

    def to_json(self) -> dict:
        return copy.deepcopy(self.raw)


@dataclass
class Setup:
    """Objects built from a config.  ``transfer`` is the known ``t`` of a coboundary, if any."""

    system: object
    ring: MatrixRing
    generator: Generator
    transfer: Generator | None


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, str(path))


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be an object")
    cfg = RunConfig(raw)
    validate(cfg)
    return cfg


def apply_overrides(cfg: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply ``dotted.key=value`` overrides; values are parsed as JSON when possible."""
    raw = copy.deepcopy(cfg.raw)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r}: expected key=value")
        key, text = item.split("=", 1)
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        parts = key.strip().split(".")
        if len(parts) == 1 and parts[0] in ANALYSIS_DEFAULTS:
            parts = ["analysis", parts[0]]
        node = raw
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key}: {p} is not an object")
        node[parts[-1]] = value
    out = RunConfig(raw)
    validate(out)
    return out


def validate(cfg: RunConfig) -> None:
    raw = cfg.raw
    for key in ("system", "ring", "generator"):
        if key not in raw:
            raise ConfigError(f"missing field {key!r}")
        if not isinstance(raw[key], dict):
            raise ConfigError(f"field {key!r} must be an object")
    unknown = set(raw.get("analysis", {})) - set(ANALYSIS_DEFAULTS)
    if unknown:
        raise ConfigError(f"analysis: unknown field(s) {sorted(unknown)}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 1 << 64:
        raise ConfigError("seed: must be an integer in [0, 2^64)")
    a = cfg.analysis
    for key in ("n_max", "period_bound", "orbit_length", "verify_samples", "compare_samples",
                "holder_pairs", "returns", "return_min", "return_max", "dense_points"):
        if not isinstance(a[key], int) or a[key] < 0:
            raise ConfigError(f"analysis.{key}: must be a non-negative integer")
    for key in ("eps", "obstruction_tol", "growth_tol"):
        if not isinstance(a[key], (int, float)) or a[key] < 0:
            raise ConfigError(f"analysis.{key}: must be a non-negative number")


def build(cfg: RunConfig) -> Setup:
    """System, ring and generator described by ``cfg``."""
    raw = cfg.raw
    try:
        system = system_from_json(raw["system"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"system: {exc}") from exc
    try:
        ring = ring_from_json(raw["ring"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"ring: {exc}") from exc
    rng = np.random.default_rng(cfg.seed)
    gen, transfer = _generator(raw["generator"], system, ring, rng, "generator")
    return Setup(system, ring, gen, transfer)


def _generator(spec: dict, system, ring, rng, where: str):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"{where}: expected an object with a 'type'")
    kind = spec["type"]
    alpha = float(spec.get("alpha", 1.0))
    transfer = None
    try:
        if kind == "identity":
            gen = ConstantGenerator(system, ring.identity, alpha)
        elif kind == "constant":
            gen = ConstantGenerator(system, ring.element(spec["value"]), alpha)
        elif kind in ("window", "random_window"):
            if not isinstance(system, ShiftOfFiniteType):
                raise ConfigError(f"{where}: window generators need an sft system")
            radius = int(spec.get("radius", 0))
            if kind == "window":
                table = {parse_word(k, system.alphabet): v for k, v in spec["table"].items()}
                if spec.get("exp"):
                    table = {w: exp_element(ring.element(v)).value for w, v in table.items()}
            else:
                table = random_window_table(system, radius, ring, rng, float(spec.get("scale", 0.5)))
            gen = WindowGenerator(system, radius, table, ring, alpha)
        elif kind == "expr":
            gen = ExprGenerator(system, spec["formula"], ring, spec.get("constants"), alpha)
        elif kind == "coboundary":
            transfer, _ = _generator(spec["transfer"], system, ring, rng, f"{where}.transfer")
            if isinstance(transfer, WindowGenerator):
                gen = window_coboundary(transfer)
            else:
                gen = CoboundaryGenerator(transfer)
        else:
            raise ConfigError(f"{where}.type: unknown generator type {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"{where}: missing field {exc.args[0]!r}") from exc
    except (FormulaError, SingularError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from exc
    factor = 1.0
    if "factor" in spec:
        factor *= float(spec["factor"])
    if "log_factor" in spec:
        factor *= math.exp(float(spec["log_factor"]))
    if factor != 1.0:
        gen = gen.scaled(factor)
    return gen, transfer
