"""Run configuration: JSON schema, validation, hashing.

Validation collects every error (with a JSON-pointer path) instead of
stopping at the first; the config hash covers exactly the fields that
affect numerics, so output paths and annotations do not perturb run
identity.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field

from . import kernels as _k
from . import weights as _w
from .assembly import GridSpec
from .errors import ParseError, ValidationError

COMMANDS = ("assemble", "eigs", "ratio", "sss", "poincare", "sweep")

#: fields that do not affect numerical results (excluded from the hash)
_NON_NUMERIC_KEYS = ("out", "comment", "description")

DEFAULT_BUDGETS = {"max_n": 65536, "max_nnz": 20_000_000, "max_seconds": 600.0}


@dataclass
class RunConfig:
    raw: dict
    kernel: _k.JumpKernelSpec
    nu: _k.LevyMeasureSpec
    weight: _w.WeightSpec
    grid: GridSpec
    seed: int
    budgets: dict
    eigs: dict = field(default_factory=dict)
    ratio: dict = field(default_factory=dict)
    sss: dict = field(default_factory=dict)
    poincare: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    @property
    def hash(self):
        return config_hash(self.raw)


def config_hash(raw):
    doc = {k: v for k, v in raw.items() if k not in _NON_NUMERIC_KEYS}
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _load_profile(node, path, errors, table_root=None):
    if not isinstance(node, dict):
        errors.append(f"{path}: expected an object")
        return None
    kind = node.get("kind", "power")
    try:
        if kind == "power":
            return _w.RadialProfile("power",
                                    exponent=float(node.get("exponent", 0.0)),
                                    scale=float(node.get("scale", 1.0)))
        if kind == "table":
            radii, values = [], []
            with open(node["path"]) as fh:
                for row in csv.reader(fh):
                    if not row or row[0].lstrip().startswith("#"):
                        continue
                    radii.append(float(row[0]))
                    values.append(float(row[1]))
            return _w.RadialProfile("table", radii=tuple(radii),
                                    values=tuple(values))
        errors.append(f"{path}/kind: unknown profile kind {kind!r}")
    except (KeyError, OSError, TypeError, ValueError) as exc:
        errors.append(f"{path}: {exc}")
    return None


def _build_measure(node, d, path, errors):
    if not isinstance(node, dict):
        errors.append(f"{path}: expected an object")
        return None
    kw = {"d": d, "variant": node.get("variant", "isotropic_stable")}
    for key in ("alpha", "half_angle", "alpha1", "alpha2"):
        if key in node:
            kw[key] = float(node[key])
    for key in ("d1", "d2"):
        if key in node:
            kw[key] = int(node[key])
    if "axis" in node:
        kw["axis"] = tuple(float(v) for v in node["axis"])
    if "alphas" in node:
        kw["alphas"] = tuple(float(v) for v in node["alphas"])
    if "atoms" in node:
        try:
            kw["atoms"] = tuple((tuple(float(v) for v in a[0]), float(a[1]))
                                for a in node["atoms"])
        except (TypeError, IndexError):
            errors.append(f"{path}/atoms: expected [[direction, mass], ...]")
            return None
    try:
        return _k.LevyMeasureSpec(**kw)
    except (TypeError, ValueError) as exc:
        errors.append(f"{path}: {exc}")
        return None


def parse_config(raw, base_errors=None):
    """Validate a raw dict into a RunConfig; collects all errors."""
    errors = list(base_errors or [])
    if not isinstance(raw, dict):
        raise ValidationError(["/: config must be a JSON object"])
    d = raw.get("dimension", 1)
    if not isinstance(d, int) or d < 1:
        errors.append("/dimension: must be a positive integer")
        d = 1
    kernel_node = raw.get("kernel", {"variant": "isotropic_stable", "alpha": 1.0})
    measure = _build_measure(kernel_node, d, "/kernel", errors)
    kernel = None
    if measure is not None:
        trunc = kernel_node.get("truncation", 1.0)
        if trunc in ("inf", "full"):
            trunc = math.inf
        try:
            kernel = _k.JumpKernelSpec(measure, truncation=float(trunc))
        except ValueError as exc:
            errors.append(f"/kernel/truncation: {exc}")
    if "nu" in raw:
        nu = _build_measure(raw["nu"], d, "/nu", errors)
    else:
        nu = kernel.restrict_to_unit_ball() if kernel else None

    wnode = raw.get("weight", {"p": 0.0, "q": 0.0})
    u1 = u2 = None
    if "u1" in wnode or "u2" in wnode:
        u1 = _load_profile(wnode.get("u1", {}), "/weight/u1", errors)
        u2 = _load_profile(wnode.get("u2", {}), "/weight/u2", errors)
    else:
        try:
            u1 = _w.RadialProfile("power", exponent=float(wnode.get("p", 0.0)),
                                  scale=float(wnode.get("p_scale", 1.0)))
        except ValueError as exc:
            errors.append(f"/weight/p: {exc}")
        try:
            u2 = _w.RadialProfile("power", exponent=float(wnode.get("q", 0.0)),
                                  scale=float(wnode.get("q_scale", 1.0)))
        except ValueError as exc:
            errors.append(f"/weight/q: {exc}")
    weight = None
    if u1 is not None and u2 is not None:
        weight = _w.WeightSpec(u1=u1, u2=u2)
        if kernel is not None and u2.kind == "power" \
                and u2.exponent >= kernel.min_alpha:
            errors.append(
                f"/weight/q: long-range exponent q = {u2.exponent:g} must be "
                f"< alpha = {kernel.min_alpha:g}")

    gnode = raw.get("grid", {"L": 4.0, "h": 0.5})
    grid = None
    try:
        grid = GridSpec(d=d, L=float(gnode.get("L", 4.0)),
                        h=float(gnode.get("h", 0.5)),
                        boundary_mode=gnode.get("boundary_mode", "restricted"))
    except (TypeError, ValueError) as exc:
        errors.append(f"/grid: {exc}")

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        errors.append("/seed: must be an integer")
        seed = 0
    budgets = dict(DEFAULT_BUDGETS)
    budgets.update(raw.get("budgets", {}))

    blocks = {}
    for name in ("eigs", "ratio", "sss", "poincare", "sweep"):
        node = raw.get(name, {})
        if not isinstance(node, dict):
            errors.append(f"/{name}: expected an object")
            node = {}
        blocks[name] = node
    if "l" in blocks["sss"]:
        try:
            ls = [float(v) for v in blocks["sss"]["l"]]
            if any(v < 1 for v in ls):
                errors.append("/sss/l: all l values must be >= 1")
        except (TypeError, ValueError):
            errors.append("/sss/l: expected a list of numbers")
    if "delta" in blocks["ratio"]:
        dv = blocks["ratio"]["delta"]
        if not (0.0 < float(dv) < 1.0):
            errors.append("/ratio/delta: must lie in (0, 1)")
    if grid is not None and "Ls" in blocks["sweep"]:
        try:
            for L in blocks["sweep"]["Ls"]:
                GridSpec(d=d, L=float(L), h=grid.h)
        except (TypeError, ValueError) as exc:
            errors.append(f"/sweep/Ls: {exc}")

    if errors:
        raise ValidationError(errors)
    return RunConfig(raw=raw, kernel=kernel, nu=nu, weight=weight, grid=grid,
                     seed=seed, budgets=budgets, eigs=blocks["eigs"],
                     ratio=blocks["ratio"], sss=blocks["sss"],
                     poincare=blocks["poincare"], sweep=blocks["sweep"])


def load_config(path):
    """Read, parse, and validate a JSON config file.

    Raises ParseError (with line/column) for malformed JSON and
    ValidationError (with JSON-pointer paths, all errors at once) for
    schema violations.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}",
                         line=exc.lineno, column=exc.colno)
    return parse_config(raw)
