"""Instance files: JSON schema validation, name resolution and object construction.

Functions may be catalog entries or expressions in a small arithmetic grammar
over the coordinates ``x1 .. xn`` (``x`` is an alias of ``x1``): numbers,
``+ - * /``, ``^`` or ``**`` for powers, ``abs(...)`` and ``sqrt(...)``.
"""
from __future__ import annotations

import ast
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .pfuncs import CATALOG, ScalarFn, VectorFn, from_catalog
from .psets import (Ball, Intersection, Interval, MinkowskiSum, OrthantCone, PointCloud, Scale,
                    SetDescriptor, Tube, parse_q)
from .weff import GridSpec

SCHEMA_VERSION = 1


class InstanceError(ValueError):
    """Invalid instance; ``where`` is a ``file:line:col`` or a field path."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


# -- expressions ----------------------------------------------------------------

_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide, ast.Pow: np.power}
_FUNCS = {"abs": np.abs, "sqrt": np.sqrt}
_VAR = re.compile(r"^x(\d*)$")


def compile_expression(text: str, dim: int):
    """Compile an expression into a vectorised ``(N, dim) -> (N,)`` function."""
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            v = float(node.value)
            return lambda X: np.full(X.shape[0], v)
        if isinstance(node, ast.Name):
            m = _VAR.match(node.id)
            if not m:
                raise ValueError(f"unknown name {node.id!r} in expression {text!r}")
            i = int(m.group(1) or 1) - 1
            if not 0 <= i < dim:
                raise ValueError(f"variable {node.id!r} out of range for dimension {dim}")
            return lambda X: X[:, i]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op, lhs, rhs = _BINOPS[type(node.op)], build(node.left), build(node.right)
            return lambda X: op(lhs(X), rhs(X))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = build(node.operand)
            return (lambda X: -inner(X)) if isinstance(node.op, ast.USub) else inner
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and len(node.args) == 1 and not node.keywords):
            fn, arg = _FUNCS[node.func.id], build(node.args[0])
            return lambda X: fn(arg(X))
        raise ValueError(f"unsupported construct {ast.dump(node)[:40]!r} in expression {text!r}")

    return build(tree)


# -- loading --------------------------------------------------------------------

def _schema() -> dict:
    return json.loads(resources.files("pconvex").joinpath("schema/instance.schema.json").read_text())


def _path(parts) -> str:
    out = ""
    for part in parts:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def bundled_instances() -> dict[str, Path]:
    root = resources.files("pconvex").joinpath("instances")
    return {p.name: Path(str(p)) for p in root.iterdir() if p.name.endswith(".json")}


def resolve_instance_path(path: str | Path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    bundled = bundled_instances()
    name = p.name if p.name.endswith(".json") else p.name + ".json"
    if name in bundled:
        return bundled[name]
    raise InstanceError(str(path), "no such file (and not a bundled instance name)")


def digest(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class Instance:
    raw: dict
    source: str
    sets: dict[str, SetDescriptor] = field(default_factory=dict)
    functions: dict[str, ScalarFn] = field(default_factory=dict)
    problems: dict[str, dict] = field(default_factory=dict)

    @property
    def checks(self) -> list[dict]:
        return self.raw.get("checks", [])

    @property
    def digest(self) -> str:
        return digest(self.raw)

    def set_ref(self, ref, where: str) -> SetDescriptor:
        return _build_set(ref, self.sets, where)

    def vector_fn(self, problem: str) -> VectorFn:
        return self.problems[problem]["F"]


def load_instance(path: str | Path) -> Instance:
    path = resolve_instance_path(path)
    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return build_instance(raw, str(path))


def build_instance(raw: dict, source: str = "<instance>") -> Instance:
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        # prefer the most specific message inside oneOf / if-then branches
        if err.context:
            err = max(err.context, key=lambda e: len(e.absolute_path))
        raise InstanceError(f"{source}: field {_path(err.absolute_path)}", err.message)

    inst = Instance(raw, source)
    for name, node in raw.get("sets", {}).items():
        inst.sets[name] = _build_set(node, inst.sets, f"{source}: field sets.{name}")
    for name, node in raw.get("functions", {}).items():
        inst.functions[name] = _build_function(name, node, inst, f"{source}: field functions.{name}")
    for name, node in raw.get("problems", {}).items():
        inst.problems[name] = _build_problem(name, node, inst, f"{source}: field problems.{name}")
    for i, check in enumerate(inst.checks):
        _validate_check(check, inst, f"{source}: field checks[{i}]")
    names = [c["name"] for c in inst.checks]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise InstanceError(f"{source}: field checks", f"duplicate check names {sorted(dup)}")
    return inst


def _ext(v) -> float:
    return {"inf": math.inf, "-inf": -math.inf}.get(v, v) if isinstance(v, str) else float(v)


def _build_set(node, named: dict, where: str) -> SetDescriptor:
    if isinstance(node, str):
        if node not in named:
            raise InstanceError(where, f"unknown set {node!r}")
        return named[node]
    t = node["type"]
    try:
        if t == "interval":
            return Interval.from_kind(node.get("kind", "[]"), _ext(node["a"]), _ext(node["b"]))
        if t == "ball":
            return Ball(tuple(np.atleast_1d(node["center"]).tolist()), node["radius"], parse_q(node.get("q", 2)),
                        closed=node.get("boundary", "closed") == "closed")
        if t == "point_cloud":
            return PointCloud(tuple(tuple(np.atleast_1d(pt).tolist()) for pt in node["points"]), node.get("tol", 0.0))
        if t == "orthant":
            return OrthantCone(node["n"])
        if t == "intersection":
            return Intersection(tuple(_build_set(c, named, f"{where}.children[{i}]")
                                      for i, c in enumerate(node["children"])))
        if t == "sum":
            return MinkowskiSum(_build_set(node["left"], named, f"{where}.left"),
                                _build_set(node["right"], named, f"{where}.right"),
                                node.get("witness_budget", 10_000))
        if t == "scale":
            return Scale(node["nu"], _build_set(node["child"], named, f"{where}.child"))
        if t == "tube":
            return Tube(_build_set(node["child"], named, f"{where}.child"), node["delta"], parse_q(node.get("q", 2)))
    except InstanceError:
        raise
    except ValueError as exc:
        raise InstanceError(where, str(exc)) from None
    raise InstanceError(where, f"unknown set type {t!r}")


def _build_function(name: str, node: dict, inst: Instance, where: str) -> ScalarFn:
    domain = inst.set_ref(node["domain"], f"{where}.domain") if "domain" in node else None
    try:
        if "catalog" in node:
            entry = CATALOG[node["catalog"]]
            params = {}
            for param in entry.params:
                if param not in node:
                    raise InstanceError(f"{where}.{param}", f"required by catalog entry {entry.name!r}")
                params[param] = parse_q(node[param]) if param == "q" else node[param]
            if entry.default_domain is None and domain is None:
                raise InstanceError(f"{where}.domain", f"catalog entry {entry.name!r} needs a domain")
            f = from_catalog(entry.name, domain, **params)
        else:
            f = ScalarFn(domain, compile_expression(node["expr"], domain.dim), node["expr"])
    except InstanceError:
        raise
    except ValueError as exc:
        raise InstanceError(where, str(exc)) from None
    return ScalarFn(f.domain, f.fn, node.get("label", name))


def _build_problem(name: str, node: dict, inst: Instance, where: str) -> dict:
    comps = []
    for i, fname in enumerate(node["objectives"]):
        if fname not in inst.functions:
            raise InstanceError(f"{where}.objectives[{i}]", f"unknown function {fname!r}")
        comps.append(inst.functions[fname])
    if "domain" in node:
        dom = inst.set_ref(node["domain"], f"{where}.domain")
        comps = [ScalarFn(dom, c.fn, c.label) for c in comps]
    try:
        F = VectorFn(tuple(comps))
        grid = GridSpec.from_dict(node["grid"])
    except ValueError as exc:
        raise InstanceError(where, str(exc)) from None
    if grid.dim != F.domain.dim:
        raise InstanceError(f"{where}.grid", f"grid dimension {grid.dim} != domain dimension {F.domain.dim}")
    return {"F": F, "grid": grid, "p": node.get("p"), "tol": node.get("tol", 1e-12),
            "objectives": list(node["objectives"])}


_REQUIRED = {
    "falsify_set": ("set", "p"),
    "falsify_fn": ("function", "p"),
    "jensen_gap": ("function", "x", "y", "lambda", "p"),
    "ball_counterexample": ("center", "delta", "p", "beta", "epsilon"),
    "cone_equivalence": ("set", "p"),
    "downgrade": ("set", "p", "p1"),
    "segment_interior": ("set", "p", "x", "y", "probe_radius"),
    "consequences": ("function", "p"),
    "homogeneous_convexity": ("function", "p"),
    "rm_pconvex": ("problem",),
    "efficiency": ("problem",),
}


def _validate_check(check: dict, inst: Instance, where: str):
    for key in _REQUIRED[check["kind"]]:
        if key not in check:
            raise InstanceError(f"{where}.{key}", f"required for checks of kind {check['kind']!r}")
    if "set" in check:
        inst.set_ref(check["set"], f"{where}.set")
    if "function" in check and check["function"] not in inst.functions:
        raise InstanceError(f"{where}.function", f"unknown function {check['function']!r}")
    if "problem" in check:
        if check["problem"] not in inst.problems:
            raise InstanceError(f"{where}.problem", f"unknown problem {check['problem']!r}")
        if "p" not in check and inst.problems[check["problem"]]["p"] is None and check["kind"] == "rm_pconvex":
            raise InstanceError(f"{where}.p", "no p given here or on the problem")
