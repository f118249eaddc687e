"""Weakly efficient points of a vector objective on a finite grid.

A grid point ``xb`` is weakly efficient when no grid point ``x`` in the
domain satisfies ``f_i(x) < f_i(xb) - tol`` for every objective ``i`` at once.
Indices throughout refer to the flattened grid (C order over the axes).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .certify import CheckResult, SearchBudget, Verdict, falsify_fn_pconvexity, falsify_set_pconvexity
from .pcore import as_p, conjugate_coefficients
from .pfuncs import ScalarFn, VectorFn
from .psets import Interval, PointCloud

MAX_GRID_POINTS = 1_000_000
DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    lo: tuple
    hi: tuple
    counts: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        counts = tuple(int(c) for c in np.atleast_1d(self.counts))
        if not (len(lo) == len(hi) == len(counts)) or not lo:
            raise ValueError("lo, hi and counts must have the same nonzero length")
        if any(c < 2 for c in counts):
            raise ValueError("every axis needs at least 2 points")
        if any(l >= h for l, h in zip(lo, hi)):
            raise ValueError("each axis needs lo < hi")
        if int(np.prod(counts)) > MAX_GRID_POINTS:
            raise ValueError(f"grid has {int(np.prod(counts))} points; the limit is {MAX_GRID_POINTS}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "counts", counts)

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def steps(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / (np.array(self.counts) - 1)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(l, h, c) for l, h, c in zip(self.lo, self.hi, self.counts)]

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def snap(self, X) -> np.ndarray:
        """Flat index of the nearest grid point for each row, or -1 when off-grid.

        A row is on-grid when every coordinate lies within half a step of the
        grid range.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lo, h = np.array(self.lo), self.steps
        k = np.rint((X - lo) / h).astype(np.int64)
        counts = np.array(self.counts)
        ok = np.all((k >= 0) & (k < counts), axis=1)
        flat = np.full(X.shape[0], -1, dtype=np.int64)
        if ok.any():
            flat[ok] = np.ravel_multi_index(tuple(k[ok].T), self.counts)
        return flat

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "counts": list(self.counts)}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(tuple(d["lo"]), tuple(d["hi"]), tuple(d["counts"]))


@dataclass
class EfficiencyReport:
    grid: GridSpec
    points: np.ndarray
    in_domain: np.ndarray
    values: np.ndarray  # NaN rows outside the domain
    weakly_efficient: tuple
    argmins: tuple
    tol: float
    structural_checks: list = field(default_factory=list)

    @property
    def excluded(self) -> int:
        return int(np.count_nonzero(~self.in_domain))

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def ew_mask(self) -> np.ndarray:
        mask = np.zeros(self.grid.size, dtype=bool)
        mask[list(self.weakly_efficient)] = True
        return mask

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "objectives": self.m,
            "tol": self.tol,
            "excluded_points": self.excluded,
            "weakly_efficient": list(self.weakly_efficient),
            "weakly_efficient_points": self.points[list(self.weakly_efficient)].tolist(),
            "argmins": [list(a) for a in self.argmins],
            "structural_checks": [c.to_dict() for c in self.structural_checks],
        }


def strictly_dominated(V: np.ndarray, tol: float = DEFAULT_TOL, chunk: int | None = None) -> np.ndarray:
    """For each row of ``V``, whether some row is smaller by more than ``tol`` in every column."""
    N = V.shape[0]
    out = np.zeros(N, dtype=bool)
    chunk = chunk or max(1, 4_000_000 // max(1, N * V.shape[1]))
    # sorting by the first objective bounds where dominators can sit
    order = np.argsort(V[:, 0], kind="stable")
    Vs = V[order]
    first = Vs[:, 0]
    for start in range(0, N, chunk):
        block = Vs[start:start + chunk]
        # only rows with f_1 < min(block f_1) - tol ... max(block f_1) - tol can dominate
        hi = np.searchsorted(first, block[:, 0].max() - tol, side="left")
        if hi == 0:
            continue
        cand = Vs[:hi]
        less = np.all(cand[None, :, :] < block[:, None, :] - tol, axis=2)
        out[order[start:start + chunk]] = less.any(axis=1)
    return out


def argmin_sets(F: VectorFn, grid: GridSpec, tol: float = DEFAULT_TOL) -> tuple:
    return _argmins(grid.points(), F, tol)[0]


def _argmins(P, F, tol):
    inside = F.domain.contains_many(P)
    idx = np.flatnonzero(inside)
    if idx.size == 0:
        raise ValueError("empty in-domain grid")
    V = F.values(P[idx])
    mins = V.min(axis=0)
    sets = tuple(tuple(idx[V[:, i] <= mins[i] + tol].tolist()) for i in range(V.shape[1]))
    return sets, inside, idx, V


def weakly_efficient_set(F: VectorFn, grid: GridSpec, tol: float = DEFAULT_TOL) -> EfficiencyReport:
    """Brute-force weak efficiency over the in-domain grid points."""
    P = grid.points()
    argmins, inside, idx, V = _argmins(P, F, tol)
    ew = idx[~strictly_dominated(V, tol)]
    values = np.full((P.shape[0], V.shape[1]), np.nan)
    values[idx] = V
    report = EfficiencyReport(grid, P, inside, values, tuple(ew.tolist()), argmins, tol)
    missing = set().union(*argmins) - set(report.weakly_efficient)
    if missing:
        raise AssertionError(f"defect: argmin indices {sorted(missing)} are not weakly efficient")
    return report


def check_union_inclusion(report: EfficiencyReport) -> CheckResult:
    ew = set(report.weakly_efficient)
    for i, am in enumerate(report.argmins):
        for j in am:
            if j not in ew:
                return CheckResult("union_inclusion", "fail", f"argmin of objective {i} not weakly efficient",
                                   {"index": j, "point": report.points[j].tolist()})
    return CheckResult("union_inclusion", "pass", f"{len(set().union(*report.argmins))} argmin points all in E_W")


def check_intersection_equality(report: EfficiencyReport) -> CheckResult:
    common = set(report.argmins[0]).intersection(*report.argmins[1:])
    union = set().union(*report.argmins)
    if not common:
        return CheckResult("intersection_equality", "not_applicable", "argmin sets have empty intersection")
    ew = set(report.weakly_efficient)
    if ew == union:
        return CheckResult("intersection_equality", "pass", f"E_W equals the union of argmins ({len(ew)} points)")
    extra = sorted(ew - union) or sorted(union - ew)
    return CheckResult("intersection_equality", "fail", "E_W differs from the union of argmins",
                       {"index": extra[0], "point": report.points[extra[0]].tolist()})


def is_Rm_p_convex(F: VectorFn, p, budget: SearchBudget | None = None, tol: float = 1e-9) -> Verdict:
    """Componentwise falsification; a witness names the failing component."""
    budget = budget or SearchBudget()
    total = 0
    for i, comp in enumerate(F.components):
        v = falsify_fn_pconvexity(comp, p, budget, tol, component=i)
        total += v.samples_used
        if v.falsified:
            return Verdict(v.witness, total, f"component {i} ({comp.label}): {v.strategy}")
    return Verdict(None, total, f"{F.m} components: {v.strategy}")


def _nonnegative(report: EfficiencyReport) -> bool:
    V = report.values[report.in_domain]
    return bool(np.all(V >= -report.tol))


def check_scaling_closure(report: EfficiencyReport, F: VectorFn | None, p, coefficient_samples: int = 33) -> CheckResult:
    """``(lam + mu) * xb`` stays weakly efficient for every ``xb`` in E_W.

    Scaled points are snapped to the grid within half a step; those leaving the
    grid range or the domain are skipped and counted.
    """
    name = "scaling_closure"
    if not _nonnegative(report):
        return CheckResult(name, "fail", "precondition: F does not map the grid into R^m_+")
    p = as_p(p)
    lams = np.linspace(0.0, 1.0, coefficient_samples)
    if p < 1:
        lams = np.append(lams, 2.0 ** (-1.0 / p))
    factors = lams + conjugate_coefficients(lams, p)
    ew = report.ew_mask
    skipped = checked = 0
    for j in report.weakly_efficient:
        xb = report.points[j]
        S = factors[:, None] * xb[None, :]
        snapped = report.grid.snap(S)
        for k, s_idx in enumerate(snapped):
            if s_idx < 0 or not report.in_domain[s_idx]:
                skipped += 1
                continue
            checked += 1
            if not ew[s_idx]:
                lam = float(lams[k])
                return CheckResult(name, "fail", f"scaled point not weakly efficient ({skipped} skipped)",
                                   {"xbar": xb.tolist(), "lam": lam, "mu": float(factors[k] - lam),
                                    "scaled": S[k].tolist()})
    return CheckResult(name, "pass", f"{checked} scaled points checked, {skipped} skipped (off grid or domain)")


def check_interval_fill(report: EfficiencyReport) -> CheckResult:
    """In 1-D, every grid point of ``(0, xb]`` (resp. ``[xb, 0)``) is weakly efficient."""
    name = "interval_fill"
    if report.grid.dim != 1:
        return CheckResult(name, "not_applicable", "interval fill is checked on 1-D grids only")
    x = report.points[:, 0]
    ew = report.ew_mask
    ew_x = x[ew]
    done = []
    pos, neg = ew_x[ew_x > 0], ew_x[ew_x < 0]
    for side, xb in (("positive", pos.max() if pos.size else None),
                     ("negative", neg.min() if neg.size else None)):
        if xb is None:
            continue
        span = (x > 0) & (x <= xb) if side == "positive" else (x < 0) & (x >= xb)
        gap = np.flatnonzero(span & report.in_domain & ~ew)
        if gap.size:
            return CheckResult(name, "fail", f"gap in the {side} fill below xbar = {xb:g}",
                               {"xbar": float(xb), "gap_point": float(x[gap[0]])})
        done.append(f"{side} side up to {xb:g}")
    if not done:
        return CheckResult(name, "not_applicable", "E_W has no nonzero point")
    return CheckResult(name, "pass", "; ".join(done))


def iterated_fill_cover(xbar: float, p, floor: float) -> list[tuple[float, float]]:
    """Intervals ``[c**k xb, c**(k-1) xb]`` with ``c = 2**((p-1)/p)`` until the floor is reached."""
    p = as_p(p)
    if p == 1:
        raise ValueError("p = 1 gives no contraction")
    c = 2.0 ** ((p - 1.0) / p)
    out = []
    hi = float(xbar)
    while abs(hi) > floor:
        out.append(tuple(sorted((c * hi, hi))))
        hi *= c
    return out


def ew_point_cloud(report: EfficiencyReport, indices: Sequence[int] | None = None) -> PointCloud:
    """E_W (or an injected index set) as a point cloud with half-step snapping."""
    idx = list(report.weakly_efficient if indices is None else indices)
    return PointCloud(tuple(map(tuple, report.points[idx])), tol=float(report.grid.steps.max()) / 2)


def check_ew_pconvexity(report: EfficiencyReport, p, budget: SearchBudget | None = None,
                        indices: Sequence[int] | None = None) -> Verdict:
    return falsify_set_pconvexity(ew_point_cloud(report, indices), p, budget or SearchBudget())


def check_zero_in_ew(report: EfficiencyReport, F: VectorFn | None = None) -> CheckResult:
    """The grid point nearest the origin is weakly efficient."""
    name = "zero_in_ew"
    zero = np.zeros(report.grid.dim)
    j = int(report.grid.snap(zero)[0])
    if j < 0:
        raise ValueError("0 lies outside the grid range")
    if not report.in_domain[j]:
        raise ValueError("the grid point nearest 0 is outside the domain")
    f0 = report.values[j]
    if np.any(f0 < -report.tol):
        return CheckResult(name, "fail", "some objective is negative at 0, contradicting F >= 0",
                           {"index": j, "values": f0.tolist()})
    if j in set(report.weakly_efficient):
        return CheckResult(name, "pass", f"grid point {report.points[j].tolist()} is weakly efficient")
    return CheckResult(name, "fail", "grid point nearest 0 is not weakly efficient",
                       {"index": j, "point": report.points[j].tolist(), "values": f0.tolist()})


# -- seeded random instances ----------------------------------------------------

def random_nonneg_objective(rng: np.random.Generator, domain: Interval, pconvex: bool = False) -> ScalarFn:
    """A nonnegative 1-D objective drawn from square / abs / hinge / linear families.

    With ``pconvex=True`` only convex members vanishing at 0 are drawn; those
    are p-convex for every p on intervals containing 0.
    """
    lo, hi = domain.a, domain.b
    a = float(rng.uniform(0.5, 3.0))
    families = ("square", "abs", "hinge_right", "hinge_left") if pconvex else \
        ("square", "abs", "hinge_right", "hinge_left", "linear")
    fam = families[int(rng.integers(len(families)))]
    c = 0.0 if pconvex else float(rng.uniform(lo, hi))
    d = 0.0 if pconvex else float(rng.uniform(0.0, 1.0))
    if fam == "square":
        fn, label = (lambda X: a * (X[:, 0] - c) ** 2 + d), f"{a:.3g}*(x-{c:.3g})^2+{d:.3g}"
    elif fam == "abs":
        fn, label = (lambda X: a * np.abs(X[:, 0] - c) + d), f"{a:.3g}*|x-{c:.3g}|+{d:.3g}"
    elif fam == "hinge_right":
        c = float(rng.uniform(0.0, hi)) if pconvex else c
        fn, label = (lambda X: a * np.maximum(0.0, X[:, 0] - c) + d), f"{a:.3g}*max(0,x-{c:.3g})+{d:.3g}"
    elif fam == "hinge_left":
        c = float(rng.uniform(lo, 0.0)) if pconvex else c
        fn, label = (lambda X: a * np.maximum(0.0, c - X[:, 0]) + d), f"{a:.3g}*max(0,{c:.3g}-x)+{d:.3g}"
    else:
        sign = 1.0 if rng.uniform() < 0.5 else -1.0
        base = lo if sign > 0 else hi
        fn, label = (lambda X: sign * a * (X[:, 0] - base) + d), f"{sign * a:.3g}*(x-{base:.3g})+{d:.3g}"
    return ScalarFn(domain, fn, label)


def random_instance(seed: int, m: int = 2, lo: float = -1.0, hi: float = 2.0, count: int = 201,
                    pconvex: bool = False) -> tuple[VectorFn, GridSpec]:
    rng = np.random.default_rng(seed)
    domain = Interval(lo, hi)
    F = VectorFn(tuple(random_nonneg_objective(rng, domain, pconvex) for _ in range(m)))
    return F, GridSpec((lo,), (hi,), (count,))


__all__: Sequence[str] = [
    "EfficiencyReport", "GridSpec", "argmin_sets", "check_ew_pconvexity", "check_intersection_equality",
    "check_interval_fill", "check_scaling_closure", "check_union_inclusion", "check_zero_in_ew",
    "ew_point_cloud", "is_Rm_p_convex", "iterated_fill_cover", "random_instance",
    "random_nonneg_objective", "strictly_dominated", "weakly_efficient_set",
]
