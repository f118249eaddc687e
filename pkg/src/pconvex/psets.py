"""Set descriptors over R^n.

Each descriptor answers membership queries (vectorised over rows), carries a
finite bounding box used as a sampling domain, and can produce a sample of
its own members.  Primitive sets decide membership exactly; the open/closed
distinction is honoured literally with strict or non-strict comparisons.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .pcore import as_vector

INF = math.inf

# Half-width of the sampling box along unbounded directions.
UNBOUNDED_SPAN = 10.0
# Member sample used by sampled distance estimates.
DISTANCE_SAMPLES = 4096
# Grid points are capped so that high-dimensional boxes stay tractable.
MAX_GRID_POINTS = 200_000


class DistanceInestimable(RuntimeError):
    pass


def parse_q(q) -> float:
    """Normalise a norm exponent; accepts numbers, ``"inf"`` or ``None`` (=inf)."""
    if q is None or (isinstance(q, str) and q.lower() in ("inf", "infinity")):
        return INF
    q = float(q)
    if not q >= 1.0:
        raise ValueError(f"q must satisfy q >= 1, got {q}")
    return q


def q_norm(x, q=2.0) -> float:
    """The l_q norm of a vector; ``q = inf`` gives the max-abs coordinate."""
    return float(np.linalg.norm(as_vector(x), ord=parse_q(q)))


def row_norms(X: np.ndarray, q: float) -> np.ndarray:
    return np.linalg.norm(np.atleast_2d(X), ord=q, axis=1)


def box_grid(lo: np.ndarray, hi: np.ndarray, per_axis: int) -> np.ndarray:
    """Tensor grid over a box, inclusive of both faces."""
    n = lo.size
    if per_axis < 1:
        return np.empty((0, n))
    while per_axis > 1 and per_axis**n > MAX_GRID_POINTS:
        per_axis -= 1
    axes = [np.linspace(l, h, per_axis) if h > l else np.array([l]) for l, h in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


class SetDescriptor:
    """Base class; subclasses implement ``dim``, ``bbox`` and ``contains_many``."""

    dim: int

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def contains_many(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def membership_is_exact(self) -> bool:
        return True

    def contains(self, x) -> bool:
        x = as_vector(x)
        if x.size != self.dim:
            raise ValueError(f"point has dimension {x.size}, set has dimension {self.dim}")
        return bool(self.contains_many(x[None, :])[0])

    def exact_distance(self, X: np.ndarray, q: float) -> np.ndarray | None:
        """Closed-form ``d_q`` for each row of ``X``, or ``None`` if unavailable."""
        return None

    def members(self, rng: np.random.Generator, grid_per_axis: int = 0,
                random_samples: int = 0) -> np.ndarray:
        """Grid points then uniform box samples that pass the membership test."""
        lo, hi = self.bbox
        parts = [box_grid(lo, hi, grid_per_axis)]
        if random_samples > 0:
            parts.append(rng.uniform(lo, hi, size=(random_samples, self.dim)))
        cands = np.vstack(parts)
        if cands.shape[0] == 0:
            return cands
        return cands[self.contains_many(cands)]

    @cached_property
    def _distance_sample(self) -> np.ndarray:
        rng = np.random.default_rng(0)
        per_axis = max(2, int(round(DISTANCE_SAMPLES ** (1.0 / self.dim))))
        return self.members(rng, per_axis, DISTANCE_SAMPLES)

    @cached_property
    def _distance_tree(self) -> cKDTree:
        return cKDTree(self._distance_sample)

    def _check_dims(self, *children: "SetDescriptor"):
        dims = {c.dim for c in children}
        if len(dims) != 1:
            raise ValueError(f"children have mismatched ambient dimensions {sorted(dims)}")


def _rows(X, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, dim) if dim == 1 else X[None, :]
    if X.shape[1] != dim:
        raise ValueError(f"points have dimension {X.shape[1]}, set has dimension {dim}")
    return X


_INTERVAL_KINDS = {"[]": (True, True), "[)": (True, False), "(]": (False, True), "()": (False, False)}


@dataclass(frozen=True)
class Interval(SetDescriptor):
    """A real interval; either endpoint may be infinite (and is then open)."""

    a: float
    b: float
    left_closed: bool = True
    right_closed: bool = True

    dim = 1

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if math.isnan(a) or math.isnan(b) or a > b:
            raise ValueError(f"interval requires a <= b, got a={a}, b={b}")
        if (math.isinf(a) and self.left_closed) or (math.isinf(b) and self.right_closed):
            raise ValueError("an infinite endpoint cannot be closed")
        if a == b and not (self.left_closed and self.right_closed):
            raise ValueError("degenerate interval must be closed on both sides")

    @classmethod
    def from_kind(cls, kind: str, a: float, b: float) -> "Interval":
        try:
            lc, rc = _INTERVAL_KINDS[kind]
        except KeyError:
            raise ValueError(f"interval kind must be one of {sorted(_INTERVAL_KINDS)}, got {kind!r}") from None
        return cls(a, b, lc and not math.isinf(float(a)), rc and not math.isinf(float(b)))

    @property
    def kind(self) -> str:
        return ("[" if self.left_closed else "(") + ("]" if self.right_closed else ")")

    def __str__(self) -> str:
        return f"{self.kind[0]}{self.a:g}, {self.b:g}{self.kind[1]}"

    @cached_property
    def bbox(self):
        a, b = self.a, self.b
        if math.isinf(a) and math.isinf(b):
            lo, hi = -UNBOUNDED_SPAN, UNBOUNDED_SPAN
        elif math.isinf(a):
            lo, hi = min(b, 0.0) - UNBOUNDED_SPAN, b
        elif math.isinf(b):
            lo, hi = a, max(a, 0.0) + UNBOUNDED_SPAN
        else:
            lo, hi = a, b
        return np.array([lo]), np.array([hi])

    def contains_many(self, X):
        x = _rows(X, 1)[:, 0]
        left = x >= self.a if self.left_closed else x > self.a
        right = x <= self.b if self.right_closed else x < self.b
        return left & right

    def exact_distance(self, X, q):
        x = _rows(X, 1)[:, 0]
        return np.maximum(0.0, np.maximum(self.a - x, x - self.b))


@dataclass(frozen=True, eq=False)
class Ball(SetDescriptor):
    """Open or closed l_q ball."""

    center: tuple
    radius: float
    q: float = 2.0
    closed: bool = True

    def __post_init__(self):
        c = tuple(float(v) for v in as_vector(self.center))
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "q", parse_q(self.q))
        if not self.radius > 0:
            raise ValueError(f"ball radius must be > 0, got {self.radius}")
        object.__setattr__(self, "radius", float(self.radius))

    def __eq__(self, other):
        return (isinstance(other, Ball) and self.center == other.center and self.radius == other.radius
                and self.q == other.q and self.closed == other.closed)

    def __hash__(self):
        return hash((self.center, self.radius, self.q, self.closed))

    @property
    def dim(self) -> int:
        return len(self.center)

    @cached_property
    def c(self) -> np.ndarray:
        return np.array(self.center)

    @cached_property
    def bbox(self):
        # every l_q ball sits inside the l_inf ball of the same radius
        return self.c - self.radius, self.c + self.radius

    def contains_many(self, X):
        d = row_norms(_rows(X, self.dim) - self.c, self.q)
        return d <= self.radius if self.closed else d < self.radius

    def exact_distance(self, X, q):
        if q != self.q and self.dim != 1:
            return None
        return np.maximum(0.0, row_norms(_rows(X, self.dim) - self.c, q) - self.radius)


@dataclass(frozen=True, eq=False)
class PointCloud(SetDescriptor):
    """A finite set of points.

    With ``tol > 0`` membership means lying within ``tol`` (max-norm) of some
    point, which turns a grid subset into a set with half-step resolution.
    """

    points: tuple
    tol: float = 0.0

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.points, dtype=float))
        if arr.size == 0:
            raise ValueError("point cloud needs at least one point")
        if not np.all(np.isfinite(arr)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "points", tuple(tuple(map(float, row)) for row in arr))
        if self.tol < 0:
            raise ValueError("tol must be >= 0")

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.points)

    @property
    def dim(self) -> int:
        return self.array.shape[1]

    @cached_property
    def bbox(self):
        return self.array.min(axis=0) - self.tol, self.array.max(axis=0) + self.tol

    def _gaps(self, X) -> np.ndarray:
        # componentwise |x - pt| for each (row, point) pair
        return np.abs(_rows(X, self.dim)[:, None, :] - self.array[None, :, :])

    def contains_many(self, X):
        X = _rows(X, self.dim)
        out = np.zeros(X.shape[0], dtype=bool)
        for start in range(0, X.shape[0], 4096):
            gaps = self._gaps(X[start:start + 4096])
            if self.tol == 0.0:
                out[start:start + 4096] = np.any(np.all(gaps == 0.0, axis=2), axis=1)
            else:
                out[start:start + 4096] = np.any(gaps.max(axis=2) <= self.tol, axis=1)
        return out

    def exact_distance(self, X, q):
        X = _rows(X, self.dim)
        out = np.empty(X.shape[0])
        for start in range(0, X.shape[0], 4096):
            gaps = np.maximum(0.0, self._gaps(X[start:start + 4096]) - self.tol)
            out[start:start + 4096] = np.linalg.norm(gaps, ord=q, axis=2).min(axis=1)
        return out

    def members(self, rng, grid_per_axis=0, random_samples=0):
        if self.tol == 0.0:
            return self.array.copy()
        extra = super().members(rng, grid_per_axis, random_samples)
        return np.vstack([self.array, extra])


@dataclass(frozen=True)
class OrthantCone(SetDescriptor):
    """The nonnegative orthant of R^n."""

    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def dim(self) -> int:
        return int(self.n)

    @cached_property
    def bbox(self):
        return np.zeros(self.dim), np.full(self.dim, UNBOUNDED_SPAN)

    def contains_many(self, X):
        return np.all(_rows(X, self.dim) >= 0.0, axis=1)

    def exact_distance(self, X, q):
        return row_norms(np.minimum(_rows(X, self.dim), 0.0), q)


@dataclass(frozen=True, eq=False)
class Oracle(SetDescriptor):
    """A set given by a pure membership predicate and a sampling box."""

    predicate: Callable[[np.ndarray], bool]
    lo: tuple
    hi: tuple
    label: str = "oracle"

    def __post_init__(self):
        lo, hi = as_vector(self.lo), as_vector(self.hi)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("oracle bounding box must satisfy lo <= hi")
        object.__setattr__(self, "lo", tuple(lo.tolist()))
        object.__setattr__(self, "hi", tuple(hi.tolist()))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @cached_property
    def bbox(self):
        return np.array(self.lo), np.array(self.hi)

    def contains_many(self, X):
        X = _rows(X, self.dim)
        return np.fromiter((bool(self.predicate(row)) for row in X), dtype=bool, count=X.shape[0])


@dataclass(frozen=True, eq=False)
class Intersection(SetDescriptor):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("intersection needs at least one child")
        self._check_dims(*self.children)

    @property
    def dim(self) -> int:
        return self.children[0].dim

    @property
    def membership_is_exact(self):
        return all(c.membership_is_exact for c in self.children)

    @cached_property
    def bbox(self):
        lo = np.max([c.bbox[0] for c in self.children], axis=0)
        hi = np.min([c.bbox[1] for c in self.children], axis=0)
        return lo, np.maximum(lo, hi)

    def contains_many(self, X):
        X = _rows(X, self.dim)
        out = np.ones(X.shape[0], dtype=bool)
        for child in self.children:
            idx = np.flatnonzero(out)
            if idx.size == 0:
                break
            out[idx] = child.contains_many(X[idx])
        return out

    def members(self, rng, grid_per_axis=0, random_samples=0):
        parts = [super().members(rng, grid_per_axis, random_samples)]
        # lower-dimensional children (point clouds, scaled-by-zero sets) are
        # never hit by box sampling, so also filter each child's own members
        for child in self.children:
            m = child.members(rng, grid_per_axis, random_samples)
            if m.shape[0]:
                parts.append(m[self.contains_many(m)])
        return np.vstack(parts)


@dataclass(frozen=True, eq=False)
class MinkowskiSum(SetDescriptor):
    """``left + right``.

    Membership is exact when a closed form exists (a finite child, two
    intervals, or a ball added to a set with an exact distance).  Otherwise it
    is decided by searching a member sample of ``left`` for ``k`` with
    ``x - k`` in ``right``; exhausting the sample answers False.
    """

    left: SetDescriptor
    right: SetDescriptor
    witness_budget: int = 10_000
    seed: int = 0

    def __post_init__(self):
        self._check_dims(self.left, self.right)

    @property
    def dim(self) -> int:
        return self.left.dim

    @cached_property
    def bbox(self):
        (l1, h1), (l2, h2) = self.left.bbox, self.right.bbox
        return l1 + l2, h1 + h2

    @cached_property
    def _exact_rule(self):
        L, R = self.left, self.right
        for finite, other in ((L, R), (R, L)):
            if isinstance(finite, PointCloud) and finite.tol == 0.0 and other.membership_is_exact:
                return ("cloud", finite, other)
        if isinstance(L, Interval) and isinstance(R, Interval):
            return ("interval", Interval(L.a + R.a, L.b + R.b,
                                         L.left_closed and R.left_closed and not math.isinf(L.a + R.a),
                                         L.right_closed and R.right_closed and not math.isinf(L.b + R.b)), None)
        for ball, other in ((R, L), (L, R)):
            if isinstance(ball, Ball):
                probe = other.exact_distance(np.zeros((1, self.dim)), ball.q)
                # inf_k |x-c-k| < r is exact for an open ball; for a closed ball
                # the infimum must be attained, so the other set must be closed
                closed_other = isinstance(other, (PointCloud, OrthantCone)) or (
                    isinstance(other, Interval) and other.left_closed and other.right_closed) or (
                    isinstance(other, Ball) and other.closed)
                if probe is not None and (not ball.closed or closed_other):
                    return ("ball", ball, other)
        return None

    @property
    def membership_is_exact(self):
        return self._exact_rule is not None

    @cached_property
    def _witness_sample(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        per_axis = max(2, int(round((self.witness_budget / 2) ** (1.0 / self.dim))))
        return self.left.members(rng, per_axis, self.witness_budget // 2)

    def decide(self, x) -> tuple[bool, str]:
        """Membership of a single point together with how it was decided."""
        x = as_vector(x)
        inside = bool(self.contains_many(x[None, :])[0])
        return inside, "exact" if self.membership_is_exact else "sampled"

    def contains_many(self, X):
        X = _rows(X, self.dim)
        rule = self._exact_rule
        if rule is not None:
            tag, a, b = rule
            if tag == "interval":
                return a.contains_many(X)
            if tag == "cloud":
                out = np.zeros(X.shape[0], dtype=bool)
                for pt in a.array:
                    out |= b.contains_many(X - pt)
                return out
            ball, other = a, b
            d = other.exact_distance(X - ball.c, ball.q)
            return d <= ball.radius if ball.closed else d < ball.radius
        S = self._witness_sample
        if S.shape[0] == 0:
            return np.zeros(X.shape[0], dtype=bool)
        return np.fromiter((bool(np.any(self.right.contains_many(x - S))) for x in X),
                           dtype=bool, count=X.shape[0])

    def members(self, rng, grid_per_axis=0, random_samples=0):
        A = self.left.members(rng, grid_per_axis, random_samples)
        B = self.right.members(rng, grid_per_axis, random_samples)
        if A.shape[0] == 0 or B.shape[0] == 0:
            return np.empty((0, self.dim))
        count = max(random_samples, A.shape[0], B.shape[0])
        sums = A[rng.integers(A.shape[0], size=count)] + B[rng.integers(B.shape[0], size=count)]
        return sums


def decide_sum_membership(sum_set: MinkowskiSum, x) -> tuple[bool, str]:
    return sum_set.decide(x)


@dataclass(frozen=True, eq=False)
class Scale(SetDescriptor):
    """``nu * child``; ``nu = 0`` yields the singleton at the origin."""

    nu: float
    child: SetDescriptor

    def __post_init__(self):
        object.__setattr__(self, "nu", float(self.nu))

    @property
    def dim(self) -> int:
        return self.child.dim

    @property
    def membership_is_exact(self):
        return self.child.membership_is_exact

    @cached_property
    def bbox(self):
        lo, hi = self.child.bbox
        a, b = self.nu * lo, self.nu * hi
        return np.minimum(a, b), np.maximum(a, b)

    def contains_many(self, X):
        X = _rows(X, self.dim)
        if self.nu == 0.0:
            return np.all(X == 0.0, axis=1)
        return self.child.contains_many(X / self.nu)

    def exact_distance(self, X, q):
        X = _rows(X, self.dim)
        if self.nu == 0.0:
            return row_norms(X, q)
        d = self.child.exact_distance(X / self.nu, q)
        return None if d is None else abs(self.nu) * d

    def members(self, rng, grid_per_axis=0, random_samples=0):
        if self.nu == 0.0:
            return np.zeros((1, self.dim))
        return self.nu * self.child.members(rng, grid_per_axis, random_samples)


@dataclass(frozen=True, eq=False)
class Tube(SetDescriptor):
    """Tubular neighbourhood ``{x : d_q(x, child) < delta}``."""

    child: SetDescriptor
    delta: float
    q: float = 2.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"tube radius must be > 0, got {self.delta}")
        object.__setattr__(self, "q", parse_q(self.q))

    @property
    def dim(self) -> int:
        return self.child.dim

    @property
    def membership_is_exact(self):
        return self.child.exact_distance(np.zeros((1, self.dim)), self.q) is not None

    @cached_property
    def bbox(self):
        lo, hi = self.child.bbox
        return lo - self.delta, hi + self.delta

    def contains_many(self, X):
        X = _rows(X, self.dim)
        d = self.child.exact_distance(X, self.q)
        if d is None:
            d = _sampled_distance(self.child, X, self.q)
        return d < self.delta

    def exact_distance(self, X, q):
        if q != self.q and self.dim != 1:
            return None
        d = self.child.exact_distance(X, q)
        return None if d is None else np.maximum(0.0, d - self.delta)

    def members(self, rng, grid_per_axis=0, random_samples=0):
        base = super().members(rng, grid_per_axis, random_samples)
        inner = self.child.members(rng, grid_per_axis, random_samples)
        return np.vstack([base, inner]) if inner.shape[0] else base


def _sampled_distance(K: SetDescriptor, X: np.ndarray, q: float) -> np.ndarray:
    if K._distance_sample.shape[0] == 0:
        raise DistanceInestimable("distance inestimable: no member points found in the sampling box")
    d, _ = K._distance_tree.query(np.atleast_2d(X), k=1, p=q)
    return np.asarray(d, dtype=float)


class DistanceResult(NamedTuple):
    value: float
    exact: bool  # False means a sampled upper bound


def distance_bound(K: SetDescriptor, x, q=2.0) -> DistanceResult:
    """``d_q(x, K)`` in closed form where available, else a sampled upper bound."""
    q = parse_q(q)
    x = as_vector(x)
    if x.size != K.dim:
        raise ValueError(f"point has dimension {x.size}, set has dimension {K.dim}")
    d = K.exact_distance(x[None, :], q)
    if d is not None:
        return DistanceResult(float(d[0]), True)
    return DistanceResult(float(_sampled_distance(K, x[None, :], q)[0]), False)


def distance_q(K: SetDescriptor, x, q=2.0) -> float:
    return distance_bound(K, x, q).value


def contains(K: SetDescriptor, x) -> bool:
    return K.contains(x)


def tube(K: SetDescriptor, delta: float, q=2.0) -> Tube:
    return Tube(K, delta, q)


def probe_points(x, radius: float, count: int, seed: int = 0) -> np.ndarray:
    """Axis probes at ``radius`` followed by seeded random ones on/in the l_2 ball."""
    x = as_vector(x)
    n = x.size
    eye = np.eye(n)
    axis = np.vstack([x + radius * eye, x - radius * eye])
    if count <= axis.shape[0]:
        return axis[:count]
    rng = np.random.default_rng(seed)
    extra = count - axis.shape[0]
    dirs = rng.normal(size=(extra, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    # alternate between the sphere and its half-radius shell
    radii = np.where(np.arange(extra) % 2 == 0, radius, radius / 2)
    return np.vstack([axis, x + radii[:, None] * dirs])


def is_interior_point(K: SetDescriptor, x, probe_radius: float, probe_count: int = 64,
                      seed: int = 0) -> bool:
    """One-sided interiority test: ``x`` and all probe points lie in ``K``."""
    if not probe_radius > 0 or probe_count < 1:
        raise ValueError("probe_radius must be > 0 and probe_count >= 1")
    if not K.contains(x):
        return False
    return bool(np.all(K.contains_many(probe_points(x, probe_radius, probe_count, seed))))


def default_members(K: SetDescriptor, samples: int = 4096, seed: int = 0) -> np.ndarray:
    per_axis = max(2, int(round(samples ** (1.0 / K.dim))))
    return K.members(np.random.default_rng(seed), per_axis, samples)


__all__: Sequence[str] = [
    "Ball", "DistanceInestimable", "DistanceResult", "INF", "Intersection", "Interval",
    "MinkowskiSum", "Oracle", "OrthantCone", "PointCloud", "Scale", "SetDescriptor", "Tube",
    "box_grid", "contains", "decide_sum_membership", "default_members", "distance_bound",
    "distance_q", "is_interior_point", "parse_q", "probe_points", "q_norm", "tube",
]
