"""Bounded counterexample search for p-convexity of sets and functions.

A search either returns a replayable :class:`Witness` or reports that no
counterexample turned up within its budget.  The latter is a bounded-search
statement, never a proof.

Enumeration order is deterministic given the budget seed: lambda values in
the order of :meth:`SearchBudget.lambdas` (adversarial values first), and for
each lambda the sampled pairs in index order.  The first violation found is
returned.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .pcore import adversarial_lambdas, as_p, as_vector, conjugate_coefficient, p_combine
from .pfuncs import DEFAULT_TOL, CenterConditionError, ScalarFn, jensen_gaps, lower_bound_from_upper
from .psets import Ball, SetDescriptor, Tube, distance_bound, is_interior_point, probe_points, q_norm

# Membership failures smaller than this (relative to the point's size) are
# floating-point noise on a closed boundary, not counterexamples.
SET_NOISE = 1e-12
# the closure of K is approximated by the open tube of this radius around K
CLOSURE_EPS = 1e-6


class SamplingError(RuntimeError):
    pass


class PreconditionError(ValueError):
    pass


class HypothesisError(ValueError):
    """A hypothesis of an explicit construction does not hold."""


@dataclass(frozen=True)
class SearchBudget:
    pairs: int = 10_000
    grid_per_axis: int = 33
    random_samples: int = 4096
    lambda_count: int = 64
    random_lambdas: int = 0
    adversarial_lambdas: tuple = ()
    seed: int = 42

    def lambdas(self, p) -> list[float]:
        """Adversarial values, then the uniform grid, then seeded random values."""
        out = adversarial_lambdas(p, self.adversarial_lambdas)
        seen = set(out)
        grid = np.linspace(0.0, 1.0, self.lambda_count) if self.lambda_count > 1 else np.array([0.5])
        rand = np.random.default_rng(self.seed + 1).uniform(0.0, 1.0, self.random_lambdas)
        for lam in (*grid.tolist(), *rand.tolist()):
            if lam not in seen:
                seen.add(lam)
                out.append(float(lam))
        return out

    @classmethod
    def from_dict(cls, d: dict | None, seed: int | None = None) -> "SearchBudget":
        d = dict(d or {})
        if "adversarial_lambdas" in d:
            d["adversarial_lambdas"] = tuple(d["adversarial_lambdas"])
        if seed is not None and "seed" not in d:
            d["seed"] = seed
        return cls(**d)


@dataclass(frozen=True)
class Witness:
    x: tuple
    y: tuple
    lam: float
    mu: float
    p: float
    violation: float
    kind: str  # set_violation | jensen_violation | domain_violation
    component: int | None = None

    @property
    def point(self) -> np.ndarray:
        return self.lam * np.array(self.x) + self.mu * np.array(self.y)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["x"], d["y"] = list(self.x), list(self.y)
        d["point"] = self.point.tolist()
        if self.component is None:
            del d["component"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Witness":
        return cls(tuple(d["x"]), tuple(d["y"]), float(d["lam"]), float(d["mu"]), float(d["p"]),
                   float(d["violation"]), d["kind"], d.get("component"))


@dataclass(frozen=True)
class Verdict:
    witness: Witness | None
    samples_used: int
    strategy: str

    @property
    def falsified(self) -> bool:
        return self.witness is not None

    @property
    def outcome(self) -> str:
        return "falsified" if self.falsified else "no_counterexample"

    def to_dict(self) -> dict:
        d = {"outcome": self.outcome, "samples": self.samples_used, "strategy": self.strategy}
        if self.witness is not None:
            d["witness"] = self.witness.to_dict()
        return d


@dataclass
class CheckResult:
    name: str
    status: str  # pass | fail | not_applicable
    detail: str = ""
    witness: dict | None = None

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict:
        d = {"name": self.name, "status": self.status, "detail": self.detail}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


def set_violation(K: SetDescriptor, z) -> float:
    """How far ``z`` lies outside ``K`` (a ball uses its own norm, otherwise l_2)."""
    q = K.q if isinstance(K, Ball) else 2.0
    return distance_bound(K, z, q).value


def _noise_floor(z: np.ndarray) -> float:
    return SET_NOISE * (1.0 + float(np.max(np.abs(z))))


def _sample_members(K: SetDescriptor, budget: SearchBudget, rng) -> np.ndarray:
    S = K.members(rng, budget.grid_per_axis, budget.random_samples)
    if S.shape[0] == 0:
        raise SamplingError("set sampling failed: no member points found in the sampling box")
    return S


def _pairs(M: int, budget: SearchBudget, rng) -> tuple[np.ndarray, np.ndarray]:
    """Exhaustive ``i <= j`` pairs when affordable, else diagonal then random pairs."""
    if M * (M + 1) // 2 <= budget.pairs:
        I, J = np.triu_indices(M)
        return I, J
    n_diag = min(M, budget.pairs // 4)
    diag = np.arange(n_diag)
    rest = budget.pairs - n_diag
    I = np.concatenate([diag, rng.integers(M, size=rest)])
    J = np.concatenate([diag, rng.integers(M, size=rest)])
    return I, J


def falsify_set_pconvexity(K: SetDescriptor, p, budget: SearchBudget | None = None) -> Verdict:
    """Search for ``x, y`` in ``K`` and ``lam`` with ``p_combine(x, y, lam)`` outside ``K``."""
    budget = budget or SearchBudget()
    p = as_p(p)
    rng = np.random.default_rng(budget.seed)
    S = _sample_members(K, budget, rng)
    I, J = _pairs(S.shape[0], budget, rng)
    X, Y = S[I], S[J]
    checked = 0
    for lam in budget.lambdas(p):
        mu = conjugate_coefficient(lam, p)
        Z = lam * X + mu * Y
        outside = np.flatnonzero(~K.contains_many(Z))
        for idx in outside:
            v = set_violation(K, Z[idx])
            if v > _noise_floor(Z[idx]):
                w = Witness(tuple(X[idx].tolist()), tuple(Y[idx].tolist()), lam, mu, float(p), v, "set_violation")
                return Verdict(w, checked + int(idx) + 1, _strategy(S, budget))
        checked += Z.shape[0]
    return Verdict(None, checked, _strategy(S, budget))


def _strategy(S: np.ndarray, budget: SearchBudget) -> str:
    return (f"members={S.shape[0]} grid_per_axis={budget.grid_per_axis} random={budget.random_samples} "
            f"pairs<={budget.pairs} lambdas={len(budget.lambdas(0.5))}+ seed={budget.seed}")


def falsify_fn_pconvexity(f: ScalarFn, p, budget: SearchBudget | None = None, tol: float = DEFAULT_TOL,
                          component: int | None = None) -> Verdict:
    """Search for a negative Jensen gap (or a combination leaving the domain)."""
    budget = budget or SearchBudget()
    p = as_p(p)
    rng = np.random.default_rng(budget.seed)
    S = _sample_members(f.domain, budget, rng)
    I, J = _pairs(S.shape[0], budget, rng)
    X, Y = S[I], S[J]
    checked = 0
    for lam in budget.lambdas(p):
        mu = conjugate_coefficient(lam, p)
        gaps, scale, inside = jensen_gaps(f, X, Y, lam, p)
        bad_gap = inside & (gaps < -tol * scale)
        for idx in np.flatnonzero(~inside | bad_gap):
            if inside[idx]:
                kind, v = "jensen_violation", float(-gaps[idx])
            else:
                z = lam * X[idx] + mu * Y[idx]
                v = set_violation(f.domain, z)
                if v <= _noise_floor(z):
                    continue
                kind = "domain_violation"
            w = Witness(tuple(X[idx].tolist()), tuple(Y[idx].tolist()), lam, mu, float(p), v, kind, component)
            return Verdict(w, checked + int(idx) + 1, _strategy(S, budget))
        checked += X.shape[0]
    return Verdict(None, checked, _strategy(S, budget))


def replay_witness(w: Witness, target) -> float:
    """Recompute a witness's violation against a set or a scalar function."""
    mu = conjugate_coefficient(w.lam, w.p)
    x, y = as_vector(w.x), as_vector(w.y)
    z = w.lam * x + mu * y
    if w.kind == "jensen_violation":
        f = target
        return -(w.lam * f(x) + mu * f(y) - f(z))
    K = target.domain if isinstance(target, ScalarFn) else target
    if K.contains(z):
        return 0.0
    return set_violation(K, z)


def construct_ball_counterexample(center, delta: float, q, p, beta: float, epsilon: float) -> Witness:
    """Explicit witness that the open ball ``B_q(center, delta)`` is not p-convex.

    ``z = (1 - delta/|c| + epsilon) c`` lies in the ball while
    ``2**(1-1/p) z``, the combination of ``z`` with itself at
    ``lam = mu = 2**(-1/p)``, does not.
    """
    c = as_vector(center)
    norm_c = q_norm(c, q)
    p_val = float(p)
    if norm_c == 0:
        raise HypothesisError("center must be nonzero")
    if not delta > 0:
        raise HypothesisError("delta must be > 0")
    if not beta >= 1:
        raise HypothesisError("beta >= 1 violated")
    if not beta * delta / norm_c <= 0.5:
        raise HypothesisError(f"beta*delta/|center| = {beta * delta / norm_c:g} exceeds 1/2")
    if not 0 < p_val < 0.5:
        raise HypothesisError(f"p >= 1/2 (got p = {p_val:g}); the construction needs 0 < p < 1/2")
    if not 0 < epsilon < delta / norm_c:
        raise HypothesisError(f"epsilon must lie in (0, delta/|center|) = (0, {delta / norm_c:g})")
    ball = Ball(tuple(c), delta, q, closed=False)
    z = (1.0 - delta / norm_c + epsilon) * c
    lam = 2.0 ** (-1.0 / p_val)
    mu = conjugate_coefficient(lam, p_val)
    comb = p_combine(z, z, lam, p_val)
    if not ball.contains(z) or ball.contains(comb):
        raise AssertionError("defect: constructed witness failed internal verification")
    w = Witness(tuple(z.tolist()), tuple(z.tolist()), lam, mu, p_val, set_violation(ball, comb), "set_violation")
    if abs(replay_witness(w, ball) - w.violation) > 1e-12:
        raise AssertionError("defect: witness does not replay")
    return w


# -- structural checks on sets --------------------------------------------------

@dataclass
class ConeReport:
    precondition: bool      # alpha K in K for sampled alpha in (0, 1]
    sum_closed: bool        # (a) K + K in K
    cone: bool              # t K in K for sampled t in (0, 10]
    pconvex: Verdict
    witnesses: dict = field(default_factory=dict)

    @property
    def b_holds(self) -> bool:
        return self.cone and not self.pconvex.falsified

    @property
    def consistent(self) -> bool:
        return (not self.precondition) or self.sum_closed == self.b_holds

    def to_dict(self) -> dict:
        return {"precondition": self.precondition, "a_sum_closed": self.sum_closed, "cone": self.cone,
                "pconvex": self.pconvex.to_dict(), "b_holds": self.b_holds, "consistent": self.consistent,
                "witnesses": self.witnesses}


def _first_outside(K: SetDescriptor, Z: np.ndarray) -> int | None:
    bad = np.flatnonzero(~K.contains_many(Z))
    for idx in bad:
        if set_violation(K, Z[idx]) > _noise_floor(Z[idx]):
            return int(idx)
    return None


def check_cone_equivalence(K: SetDescriptor, p, budget: SearchBudget | None = None) -> ConeReport:
    """Compare ``K + K in K`` with "cone and p-convex" on sampled points."""
    budget = budget or SearchBudget()
    rng = np.random.default_rng(budget.seed)
    S = _sample_members(K, budget, rng)
    witnesses = {}

    precondition = True
    for alpha in np.logspace(-3, 0, 16):
        idx = _first_outside(K, alpha * S)
        if idx is not None:
            precondition = False
            witnesses["precondition"] = {"alpha": float(alpha), "x": S[idx].tolist()}
            break

    I, J = _pairs(S.shape[0], budget, rng)
    idx = _first_outside(K, S[I] + S[J])
    sum_closed = idx is None
    if idx is not None:
        witnesses["a"] = {"x": S[I[idx]].tolist(), "y": S[J[idx]].tolist()}

    cone = True
    for t in np.logspace(-3, 1, 25):
        idx = _first_outside(K, t * S)
        if idx is not None:
            cone = False
            witnesses["cone"] = {"t": float(t), "x": S[idx].tolist()}
            break

    return ConeReport(precondition, sum_closed, cone, falsify_set_pconvexity(K, p, budget), witnesses)


def check_downgrade(K: SetDescriptor, p, p1, budget: SearchBudget | None = None) -> Verdict:
    """Falsifier run at ``p1 <= p`` on a 0-containing set that passes at ``p``."""
    budget = budget or SearchBudget()
    p, p1 = as_p(p), as_p(p1)
    if p1 > p:
        raise PreconditionError(f"p1 = {float(p1)} exceeds p = {float(p)}")
    if not K.contains(np.zeros(K.dim)):
        raise PreconditionError("0 is not in K")
    base = falsify_set_pconvexity(K, p, budget)
    if base.falsified:
        raise PreconditionError(f"K is not p-convex for p = {float(p)}: {base.witness}")
    return falsify_set_pconvexity(K, p1, budget)


@dataclass
class SegmentReport:
    passed: bool
    checked: int
    failure: dict | None = None

    def to_dict(self) -> dict:
        d = {"passed": self.passed, "checked": self.checked}
        if self.failure is not None:
            d["failure"] = self.failure
        return d


def check_segment_interior(K: SetDescriptor, p, x, y, probe_radius: float, samples: int = 64,
                           probe_count: int = 32) -> SegmentReport:
    """Probe that the half-open p-segment from ``x`` towards ``y`` stays interior.

    At ``lam`` the probe radius shrinks to ``lam * probe_radius``.
    """
    x, y = as_vector(x), as_vector(y)
    if not is_interior_point(K, x, probe_radius, probe_count):
        raise PreconditionError(f"x = {x.tolist()} is not interior at radius {probe_radius:g}")
    if not K.contains(y) and not distance_bound(K, y, 2.0).value < probe_radius:
        raise PreconditionError(f"y = {y.tolist()} is not in K or its closure proxy")
    for k in range(1, samples + 1):
        lam = k / samples
        z = p_combine(x, y, lam, p)
        if not is_interior_point(K, z, lam * probe_radius, probe_count):
            return SegmentReport(False, k, {"lam": lam, "point": z.tolist(), "radius": lam * probe_radius})
    return SegmentReport(True, samples)


def closure_proxy(K: SetDescriptor, eps: float = CLOSURE_EPS, q=2.0) -> Tube:
    return Tube(K, eps, q)


def check_closure_pconvexity(K: SetDescriptor, p, budget: SearchBudget | None = None,
                             eps: float = CLOSURE_EPS) -> Verdict:
    """Falsifier run on the closure proxy of ``K``; expected to pass when ``K`` does."""
    return falsify_set_pconvexity(closure_proxy(K, eps), p, budget)


# -- consequences for p-convex functions ---------------------------------------

@dataclass
class ConsequenceReport:
    lines: list

    @property
    def passed(self) -> bool:
        return all(line.passed for line in self.lines)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "lines": [line.to_dict() for line in self.lines]}


def _grid_spacing(K: SetDescriptor, per_axis: int) -> float:
    lo, hi = K.bbox
    return float(np.max(hi - lo)) / max(1, per_axis - 1)


def run_consequence_suite(f: ScalarFn, K: SetDescriptor | None, p, budget: SearchBudget | None = None,
                          tol: float = DEFAULT_TOL) -> ConsequenceReport:
    """Sampled checks of what p-convexity forces on ``f`` (for ``0 < p < 1``).

    (i) sampled local minima have value <= 0; (ii) f(0) <= 0 when 0 is in K;
    (iii) on a ball, the lower bound derived from the sampled maximum holds;
    (iv) a nonnegative f has no strict interior global maximum unless constant.
    """
    budget = budget or SearchBudget()
    K = K or f.domain
    p = as_p(p)
    rng = np.random.default_rng(budget.seed)
    S = _sample_members(K, budget, rng)
    vals = f.values(S)
    lines = []

    # (i) local minima
    h = _grid_spacing(K, budget.grid_per_axis)
    radius = 1.5 * h if h > 0 else 1e-9
    tree = cKDTree(S)
    worst = None
    n_min = 0
    for i, nbrs in enumerate(tree.query_ball_point(S, radius)):
        others = [j for j in nbrs if j != i]
        if others and vals[i] <= vals[others].min():
            n_min += 1
            if worst is None or vals[i] > vals[worst]:
                worst = i
    if worst is None:
        lines.append(CheckResult("local_min_nonpositive", "not_applicable", "no sampled local minimum"))
    elif vals[worst] <= tol:
        lines.append(CheckResult("local_min_nonpositive", "pass",
                                 f"{n_min} sampled local minima, largest value {vals[worst]:.6g}"))
    else:
        lines.append(CheckResult("local_min_nonpositive", "fail", f"local minimum with value {vals[worst]:.6g}",
                                 {"x": S[worst].tolist(), "value": float(vals[worst])}))

    # (ii) f(0) <= 0
    zero = np.zeros(K.dim)
    if K.contains(zero):
        f0 = f(zero)
        lines.append(CheckResult("value_at_zero_nonpositive", "pass" if f0 <= tol else "fail",
                                 f"f(0) = {f0:.6g}", None if f0 <= tol else {"x": zero.tolist(), "value": f0}))
    else:
        lines.append(CheckResult("value_at_zero_nonpositive", "not_applicable", "0 is not in K"))

    # (iii) lower bound on balls
    if isinstance(K, Ball):
        M = float(vals.max())
        try:
            m = lower_bound_from_upper(ScalarFn(K, f.fn, f.label), M, p)
        except CenterConditionError as exc:
            lines.append(CheckResult("ball_lower_bound", "not_applicable", str(exc)))
        else:
            ok = float(vals.min()) >= m - tol
            lines.append(CheckResult("ball_lower_bound", "pass" if ok else "fail",
                                     f"sampled min {vals.min():.6g} vs bound {m:.6g} (M = {M:.6g})",
                                     None if ok else {"x": S[int(vals.argmin())].tolist(), "bound": m}))
    else:
        lines.append(CheckResult("ball_lower_bound", "not_applicable", "domain is not a ball"))

    # (iv) strict interior maximum of a nonnegative function
    if vals.min() < -tol:
        lines.append(CheckResult("strict_max_constant", "not_applicable", "f takes negative values"))
    else:
        top = int(vals.argmax())
        variation = float(vals.max() - vals.min())
        strict = np.sum(vals >= vals[top] - tol) == 1
        probe_r = max(h / 2, 1e-6)
        contradiction = False
        if strict and variation > tol and is_interior_point(K, S[top], probe_r):
            contradiction = bool(np.all(f.values(probe_points(S[top], probe_r, 32)) < vals[top]))
        if contradiction:
            lines.append(CheckResult("strict_max_constant", "fail",
                                     f"strict interior maximum with variation {variation:.6g}",
                                     {"x": S[top].tolist(), "value": float(vals[top])}))
        else:
            lines.append(CheckResult("strict_max_constant", "pass", "no strict interior maximum of a non-constant f"))
    return ConsequenceReport(lines)


__all__: Sequence[str] = [
    "CheckResult", "ConeReport", "ConsequenceReport", "HypothesisError", "PreconditionError",
    "SamplingError", "SearchBudget", "SegmentReport", "Verdict", "Witness", "check_closure_pconvexity",
    "check_cone_equivalence", "closure_proxy",
    "check_downgrade", "check_segment_interior", "construct_ball_counterexample",
    "falsify_fn_pconvexity", "falsify_set_pconvexity", "replay_witness", "run_consequence_suite",
    "set_violation",
]
