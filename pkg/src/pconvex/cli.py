"""Command-line driver.

    pconvex run <instance.json> [--seed N] [--out report.json] [--replay report.json]
    pconvex ew <instance.json> --problem NAME [--csv out.csv] [--out report.json]

Exit codes for ``run``: 0 every check behaved as declared; 2 additionally at
least one falsifier found a counterexample the instance expected; 1 at least
one check contradicted its declared expectation; 64 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .certify import (CheckResult, HypothesisError, PreconditionError, SamplingError, SearchBudget, Verdict,
                      Witness, check_cone_equivalence, check_downgrade, check_segment_interior,
                      construct_ball_counterexample, falsify_fn_pconvexity, falsify_set_pconvexity,
                      replay_witness, run_consequence_suite, set_violation)
from .pcore import conjugate_coefficient
from .instance import Instance, InstanceError, load_instance
from .pfuncs import DEFAULT_TOL, DomainViolation, is_positively_homogeneous, jensen_gap
from .psets import DistanceInestimable
from .weff import (EfficiencyReport, check_ew_pconvexity, check_intersection_equality, check_interval_fill,
                   check_scaling_closure, check_union_inclusion, check_zero_in_ew, is_Rm_p_convex,
                   weakly_efficient_set)

EXIT_OK, EXIT_HIGH, EXIT_INFO, EXIT_USAGE = 0, 1, 2, 64
DEFAULT_SEED = 42
REPLAY_TOL = 1e-12
STRUCTURAL = ("union_inclusion", "intersection_equality", "scaling_closure", "interval_fill",
              "ew_pconvexity", "zero_in_ew")


def default_seed() -> int:
    env = os.environ.get("PCONVEX_SEED")
    return int(env) if env not in (None, "") else DEFAULT_SEED


def _witness(w: Witness | None, target: dict) -> dict | None:
    if w is None:
        return None
    d = w.to_dict()
    d["target"] = target
    return d


def _verdict_status(v: Verdict) -> str:
    return "falsified" if v.falsified else "pass"


def _p_of(check: dict, inst: Instance):
    if "p" in check:
        return check["p"]
    if "problem" in check:
        return inst.problems[check["problem"]]["p"]
    return None


def _efficiency(inst: Instance, problem: str, p, structural=STRUCTURAL, budget: SearchBudget | None = None,
                negative_control=None, coefficient_samples: int = 33) -> EfficiencyReport:
    prob = inst.problems[problem]
    F = prob["F"]
    report = weakly_efficient_set(F, prob["grid"], prob["tol"])
    budget = budget or SearchBudget()
    cloud_target = lambda idx: {"set": {"type": "point_cloud", "tol": float(report.grid.steps.max()) / 2,
                                        "points": report.points[list(idx)].tolist()}}
    for name in structural:
        if name == "union_inclusion":
            res = check_union_inclusion(report)
        elif name == "intersection_equality":
            res = check_intersection_equality(report)
        elif name == "interval_fill":
            res = check_interval_fill(report)
        elif name == "zero_in_ew":
            try:
                res = check_zero_in_ew(report, F)
            except ValueError as exc:
                res = CheckResult("zero_in_ew", "not_applicable", str(exc))
        elif p is None:
            res = CheckResult(name, "not_applicable", "no p given")
        elif name == "scaling_closure":
            res = check_scaling_closure(report, F, p, coefficient_samples)
        else:
            v = check_ew_pconvexity(report, p, budget)
            res = CheckResult("ew_pconvexity", "fail" if v.falsified else "pass", v.strategy,
                              _witness(v.witness, cloud_target(report.weakly_efficient)))
        report.structural_checks.append(res)
    if negative_control:
        idx = report.grid.snap(np.array(negative_control, dtype=float).reshape(len(negative_control), -1))
        idx = sorted(set(int(i) for i in idx if i >= 0))
        v = check_ew_pconvexity(report, p, budget, indices=idx)
        report.structural_checks.append(CheckResult(
            "negative_control", "pass" if v.falsified else "fail",
            "injected set falsified as expected" if v.falsified else "injected non-p-convex set was not falsified",
            _witness(v.witness, cloud_target(idx))))
    return report


def run_check(check: dict, inst: Instance, seed: int) -> dict:
    """Execute one check; returns status, result payload and optional witness."""
    kind = check["kind"]
    budget = SearchBudget.from_dict(check.get("budget"), seed=check.get("seed", seed))
    tol = check.get("tol", DEFAULT_TOL)
    p = _p_of(check, inst)
    out = {"witness": None, "samples": 0, "result": {}}

    if kind == "falsify_set":
        v = falsify_set_pconvexity(inst.set_ref(check["set"], "set"), p, budget)
        out.update(status=_verdict_status(v), samples=v.samples_used, result=v.to_dict(),
                   witness=_witness(v.witness, {"set": check["set"]}))
    elif kind == "falsify_fn":
        v = falsify_fn_pconvexity(inst.functions[check["function"]], p, budget, tol)
        out.update(status=_verdict_status(v), samples=v.samples_used, result=v.to_dict(),
                   witness=_witness(v.witness, {"function": check["function"]}))
    elif kind == "jensen_gap":
        f = inst.functions[check["function"]]
        x, y, lam = np.atleast_1d(check["x"]), np.atleast_1d(check["y"]), check["lambda"]
        mu = conjugate_coefficient(lam, p)
        try:
            gap = jensen_gap(f, x, y, lam, p)
        except DomainViolation as exc:
            w = Witness(tuple(x.tolist()), tuple(y.tolist()), lam, mu, p, set_violation(f.domain, exc.point),
                        "domain_violation")
            out.update(status="falsified", result={"error": str(exc)})
        else:
            scale = max(1.0, abs(lam * f(x) + mu * f(y)), abs(f(lam * x + mu * y)))
            w = None
            if gap < -tol * scale:
                w = Witness(tuple(x.tolist()), tuple(y.tolist()), lam, mu, p, -gap, "jensen_violation")
            out.update(status="falsified" if w else "pass", result={"gap": gap})
        out["samples"] = 1
        out["witness"] = _witness(w, {"function": check["function"]})
    elif kind == "ball_counterexample":
        q = check.get("q", 2)
        w = construct_ball_counterexample(check["center"], check["delta"], q, p, check["beta"], check["epsilon"])
        target = {"set": {"type": "ball", "center": list(np.atleast_1d(check["center"]).tolist()),
                          "radius": check["delta"], "q": q, "boundary": "open"}}
        out.update(status="falsified", samples=1, result={"z": list(w.x), "combination": w.point.tolist(),
                                                          "violation": w.violation},
                   witness=_witness(w, target))
    elif kind == "cone_equivalence":
        rep = check_cone_equivalence(inst.set_ref(check["set"], "set"), p, budget)
        out.update(status="pass" if rep.consistent else "fail", samples=rep.pconvex.samples_used,
                   result=rep.to_dict())
    elif kind == "downgrade":
        K = inst.set_ref(check["set"], "set")
        p1s = check["p1"] if isinstance(check["p1"], list) else [check["p1"]]
        runs = []
        for p1 in p1s:
            v = check_downgrade(K, p, p1, budget)
            runs.append({"p1": p1, **v.to_dict()})
            out["samples"] += v.samples_used
            if v.falsified:
                out["witness"] = _witness(v.witness, {"set": check["set"]})
                break
        out.update(status="falsified" if out["witness"] else "pass", result={"runs": runs})
    elif kind == "segment_interior":
        rep = check_segment_interior(inst.set_ref(check["set"], "set"), p, check["x"], check["y"],
                                     check["probe_radius"], check.get("samples", 64))
        out.update(status="pass" if rep.passed else "fail", samples=rep.checked, result=rep.to_dict())
    elif kind == "consequences":
        f = inst.functions[check["function"]]
        K = inst.set_ref(check["set"], "set") if "set" in check else None
        rep = run_consequence_suite(f, K, p, budget, tol)
        out.update(status="pass" if rep.passed else "fail", result=rep.to_dict())
    elif kind == "homogeneous_convexity":
        f = inst.functions[check["function"]]
        hom = is_positively_homogeneous(f, seed=budget.seed)
        pv = falsify_fn_pconvexity(f, p, budget, tol)
        result = {"homogeneous": hom, "pconvex": pv.to_dict()}
        out["samples"] = pv.samples_used
        if hom and not pv.falsified:
            cv = falsify_fn_pconvexity(f, 1.0, budget, tol)
            result["convex"] = cv.to_dict()
            out["samples"] += cv.samples_used
            out.update(status=_verdict_status(cv), witness=_witness(cv.witness, {"function": check["function"]}))
        else:
            out["status"] = "not_applicable"
        out["result"] = result
    elif kind == "rm_pconvex":
        F = inst.vector_fn(check["problem"])
        v = is_Rm_p_convex(F, p, budget, tol)
        target = None
        if v.falsified:
            target = {"function": inst.problems[check["problem"]]["objectives"][v.witness.component]}
        out.update(status=_verdict_status(v), samples=v.samples_used, result=v.to_dict(),
                   witness=_witness(v.witness, target))
    elif kind == "efficiency":
        rep = _efficiency(inst, check["problem"], p, tuple(check.get("structural", STRUCTURAL)), budget,
                          check.get("negative_control"), check.get("coefficient_samples", 33))
        failed = [c for c in rep.structural_checks if c.status == "fail"]
        out.update(status="fail" if failed else "pass", samples=inst.problems[check["problem"]]["grid"].size,
                   result=rep.to_dict())
    else:  # pragma: no cover - schema rejects unknown kinds
        raise InstanceError("checks", f"unknown kind {kind!r}")
    return out


def _severity(expect: str, status: str) -> tuple[bool, str]:
    if expect == "falsified":
        ok = status == "falsified"
    elif expect == "error":
        ok = status == "error"
    else:
        ok = status in ("pass", "not_applicable")
    if not ok:
        return False, "high"
    return True, "info" if status == "falsified" else "none"


def run_instance(inst: Instance, seed: int | None = None) -> tuple[dict, int]:
    seed = default_seed() if seed is None else seed
    records = []
    for check in inst.checks:
        t0 = time.perf_counter()
        try:
            out = run_check(check, inst, seed)
        except (HypothesisError, PreconditionError, SamplingError, DistanceInestimable) as exc:
            out = {"status": "error", "samples": 0, "result": {"error": f"{type(exc).__name__}: {exc}"},
                   "witness": None}
        expect = check.get("expect", "pass")
        ok, severity = _severity(expect, out["status"])
        rec = {"name": check["name"], "kind": check["kind"], "expect": expect, "status": out["status"],
               "ok": ok, "severity": severity, "samples": out["samples"], "result": out["result"]}
        if out["witness"] is not None:
            rec["witness"] = out["witness"]
        rec["wall_time"] = round(time.perf_counter() - t0, 6)
        records.append(rec)
    high = sum(r["severity"] == "high" for r in records)
    info = sum(r["severity"] == "info" for r in records)
    code = EXIT_HIGH if high else (EXIT_INFO if info else EXIT_OK)
    report = {
        "schema_version": 1,
        "tool": "pconvex",
        "version": __version__,
        "instance": Path(inst.source).name,
        "instance_digest": inst.digest,
        "seed": seed,
        "records": records,
        "summary": {"checks": len(records), "ok": sum(r["ok"] for r in records), "high_severity": high,
                    "informational": info, "exit_code": code},
    }
    return report, code


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def strip_timing(obj):
    """Copy of a report with every ``wall_time`` field removed."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k != "wall_time"}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def _iter_witnesses(obj, path="$"):
    if isinstance(obj, dict):
        if "target" in obj and "lam" in obj and "kind" in obj:
            yield path, obj
        for k, v in obj.items():
            yield from _iter_witnesses(v, f"{path}.{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _iter_witnesses(v, f"{path}[{i}]")


def replay_report(inst: Instance, report: dict) -> tuple[dict, int]:
    """Recompute every witness found in a report against the instance definitions."""
    results = []
    for path, wd in _iter_witnesses(report):
        w = Witness.from_dict(wd)
        target = wd["target"]
        obj = inst.functions[target["function"]] if "function" in target else inst.set_ref(target["set"], path)
        recomputed = replay_witness(w, obj)
        results.append({"path": path, "kind": w.kind, "stored": w.violation, "recomputed": recomputed,
                        "ok": abs(recomputed - w.violation) <= REPLAY_TOL and recomputed > 0})
    bad = sum(not r["ok"] for r in results)
    return {"replayed": len(results), "mismatches": bad, "results": results}, (EXIT_HIGH if bad else EXIT_OK)


def emit_ew_csv(report: EfficiencyReport, path: str | Path) -> int:
    """One row per grid point: coordinates, objective values, weak-efficiency flag."""
    n, m = report.grid.dim, report.m
    ew = report.ew_mask
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(n)] + [f"f{i + 1}" for i in range(m)] + ["in_E_W"])
        for j in range(report.grid.size):
            vals = [repr(float(v)) for v in report.values[j]] if report.in_domain[j] else [""] * m
            w.writerow([repr(float(v)) for v in report.points[j]] + vals + ["true" if ew[j] else "false"])
    return report.grid.size


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pconvex", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"pconvex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="execute the checks of an instance")
    run.add_argument("instance", help="instance JSON path or bundled instance name")
    run.add_argument("--seed", type=int, default=None, help="run seed (default: $PCONVEX_SEED or 42)")
    run.add_argument("--out", help="write the report here instead of stdout")
    run.add_argument("--replay", metavar="REPORT", help="recompute the witnesses of an earlier report")

    ew = sub.add_parser("ew", help="weakly efficient set of one problem")
    ew.add_argument("instance")
    ew.add_argument("--problem", required=True)
    ew.add_argument("--csv", help="write per-grid-point rows to this CSV file")
    ew.add_argument("--seed", type=int, default=None)
    ew.add_argument("--out", help="write the efficiency report here instead of stdout")
    return parser


def _write(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        inst = load_instance(args.instance)
        if args.command == "run":
            if args.replay:
                try:
                    stored = json.loads(Path(args.replay).read_text(encoding="utf-8"))
                except (OSError, json.JSONDecodeError) as exc:
                    raise InstanceError(args.replay, str(exc)) from None
                result, code = replay_report(inst, stored)
            else:
                result, code = run_instance(inst, args.seed)
            _write(dumps(result), args.out)
            return code
        if args.problem not in inst.problems:
            raise InstanceError("--problem", f"unknown problem {args.problem!r}")
        seed = default_seed() if args.seed is None else args.seed
        rep = _efficiency(inst, args.problem, inst.problems[args.problem]["p"], budget=SearchBudget(seed=seed))
        if args.csv:
            emit_ew_csv(rep, args.csv)
        _write(dumps(rep.to_dict()), args.out)
        return EXIT_HIGH if any(c.status == "fail" for c in rep.structural_checks) else EXIT_OK
    except (InstanceError, ValueError) as exc:
        # an empty in-domain grid lands here too, before any file is written
        print(f"pconvex: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
