"""Falsification and brute-force tools for p-convex sets, functions and weak efficiency."""

__version__ = "0.1.0"

from .pcore import DomainError, PCoefficients, conjugate_coefficient, g_argmin, p_combine, scaling_g  # noqa: E402
from .psets import Ball, Intersection, Interval, MinkowskiSum, OrthantCone, PointCloud, Scale, Tube  # noqa: E402
from .pfuncs import ScalarFn, VectorFn, from_catalog, jensen_gap  # noqa: E402
from .certify import (SearchBudget, Verdict, Witness, construct_ball_counterexample,  # noqa: E402
                      falsify_fn_pconvexity, falsify_set_pconvexity)
from .weff import GridSpec, weakly_efficient_set  # noqa: E402

__all__ = [
    "Ball", "DomainError", "GridSpec", "Intersection", "Interval", "MinkowskiSum", "OrthantCone",
    "PCoefficients", "PointCloud", "ScalarFn", "Scale", "SearchBudget", "Tube", "VectorFn", "Verdict",
    "Witness", "conjugate_coefficient", "construct_ball_counterexample", "falsify_fn_pconvexity",
    "falsify_set_pconvexity", "from_catalog", "g_argmin", "jensen_gap", "p_combine", "scaling_g",
    "weakly_efficient_set", "__version__",
]
