"""Numerical verification engine and scanner for the six-stage metric
deformation that puts positive sectional curvature on the exotic
7-sphere quotient of Sp(2)."""

from . import (curvature, metric_pipeline, psi_analytic, quat, rng,
               scan, sp2, verify, zero_locus)

__all__ = ["quat", "sp2", "psi_analytic", "metric_pipeline", "curvature",
           "zero_locus", "verify", "scan", "rng"]

__version__ = "0.1.0"
