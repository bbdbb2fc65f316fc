"""Discrete-POMDP planning toolkit with an observation-deception layer.

Subpackages: core model/belief arithmetic, deception kernels, benchmark
problems (Tiger, RockSample), three solvers (exact value iteration, linear
value-function approximation, POMCP), closed-form analysis utilities, and a
seeded experiment harness with CSV pipelines.
"""

from . import analysis, core, deception, linear_vf, pomcp, problems, value_iteration

__all__ = [
    "analysis",
    "core",
    "deception",
    "linear_vf",
    "pomcp",
    "problems",
    "value_iteration",
]

__version__ = "0.1.0"
