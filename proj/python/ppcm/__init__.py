"""Projection-based prediction-correction solvers for distributed consensus
optimization: graph utilities, projection operators, least-squares problem
generators, the centralized primal-dual solver, and a synchronous multi-agent
simulator."""

try:
    from ._ppcm import *  # noqa: F401,F403  (installed package layout)
except ImportError:
    from _ppcm import *  # noqa: F401,F403  (build-tree layout)
