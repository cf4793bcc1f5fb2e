"""Simulation and analysis of atoms self-organizing along a 1D chiral
photonic reservoir.

Subpackages follow the pipeline: ``core`` (units, parameters, state),
``dynamics`` (equations of motion, integration, linearization), ``steady``
(convergence, annealing, slip detection), ``analytic`` (closed-form
solutions), ``optics`` (transfer-matrix response), ``experiments``
(figure pipelines), ``shell`` (CLI and serialization).  The hot kernels
live in ``_kernels`` with a compiled and a pure-Python backend.
"""

__version__ = "0.1.0"

from .core import (DerivedRates, EnsembleState, PhysicalParams, default_pump,
                   derive_rates, fractional_offsets, fractional_positions)
from ._kernels import backend_name

__all__ = [
    "__version__",
    "DerivedRates",
    "EnsembleState",
    "PhysicalParams",
    "backend_name",
    "default_pump",
    "derive_rates",
    "fractional_offsets",
    "fractional_positions",
]
