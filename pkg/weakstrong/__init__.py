"""
weakstrong

Simulator for the weak-to-strong transition of a post-selected quantum
measurement: closed-form pointer model, an independent qubit x Fock engine,
tomographic readout and parameter sweeps.
"""

__version__ = "1.0.0"

from .core.analytic import MeasurementConfig, make_cat_state, pointer_shift
from .core.exceptions import ComputationError, ValidationError, WeakStrongError
from .core.tomography import TomographyDataset
from .services.sweep_service import SweepService, SweepSpec, run_sweep

__all__ = [
    "MeasurementConfig",
    "make_cat_state",
    "pointer_shift",
    "TomographyDataset",
    "SweepService",
    "SweepSpec",
    "run_sweep",
    "WeakStrongError",
    "ValidationError",
    "ComputationError",
]
