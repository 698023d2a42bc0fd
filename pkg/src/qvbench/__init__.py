"""Multithreaded state-vector simulator and QNN benchmarking workbench."""

from .statevector import (
    CapacityError,
    Circuit,
    Gate,
    Precision,
    Simulator,
    StateVector,
    ThreadPlan,
    adjoint,
    apply_gate,
    expectation_z,
    init_ground,
    memory_required,
    sample_shots,
    shot_expectation_z,
)

__version__ = "0.1.0"
