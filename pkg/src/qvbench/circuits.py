"""QNN circuit family, fidelity circuit and a stochastic Pauli noise model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .statevector import (
    CNOT,
    RX,
    RY,
    RZ,
    Circuit,
    Gate,
    Simulator,
    X,
    adjoint,
    apply_gate,
    init_ground,
    sample_shots,
)

FIDELITY_PARAM = math.pi / 4
FIDELITY_FEATURE = math.pi**2 / 4
CASCADES = ("descending", "ascending")


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class QnnLayout:
    """Alternating qubit roles: features go on even indices, readout on odd."""

    n_d: int

    def __post_init__(self):
        if self.n_d < 1:
            raise ValueError("n_d must be >= 1")

    @property
    def n_q(self) -> int:
        return 2 * self.n_d

    @property
    def encoding_qubits(self) -> tuple[int, ...]:
        return tuple(range(0, self.n_q, 2))

    @property
    def measurement_qubits(self) -> tuple[int, ...]:
        return tuple(range(1, self.n_q, 2))

    @classmethod
    def from_qubits(cls, n_q: int) -> "QnnLayout":
        if n_q < 2 or n_q % 2:
            raise ValueError(f"qubit count must be even and >= 2 (n_q = 2*n_d), got {n_q}")
        return cls(n_q // 2)


def qnn_gate_count(layout: QnnLayout) -> int:
    return 2 * layout.n_d + (layout.n_q - 1) + layout.n_q + (layout.n_q - 1)


def build_qnn_circuit(layout: QnnLayout, features, params, cascade: str = "descending") -> Circuit:
    features = np.asarray(features, dtype=float).ravel()
    params = np.asarray(params, dtype=float).ravel()
    if features.size != layout.n_d:
        raise ShapeError(f"expected {layout.n_d} features, got {features.size}")
    if params.size != layout.n_q:
        raise ShapeError(f"expected {layout.n_q} params, got {params.size}")
    if cascade not in CASCADES:
        raise ValueError(f"cascade must be one of {CASCADES}")

    n_q = layout.n_q
    c = Circuit(n_q)
    for x, q in zip(features, layout.encoding_qubits):
        c.append(RX(q, x))
        c.append(RZ(q, x))
    for i in range(n_q - 1):
        c.append(CNOT(i, i + 1))
    for j, theta in enumerate(params):
        c.append(RY(j, theta))
    order = range(n_q - 2, -1, -1) if cascade == "descending" else range(n_q - 1)
    for i in order:
        c.append(CNOT(i, i + 1))
    return c


def class_probability(z) -> float:
    """Map mean readout <Z> in [-1, 1] onto a probability of class 1."""
    return (1.0 + float(np.mean(z))) / 2.0


def qnn_forward(layout: QnnLayout, features, params, shots: int | None = None,
                simulator: Simulator | None = None, cascade: str = "descending"):
    """Return (per-readout-qubit <Z>, class probability).

    ``shots=None`` gives exact expectations.
    """
    sim = simulator or Simulator()
    circuit = build_qnn_circuit(layout, features, params, cascade)
    z = sim.expectations(circuit, layout.measurement_qubits, shots)
    return z, class_probability(z)


def build_fidelity_circuit(layout: QnnLayout, cascade: str = "descending") -> Circuit:
    forward = build_qnn_circuit(
        layout,
        np.full(layout.n_d, FIDELITY_FEATURE),
        np.full(layout.n_q, FIDELITY_PARAM),
        cascade,
    )
    return forward.compose(adjoint(forward))


# ---------------------------------------------------------------------------
# noise

@dataclass(frozen=True)
class NoiseSpec:
    per_gate_pauli_error: float = 0.0
    rng_seed: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.per_gate_pauli_error < 1.0:
            raise ValueError("per_gate_pauli_error must be in [0, 1)")


def _pauli(kind: int, q: int) -> Gate:
    # Y and Z up to a global phase, which no measurement can see
    if kind == 0:
        return X(q)
    if kind == 1:
        return RY(q, math.pi)
    return RZ(q, math.pi)


def error_sites(circuit: Circuit) -> list[tuple[int, int]]:
    """(gate index, qubit) pairs where the channel may fire."""
    return [(i, q) for i, g in enumerate(circuit.gates) for q in g.qubits]


def run_trajectory(circuit: Circuit, fired: np.ndarray, paulis: np.ndarray,
                   simulator: Simulator):
    """Run one noisy trajectory.

    ``fired[k]`` says whether error site ``k`` applies ``paulis[k]`` (0=X,
    1=Y, 2=Z) right after its gate.
    """
    sites = error_sites(circuit)
    after: dict[int, list[Gate]] = {}
    for k in np.flatnonzero(fired):
        i, q = sites[k]
        after.setdefault(i, []).append(_pauli(int(paulis[k]), q))
    state = init_ground(circuit.n_qubits, simulator.precision)
    for i, gate in enumerate(circuit.gates):
        apply_gate(state, gate, simulator.plan)
        for err in after.get(i, ()):
            apply_gate(state, err, simulator.plan)
    simulator.executions += 1
    return state


def _ground_fraction(circuit: Circuit, ideal_p0: float, ideal_state, p: float,
                     shots: int | None, trajectories: int, rng: np.random.Generator,
                     sim: Simulator) -> float:
    n_sites = len(error_sites(circuit))
    draws = shots if shots is not None else trajectories
    if p == 0.0:
        if shots is None:
            return ideal_p0
        return float(np.count_nonzero(sample_shots(ideal_state, shots, rng) == 0)) / shots

    fired = rng.random((draws, n_sites)) < p
    paulis = rng.integers(0, 3, size=(draws, n_sites))
    clean = ~fired.any(axis=1)
    n_clean = int(clean.sum())
    total = 0.0
    if n_clean:
        if shots is None:
            total += n_clean * ideal_p0
        else:
            total += np.count_nonzero(sample_shots(ideal_state, n_clean, rng) == 0)
    for row in np.flatnonzero(~clean):
        state = run_trajectory(circuit, fired[row], paulis[row], sim)
        if shots is None:
            total += float(state.probabilities()[0])
        else:
            total += int(sample_shots(state, 1, rng)[0] == 0)
    return total / draws


def measure_fidelity(layout: QnnLayout, noise: NoiseSpec | None = None, shots: int | None = 1000,
                     jobs: int = 10, simulator: Simulator | None = None,
                     trajectories: int = 1000, cascade: str = "descending"):
    """Mean and sample std of the ground-state fraction over ``jobs`` jobs.

    Each shot follows its own noise trajectory. With ``shots=None`` every
    trajectory contributes its exact ground-state probability instead of a
    sampled bit.
    """
    if shots is not None and shots < 1:
        raise ValueError("shots must be >= 1")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    noise = noise or NoiseSpec()
    sim = simulator or Simulator()
    circuit = build_fidelity_circuit(layout, cascade)
    ideal = sim.run(circuit)
    ideal_p0 = float(ideal.probabilities()[0])

    streams = np.random.SeedSequence(noise.rng_seed).spawn(jobs)
    fids = np.array([
        _ground_fraction(circuit, ideal_p0, ideal, noise.per_gate_pauli_error, shots,
                         trajectories, np.random.default_rng(s), sim)
        for s in streams
    ])
    if jobs < 2:
        return float(fids.mean()), float("nan")
    if np.all(fids == fids[0]):
        return float(fids[0]), 0.0
    return float(fids.mean()), float(fids.std(ddof=1))
