"""Dense state-vector simulation.

Qubit 0 is the least-significant bit of a basis-state index. Gate kernels
work on strided views of the amplitude array and split each view into
contiguous chunks that a thread pool processes concurrently; numpy releases
the GIL inside its ufunc loops, so the chunks really do run in parallel.
"""

from __future__ import annotations

import enum
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

MAX_QUBITS = 40
RAM_BUDGET_ENV = "QVBENCH_RAM_BUDGET_BYTES"


class CapacityError(MemoryError):
    """Raised when a state vector would exceed the configured RAM budget."""


class EmptyShots(ValueError):
    pass


class Precision(enum.Enum):
    DOUBLE = "double"
    SINGLE = "single"

    @property
    def bytes_per_amplitude(self) -> int:
        return 16 if self is Precision.DOUBLE else 8

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.complex128 if self is Precision.DOUBLE else np.complex64)

    @classmethod
    def parse(cls, value: "Precision | str") -> "Precision":
        if isinstance(value, Precision):
            return value
        return cls(str(value).lower())


def memory_required(n_qubits: int, precision: Precision | str = Precision.DOUBLE) -> int:
    """Bytes needed to hold the amplitudes of an ``n_qubits`` state."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    return (1 << n_qubits) * Precision.parse(precision).bytes_per_amplitude


def physical_ram_bytes() -> int | None:
    try:
        return os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")
    except (ValueError, OSError, AttributeError):
        return None


def ram_budget() -> int | None:
    """Allocation cap in bytes: env override, else 75% of physical RAM."""
    env = os.environ.get(RAM_BUDGET_ENV)
    if env:
        return int(env)
    ram = physical_ram_bytes()
    return None if ram is None else int(ram * 0.75)


def check_capacity(n_qubits: int, precision: Precision | str = Precision.DOUBLE) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
    need = memory_required(n_qubits, precision)
    budget = ram_budget()
    if budget is not None and need > budget:
        raise CapacityError(
            f"{n_qubits} qubits need {need} bytes, budget is {budget} bytes "
            f"(set {RAM_BUDGET_ENV} to override)"
        )


# ---------------------------------------------------------------------------
# gates and circuits

SINGLE_QUBIT = frozenset({"RX", "RY", "RZ", "X", "H"})
ROTATIONS = frozenset({"RX", "RY", "RZ"})
TWO_QUBIT = frozenset({"CNOT", "CZ"})


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if kind in SINGLE_QUBIT:
            if len(self.qubits) != 1:
                raise ValueError(f"{kind} acts on exactly one qubit")
        elif kind in TWO_QUBIT:
            if len(self.qubits) != 2:
                raise ValueError(f"{kind} needs (control, target)")
            if self.qubits[0] == self.qubits[1]:
                raise ValueError("control and target must differ")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if any(q < 0 for q in self.qubits):
            raise IndexError("negative qubit index")

    def inverse(self) -> "Gate":
        if self.kind in ROTATIONS:
            return Gate(self.kind, self.qubits, -self.angle)
        return self

    def matrix(self) -> np.ndarray:
        """Unitary in the (bit of qubits[-1], ...) little-endian local basis.

        Two-qubit matrices are indexed as ``2*control_bit + target_bit``.
        """
        return gate_matrix(self.kind, self.angle)


def RX(q, theta):  # noqa: N802 - gate names follow physics convention
    return Gate("RX", (q,), float(theta))


def RY(q, theta):  # noqa: N802
    return Gate("RY", (q,), float(theta))


def RZ(q, theta):  # noqa: N802
    return Gate("RZ", (q,), float(theta))


def X(q):  # noqa: N802
    return Gate("X", (q,))


def H(q):  # noqa: N802
    return Gate("H", (q,))


def CNOT(control, target):  # noqa: N802
    return Gate("CNOT", (control, target))


def CZ(control, target):  # noqa: N802
    return Gate("CZ", (control, target))


def gate_matrix(kind: str, angle: float = 0.0) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if kind == "RZ":
        return np.array([[complex(c, -s), 0], [0, complex(c, s)]], dtype=np.complex128)
    if kind == "X":
        return np.array([[0, 1], [1, 0]], dtype=np.complex128)
    if kind == "H":
        return np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
    if kind == "CNOT":
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
        )
    if kind == "CZ":
        return np.diag([1, 1, 1, -1]).astype(np.complex128)
    raise ValueError(f"unknown gate kind {kind!r}")


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def append(self, gate: Gate) -> "Circuit":
        if max(gate.qubits) >= self.n_qubits:
            raise IndexError(f"qubit {max(gate.qubits)} out of range for {self.n_qubits} qubits")
        self.gates.append(gate)
        return self

    def extend(self, gates) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    @property
    def depth(self) -> int:
        """Layered depth: each gate sits one layer above the qubits it touches."""
        level = [0] * self.n_qubits
        for g in self.gates:
            d = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = d
        return max(level, default=0)

    def compose(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        return Circuit(self.n_qubits, self.gates + other.gates)


def adjoint(circuit: Circuit) -> Circuit:
    return Circuit(circuit.n_qubits, [g.inverse() for g in reversed(circuit.gates)])


# ---------------------------------------------------------------------------
# threading

@dataclass(frozen=True)
class ThreadPlan:
    """How a gate's amplitude blocks are split across worker threads.

    ``min_chunk`` is the smallest number of amplitude pairs handed to one
    task; states smaller than that run inline on the calling thread.
    """

    thread_count: int = 1
    min_chunk: int = 1 << 14

    def __post_init__(self):
        if self.thread_count < 1:
            raise ValueError("thread_count must be >= 1")
        if self.min_chunk < 1:
            raise ValueError("min_chunk must be >= 1")


_pools: dict[int, ThreadPoolExecutor] = {}
_pools_lock = threading.Lock()


def _pool(threads: int) -> ThreadPoolExecutor:
    with _pools_lock:
        pool = _pools.get(threads)
        if pool is None:
            pool = _pools[threads] = ThreadPoolExecutor(
                max_workers=threads, thread_name_prefix=f"qvbench-{threads}"
            )
        return pool


def _chunk_index(shape: tuple[int, ...], n_chunks: int) -> list[tuple]:
    """Split an array shape along its longest axis into ``n_chunks`` slabs."""
    axis = int(np.argmax(shape))
    n_chunks = max(1, min(n_chunks, shape[axis]))
    bounds = np.linspace(0, shape[axis], n_chunks + 1).astype(int)
    out = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        idx = [slice(None)] * len(shape)
        idx[axis] = slice(int(lo), int(hi))
        out.append(tuple(idx))
    return out


def _run_chunked(kernel, blocks: list[np.ndarray], plan: ThreadPlan) -> None:
    shape = blocks[0].shape
    size = blocks[0].size
    n_chunks = min(plan.thread_count, max(1, size // plan.min_chunk))
    if n_chunks <= 1:
        kernel(*blocks)
        return
    futures = [
        _pool(plan.thread_count).submit(kernel, *(b[idx] for b in blocks))
        for idx in _chunk_index(shape, n_chunks)
    ]
    # barrier: every chunk finishes before the next gate starts
    for f in futures:
        f.result()


def _matrix_kernel(u00, u01, u10, u11):
    def kernel(b0, b1):
        tmp = b0.copy()
        b0 *= u00
        b0 += u01 * b1
        b1 *= u11
        b1 += u10 * tmp

    return kernel


def _diag_kernel(d0, d1):
    def kernel(b0, b1):
        b0 *= d0
        b1 *= d1

    return kernel


def _swap_kernel(b0, b1):
    tmp = b0.copy()
    b0[...] = b1
    b1[...] = tmp


def _negate_kernel(b):
    np.negative(b, out=b)


# ---------------------------------------------------------------------------
# state vector

@dataclass
class StateVector:
    n_qubits: int
    precision: Precision
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError("amplitude array length must be 2**n_qubits")

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.precision, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        a = self.amplitudes
        return a.real.astype(np.float64) ** 2 + a.imag.astype(np.float64) ** 2


def init_ground(n_qubits: int, precision: Precision | str = Precision.DOUBLE) -> StateVector:
    precision = Precision.parse(precision)
    check_capacity(n_qubits, precision)
    amps = np.zeros(1 << n_qubits, dtype=precision.dtype)
    amps[0] = 1.0
    return StateVector(n_qubits, precision, amps)


def _check_qubit(state: StateVector, q: int) -> None:
    if not 0 <= q < state.n_qubits:
        raise IndexError(f"qubit {q} out of range for {state.n_qubits} qubits")


def apply_gate(state: StateVector, gate: Gate, plan: ThreadPlan | None = None) -> StateVector:
    """Apply ``gate`` to ``state`` in place and return the same object."""
    plan = plan or ThreadPlan()
    for q in gate.qubits:
        _check_qubit(state, q)
    amps = state.amplitudes
    cast = state.precision.dtype.type

    if gate.kind in SINGLE_QUBIT:
        (q,) = gate.qubits
        view = amps.reshape(-1, 2, 1 << q)
        blocks = [view[:, 0, :], view[:, 1, :]]
        if gate.kind == "X":
            kernel = _swap_kernel
        elif gate.kind == "RZ":
            u = gate.matrix()
            kernel = _diag_kernel(cast(u[0, 0]), cast(u[1, 1]))
        else:
            u = gate.matrix()
            kernel = _matrix_kernel(*(cast(x) for x in u.ravel()))
        _run_chunked(kernel, blocks, plan)
        return state

    control, target = gate.qubits
    lo, hi = sorted(gate.qubits)
    view = amps.reshape(-1, 2, 1 << (hi - lo - 1), 2, 1 << lo)

    def block(cbit: int, tbit: int) -> np.ndarray:
        bits = {control: cbit, target: tbit}
        return view[:, bits[hi], :, bits[lo], :]

    if gate.kind == "CNOT":
        _run_chunked(_swap_kernel, [block(1, 0), block(1, 1)], plan)
    else:
        _run_chunked(_negate_kernel, [block(1, 1)], plan)
    return state


def apply_circuit(state: StateVector, circuit: Circuit, plan: ThreadPlan | None = None) -> StateVector:
    if circuit.n_qubits != state.n_qubits:
        raise ValueError("circuit and state qubit counts differ")
    for gate in circuit.gates:
        apply_gate(state, gate, plan)
    return state


def _z_signs_sum(probs: np.ndarray, qubit: int) -> float:
    view = probs.reshape(-1, 2, 1 << qubit)
    return float(view[:, 0, :].sum() - view[:, 1, :].sum())


def expectation_z(state: StateVector, qubit: int) -> float:
    _check_qubit(state, qubit)
    return _z_signs_sum(state.probabilities(), qubit)


def expectations_z(state: StateVector, qubits) -> np.ndarray:
    """<Z> for several qubits, computing the probability vector once."""
    probs = state.probabilities()
    out = np.empty(len(qubits))
    for i, q in enumerate(qubits):
        _check_qubit(state, q)
        out[i] = _z_signs_sum(probs, q)
    return out


def sample_shots(state: StateVector, n_shots: int, rng_seed=None) -> np.ndarray:
    """Draw ``n_shots`` basis-state indices from the Born distribution.

    ``rng_seed`` may be an int, a SeedSequence or an existing Generator.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    rng = np.random.default_rng(rng_seed)
    cdf = np.cumsum(state.probabilities())
    u = rng.random(n_shots) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, cdf.size - 1).astype(np.int64)


def shot_expectation_z(shots, qubit: int) -> float:
    shots = np.asarray(shots, dtype=np.int64)
    if shots.size == 0:
        raise EmptyShots("no shots to average")
    ones = int(np.count_nonzero((shots >> qubit) & 1))
    return (shots.size - 2 * ones) / shots.size


# ---------------------------------------------------------------------------

class Simulator:
    """Runs circuits from |0...0> and counts executions.

    The execution counter is the instrumentation hook for gradient
    accounting: every call to :meth:`run` is one circuit execution.
    """

    def __init__(self, precision: Precision | str = Precision.DOUBLE, threads: int = 1,
                 seed=None, plan: ThreadPlan | None = None):
        self.precision = Precision.parse(precision)
        self.plan = plan or ThreadPlan(threads)
        self.rng = np.random.default_rng(seed)
        self.executions = 0

    def run(self, circuit: Circuit) -> StateVector:
        state = init_ground(circuit.n_qubits, self.precision)
        apply_circuit(state, circuit, self.plan)
        self.executions += 1
        return state

    def expectations(self, circuit: Circuit, qubits, shots: int | None = None) -> np.ndarray:
        """Per-qubit <Z>, exact when ``shots`` is None, else from one shot batch."""
        state = self.run(circuit)
        if shots is None:
            return expectations_z(state, qubits)
        samples = sample_shots(state, shots, self.rng)
        return np.array([shot_expectation_z(samples, q) for q in qubits])
