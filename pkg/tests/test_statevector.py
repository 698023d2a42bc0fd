import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import circuit_unitary, random_circuit, random_state
from qvbench.statevector import (
    CNOT,
    CZ,
    RAM_BUDGET_ENV,
    RX,
    RY,
    RZ,
    CapacityError,
    Circuit,
    EmptyShots,
    Gate,
    H,
    Precision,
    Simulator,
    StateVector,
    ThreadPlan,
    X,
    adjoint,
    apply_circuit,
    apply_gate,
    expectation_z,
    expectations_z,
    gate_matrix,
    init_ground,
    memory_required,
    sample_shots,
    shot_expectation_z,
)


def state_from(vec, precision=Precision.DOUBLE):
    n = int(np.log2(len(vec)))
    return StateVector(n, precision, np.asarray(vec, dtype=precision.dtype).copy())


class TestInitAndMemory:
    def test_ground_one_qubit(self):
        s = init_ground(1)
        np.testing.assert_array_equal(s.amplitudes, [1, 0])

    def test_ground_three_qubits(self):
        s = init_ground(3)
        assert s.amplitudes.shape == (8,)
        assert s.norm() == 1.0

    def test_precision_bytes(self):
        assert Precision.DOUBLE.bytes_per_amplitude == 16
        assert Precision.SINGLE.bytes_per_amplitude == 8
        assert init_ground(2, "single").amplitudes.dtype == np.complex64

    def test_memory_values(self):
        assert memory_required(30, Precision.DOUBLE) == 17_179_869_184
        assert memory_required(1, Precision.DOUBLE) == 32
        assert memory_required(40, Precision.SINGLE) == 8 * 2**40 == 8_796_093_022_208

    @pytest.mark.parametrize("precision", list(Precision))
    def test_memory_doubles(self, precision):
        for n in range(1, 40):
            assert memory_required(n + 1, precision) == 2 * memory_required(n, precision)

    def test_capacity_error(self, monkeypatch):
        monkeypatch.setenv(RAM_BUDGET_ENV, "100")
        init_ground(2)  # 64 bytes fits
        with pytest.raises(CapacityError):
            init_ground(3)

    def test_forty_single_is_refused_on_small_budget(self, monkeypatch):
        monkeypatch.setenv(RAM_BUDGET_ENV, str(2**30))
        with pytest.raises(CapacityError):
            init_ground(40, Precision.SINGLE)

    def test_qubit_range(self):
        with pytest.raises(ValueError):
            init_ground(0)
        with pytest.raises(ValueError):
            init_ground(41)


class TestGates:
    def test_x_flips_least_significant_bit(self):
        s = init_ground(2)
        apply_gate(s, X(0))
        np.testing.assert_array_equal(s.amplitudes, [0, 1, 0, 0])  # |01>

    def test_cnot(self):
        s = state_from([0, 1, 0, 0])  # |01>: qubit 0 set
        apply_gate(s, CNOT(0, 1))
        np.testing.assert_array_equal(s.amplitudes, [0, 0, 0, 1])  # |11>

    def test_rx_pi(self):
        s = init_ground(1)
        apply_gate(s, RX(0, math.pi))
        assert expectation_z(s, 0) == pytest.approx(-1.0, abs=1e-15)

    def test_cz_phase(self):
        s = state_from(np.full(4, 0.5))
        apply_gate(s, CZ(1, 0))
        np.testing.assert_allclose(s.amplitudes, [0.5, 0.5, 0.5, -0.5])

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            apply_gate(init_ground(2), X(2))
        with pytest.raises(IndexError):
            Circuit(2).append(CNOT(0, 3))

    def test_control_equals_target(self):
        with pytest.raises(ValueError):
            CNOT(1, 1)

    @pytest.mark.parametrize("kind", ["RX", "RY", "RZ", "X", "H", "CNOT", "CZ"])
    def test_unitary(self, kind):
        u = gate_matrix(kind, 0.731)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(len(u)), atol=1e-12)

    def test_inverse(self):
        assert RX(0, 0.3).inverse() == RX(0, -0.3)
        assert H(1).inverse() == H(1)
        assert CNOT(0, 1).inverse() == CNOT(0, 1)


class TestAdjoint:
    def test_rotation(self):
        c = adjoint(Circuit(1, [RX(0, 0.3)]))
        assert c.gates == [RX(0, -0.3)]

    def test_order(self):
        c = adjoint(Circuit(2, [H(0), CNOT(0, 1)]))
        assert c.gates == [CNOT(0, 1), H(0)]

    def test_involution(self, rng):
        c = random_circuit(rng, 4, 30)
        assert adjoint(adjoint(c)).gates == c.gates

    def test_roundtrip_random_state(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 7))
            c = random_circuit(rng, n, 40)
            psi = random_state(rng, n)
            s = state_from(psi)
            apply_circuit(s, c.compose(adjoint(c)))
            np.testing.assert_allclose(s.amplitudes, psi, atol=1e-9)


class TestExpectation:
    def test_ground(self):
        assert expectation_z(init_ground(1), 0) == 1.0

    def test_ry_cos(self):
        s = apply_gate(init_ground(1), RY(0, 1.0))
        assert expectation_z(s, 0) == pytest.approx(math.cos(1.0), abs=1e-12)
        assert expectation_z(s, 0) == pytest.approx(0.540302, abs=1e-6)

    def test_plus_state(self):
        s = apply_gate(init_ground(1), H(0))
        assert abs(expectation_z(s, 0)) < 1e-12

    def test_bad_qubit(self):
        with pytest.raises(IndexError):
            expectation_z(init_ground(2), 5)

    def test_many_qubits_consistent(self, rng):
        c = random_circuit(rng, 5, 40)
        s = apply_circuit(init_ground(5), c)
        np.testing.assert_allclose(expectations_z(s, range(5)),
                                   [expectation_z(s, q) for q in range(5)], atol=1e-15)


class TestShots:
    def test_point_mass(self):
        shots = sample_shots(init_ground(3), 1000, 0)
        assert np.all(shots == 0)

    def test_plus_fraction(self):
        # P(450 <= Bin(1000, 1/2) <= 550) = 0.998608 (scipy.stats.binom)
        s = apply_gate(init_ground(1), H(0))
        shots = sample_shots(s, 1000, 7)
        assert 0.45 <= np.mean(shots == 0) <= 0.55

    def test_deterministic(self):
        s = apply_gate(init_ground(3), H(1))
        np.testing.assert_array_equal(sample_shots(s, 500, 42), sample_shots(s, 500, 42))

    def test_shot_expectation(self):
        assert shot_expectation_z([0, 0, 0], 0) == 1.0
        assert shot_expectation_z([0, 1, 0, 1], 0) == 0.0
        with pytest.raises(EmptyShots):
            shot_expectation_z([], 0)

    def test_law_of_large_numbers(self):
        s = apply_gate(init_ground(1), RY(0, 1.0))
        est = shot_expectation_z(sample_shots(s, 10**6, 3), 0)
        assert abs(est - math.cos(1.0)) < 0.01

    def test_simulator_shot_mode(self):
        sim = Simulator(seed=5)
        c = Circuit(2, [RY(0, 0.4), CNOT(0, 1), RY(1, 1.1)])
        exact = sim.expectations(c, [0, 1])
        est = sim.expectations(c, [0, 1], shots=200_000)
        np.testing.assert_allclose(est, exact, atol=0.01)
        assert sim.executions == 2


class TestProperties:
    def test_brute_force_small(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 5))
            c = random_circuit(rng, n, int(rng.integers(1, 12)))
            psi = random_state(rng, n)
            s = apply_circuit(state_from(psi), c)
            np.testing.assert_allclose(s.amplitudes, circuit_unitary(c) @ psi, atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 12), n_gates=st.integers(1, 200))
    def test_norm_preserved(self, seed, n, n_gates):
        rng = np.random.default_rng(seed)
        s = apply_circuit(init_ground(n), random_circuit(rng, n, n_gates))
        assert abs(s.norm() - 1) < 1e-9

    def test_single_vs_double(self, rng):
        for _ in range(10):
            n = int(rng.integers(1, 11))
            c = random_circuit(rng, n, 100)
            d = apply_circuit(init_ground(n, "double"), c)
            s = apply_circuit(init_ground(n, "single"), c)
            assert abs(s.norm() - 1) < 1e-4
            np.testing.assert_allclose(s.amplitudes, d.amplitudes, atol=1e-4)
            np.testing.assert_allclose(expectations_z(s, range(n)),
                                       expectations_z(d, range(n)), atol=1e-4)

    @pytest.mark.parametrize("n", [4, 12, 16])
    def test_thread_count_independence(self, n, rng):
        c = random_circuit(rng, n, 60)
        results = []
        for threads in (1, 2, 4, 8):
            # tiny min_chunk forces real splitting even on small states
            s = apply_circuit(init_ground(n), c, ThreadPlan(threads, min_chunk=4))
            results.append((s.amplitudes.copy(), expectations_z(s, range(n))))
        for amps, z in results[1:]:
            np.testing.assert_allclose(amps, results[0][0], atol=1e-12, rtol=0)
            np.testing.assert_allclose(z, results[0][1], atol=1e-12, rtol=0)

    def test_threaded_matches_oracle(self, rng):
        c = random_circuit(rng, 4, 30)
        psi = random_state(rng, 4)
        s = apply_circuit(state_from(psi), c, ThreadPlan(3, min_chunk=1))
        np.testing.assert_allclose(s.amplitudes, circuit_unitary(c) @ psi, atol=1e-12)


def test_gate_normalizes_kind():
    assert Gate("rx", (0,), 0.1).kind == "RX"
    with pytest.raises(ValueError):
        Gate("T", (0,))
    assert RZ(0, 1.0).angle == 1.0


def test_circuit_depth():
    c = Circuit(3, [H(0), H(1), CNOT(0, 1), X(2)])
    assert c.depth == 2
    assert c.compose(adjoint(c)).depth == 4
