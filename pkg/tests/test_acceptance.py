"""Acceptance criteria, one test each, at their stated tolerances and time budgets.

Run with ``pytest tests/test_acceptance.py -s`` to see the PASS/FAIL lines as
they happen; they are also collected in the terminal summary.
"""

import math
import os
import time

import numpy as np
import pytest

from oracles import central_diff, circuit_unitary, random_circuit
from qvbench.bench import BenchConfig, run_thread_sweep, run_timing_campaign
from qvbench.circuits import NoiseSpec, QnnLayout, measure_fidelity
from qvbench.cost import AmortizedSetup, PerTaskPerShot, estimate_cost, format_usd
from qvbench.dataset import ShellConfig, generate
from qvbench.statevector import Precision, Simulator, memory_required
from qvbench.stats import chauvenet_filter
from qvbench.training import (
    QnnModel,
    TrainConfig,
    parameter_shift_grad,
    qnn_sample_grad,
    sample_gradient,
    train,
)


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def test_01_cost_table(criterion):
    ionq, rigetti = PerTaskPerShot(0.30, 0.01), PerTaskPerShot(0.30, 0.000035)
    expected = [(ionq, 2, "515.00"), (ionq, 4, "927.00"), (ionq, 10, "2163.00"),
                (rigetti, 2, "16.75"), (rigetti, 4, "30.15"), (rigetti, 26, "177.55")]
    with Clock() as clk:
        got = [format_usd(estimate_cost(m, 100, 100, n, 1000).total_usd / 1000)
               for m, n, _ in expected]
        infer = estimate_cost(ionq, 1, 1, 2, 1000, inference=True).total_usd
    ok = got == [e for *_, e in expected] and format_usd(infer) == "10.30" and clk.seconds < 1
    assert criterion(1, ok, f"kUSD {got}, IonQ inference {infer:.2f} USD, {clk.seconds:.3f}s")


def test_02_amortized_setup(criterion):
    with Clock() as clk:
        q = estimate_cost(AmortizedSetup(1.60, 5.0, 250e-6, 1), 100, 100, 26, 1000)
    ok = format_usd(q.total_usd) == "212800.00" and clk.seconds < 1
    assert criterion(2, ok, f"total {q.total_usd:.6f} USD, {clk.seconds:.3f}s")


def test_03_fidelity_identity(criterion):
    with Clock() as clk:
        res = {n_d: measure_fidelity(QnnLayout(n_d), NoiseSpec(0.0, rng_seed=n_d),
                                     shots=1000, jobs=10)
               for n_d in range(1, 6)}
    ok = all(m == 1.0 and s == 0.0 for m, s in res.values()) and clk.seconds < 30
    assert criterion(3, ok, f"(mean, std) by n_d {res}, {clk.seconds:.2f}s")


def test_04_gradient_exactness(criterion):
    rng = np.random.default_rng(2024)
    sim = Simulator()
    worst = 0.0
    with Clock() as clk:
        for n_d in (1, 2, 3):
            for _ in range(20):
                model = QnnModel.init(n_d, rng)
                x = rng.uniform(-1.5, 1.5, size=n_d)
                ps = parameter_shift_grad(model, x, None, sim)
                fd = central_diff(lambda th: model.expectations(x, sim, None, th), model.theta, 1e-4)
                worst = max(worst, float(np.max(np.abs(ps - fd))))
    ok = worst <= 1e-6 and clk.seconds < 60
    assert criterion(4, ok, f"max |shift - FD| = {worst:.2e} over 60 instances, {clk.seconds:.2f}s")


def test_05_execution_accounting(criterion):
    counts = {}
    with Clock() as clk:
        for n_w in range(2, 13, 2):
            model = QnnModel.init(n_w // 2, n_w)
            x = np.linspace(0.1, 0.9, n_w // 2)
            sim = Simulator()
            qnn_sample_grad(model, x, 1, None, sim)
            direct = sim.executions
            sim.executions = 0
            sample_gradient(model, None, x, 0, 100, sim)
            counts[n_w] = (direct, sim.executions)
    ok = all(c == (2 * n + 1, 2 * n + 1) for n, c in counts.items()) and clk.seconds < 60
    assert criterion(5, ok, f"executions per sample gradient {counts}, {clk.seconds:.2f}s")


def test_06_memory_law(criterion):
    with Clock() as clk:
        at30 = memory_required(30, Precision.DOUBLE)
        doubling = all(
            memory_required(n + 1, p) == 2 * memory_required(n, p)
            and memory_required(1, p) == 2 * p.bytes_per_amplitude
            for p in Precision for n in range(1, 40)
        )
    ok = at30 == 17_179_869_184 and doubling and clk.seconds < 1
    assert criterion(6, ok, f"memory_required(30, double) = {at30:,} B, doubling={doubling}")


@pytest.mark.slow
def test_07_scaling_shape(criterion):
    qubits = [18, 20, 22, 24]
    with Clock() as clk:
        recs = run_timing_campaign("infer-qnn", qubits, 5, BenchConfig(shots=1000))
    t = {r.n_qubits: r.mean_s for r in recs}
    ratios = {n: t[n + 2] / t[n] for n in (18, 20, 22)}
    ok = all(2.5 <= r <= 8 for r in ratios.values()) and clk.seconds < 600
    detail = ", ".join(f"t({n + 2})/t({n})={r:.2f}" for n, r in ratios.items())
    assert criterion(7, ok, f"{detail}, {clk.seconds:.1f}s")


@pytest.fixture(scope="module")
def sweep():
    t0 = time.perf_counter()
    s = run_thread_sweep("infer-qnn", [20], (1, 2, 4, 8, 12, 16, 20, 24), repeats=3,
                         config=BenchConfig())
    return s, time.perf_counter() - t0


@pytest.mark.slow
class TestCriterion08:
    def test_outputs_agree(self, sweep, criterion):
        s, seconds = sweep
        ok = s.max_output_deviation <= 1e-12 and seconds < 900
        assert criterion(8, ok, f"max deviation across thread counts "
                                f"{s.max_output_deviation:.1e}, {seconds:.1f}s")

    def test_best_thread_count(self, sweep, criterion):
        s, _ = sweep
        cores = os.cpu_count() or 1
        best = s.best[0].best_threads
        if cores < 8:
            criterion(8, "SKIP", f"best thread count > 1 needs a >=8-core host; this host has "
                                 f"{cores} core(s) (measured best = {best})")
            pytest.skip(f"host has {cores} cores, criterion assumes >= 8")
        assert criterion(8, best > 1, f"best thread count at 20 qubits = {best}")


def test_09_brute_force_oracle(criterion):
    rng = np.random.default_rng(99)
    sim = Simulator()
    worst = 0.0
    with Clock() as clk:
        for i in range(200):
            n = 2 + i % 2
            c = random_circuit(rng, n, int(rng.integers(0, 7)))
            psi = sim.run(c).amplitudes
            worst = max(worst, float(np.max(np.abs(psi - circuit_unitary(c)[:, 0]))))
    ok = worst <= 1e-12 and clk.seconds < 60
    assert criterion(9, ok, f"max amplitude error {worst:.1e} over 200 circuits, {clk.seconds:.2f}s")


def test_10_learning_smoke(criterion):
    accs = []
    with Clock() as clk:
        for seed in range(5):
            ds = generate(ShellConfig(n_d=1, m=100, sigma=0.01, rng_seed=seed))
            result = train(QnnModel.init(1, seed), ds,
                           TrainConfig(epochs=20, shots=None, lr=0.3, rng_seed=seed))
            accs.append(result.history[-1].accuracy)
    passing = sum(a >= 0.95 for a in accs)
    ok = passing >= 4 and clk.seconds < 300
    assert criterion(10, ok, f"final train accuracy by seed {accs}: {passing}/5 >= 0.95, "
                             f"{clk.seconds:.1f}s")


def test_11_chauvenet(criterion):
    rng = np.random.default_rng(11)
    xs = list(rng.normal(size=100)) + [10.0]
    with Clock() as clk:
        _, rejected = chauvenet_filter(xs)
    mu, sd = np.mean(xs), np.std(xs, ddof=1)
    oracle = sorted(x for x in xs if len(xs) * math.erfc(abs(x - mu) / sd / math.sqrt(2)) < 0.5)
    extra = len(rejected) - 1
    ok = 10.0 in rejected and extra <= 2 and sorted(rejected) == oracle and clk.seconds < 1
    assert criterion(11, ok, f"rejected {rejected} (oracle {oracle}), {clk.seconds * 1e3:.1f}ms")
