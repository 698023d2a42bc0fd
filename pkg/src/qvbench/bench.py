"""Timing campaigns, thread sweeps, fidelity campaigns and cost tables."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import cost as costmod
from .circuits import NoiseSpec, QnnLayout, measure_fidelity
from .dataset import ShellConfig, generate
from .stats import summarize
from .statevector import Precision, Simulator, check_capacity
from .training import MlpHead, QnnModel, TrainConfig, predict, train

log = logging.getLogger(__name__)

WORKLOADS = ("train-qnn", "train-hqnn", "infer-qnn", "infer-hqnn")
DEFAULT_THREADS = (1, 2, 4, 8, 12, 16, 20, 24)


@dataclass
class BenchRecord:
    workload: str
    n_qubits: int
    backend: str
    repeats: int
    mean_s: float
    std_s: float | None
    samples: list[float] = field(default_factory=list)
    kept: int = 0

    CSV_COLUMNS = ("workload", "n_qubits", "backend", "repeats", "mean_s", "std_s")


@dataclass
class ThreadCell:
    n_qubits: int
    threads: int
    mean_s: float
    std_s: float | None
    samples: list[float] = field(default_factory=list)

    CSV_COLUMNS = ("n_qubits", "threads", "mean_s", "std_s")


@dataclass
class BestThreads:
    n_qubits: int
    best_threads: int
    mean_s: float

    CSV_COLUMNS = ("n_qubits", "best_threads", "mean_s")


@dataclass
class FidelityRow:
    n_qubits: int
    noise_p: float
    mean_f: float
    std_f: float | None

    CSV_COLUMNS = ("n_qubits", "noise_p", "mean_f", "std_f")


@dataclass
class CostRow:
    scheme: str
    n_qubits: int
    n_circuits: int
    total_usd: float
    component_task_usd: float | None
    component_shot_usd: float | None
    component_time_usd: float | None

    CSV_COLUMNS = ("scheme", "n_qubits", "n_circuits", "total_usd",
                   "component_task_usd", "component_shot_usd", "component_time_usd")


@dataclass
class BenchConfig:
    shots: int | None = 1000
    seed: int = 0
    threads: int = 1
    precision: str = "double"
    train_samples: int = 4
    filter_outliers: bool = True
    backend: str = "local"


def parse_workload(workload: str) -> tuple[str, bool]:
    if workload not in WORKLOADS:
        raise ValueError(f"workload must be one of {WORKLOADS}, got {workload!r}")
    mode, kind = workload.split("-")
    return mode, kind == "hqnn"


class Workload:
    """One timed unit of work at a fixed circuit size.

    Inputs (features, parameters, head weights) are drawn once from the
    seed, so every repeat runs identical numerical work.
    """

    def __init__(self, workload: str, n_qubits: int, config: BenchConfig):
        self.mode, hybrid = parse_workload(workload)
        self.layout = QnnLayout.from_qubits(n_qubits)
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.model = QnnModel.init(self.layout.n_d, rng)
        self.head = MlpHead.init(self.layout.n_d, rng) if hybrid else None
        self.data = generate(ShellConfig(n_d=self.layout.n_d, m=max(2, config.train_samples),
                                         rng_seed=config.seed))

    def simulator(self, threads: int | None = None) -> Simulator:
        return Simulator(self.config.precision, threads or self.config.threads, self.config.seed)

    def run_once(self, sim: Simulator) -> float:
        """Seconds for one unit: a forward pass, or per sample of one training epoch."""
        if self.mode == "infer":
            start = time.perf_counter()
            predict(self.model, self.head, self.data.points[0], sim, self.config.shots)
            return time.perf_counter() - start
        cfg = TrainConfig(epochs=1, shots=self.config.shots, rng_seed=self.config.seed)
        result = train(self.model, self.data, cfg, head=self.head, simulator=sim,
                       eval_each_epoch=False)
        return result.history[0].seconds_per_sample

    def outputs(self, sim: Simulator) -> np.ndarray:
        """Exact readout expectations; used to check thread-count invariance."""
        return self.model.expectations(self.data.points[0], sim, None)


def _validate_qubits(qubits) -> list[int]:
    qs = [int(q) for q in qubits]
    if not qs:
        raise ValueError("empty qubit range")
    for q in qs:
        if q < 2 or q % 2:
            raise ValueError(f"qubit counts must be even (n_q = 2*n_d), got {q}")
    return qs


def run_timing_campaign(workload: str, qubits, repeats: int,
                        config: BenchConfig | None = None) -> list[BenchRecord]:
    config = config or BenchConfig()
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    records = []
    for n_q in _validate_qubits(qubits):
        check_capacity(n_q, Precision.parse(config.precision))
        work = Workload(workload, n_q, config)
        sim = work.simulator()
        samples = [work.run_once(sim) for _ in range(repeats)]
        mean, std, kept = summarize(samples, config.filter_outliers)
        log.info("%s n_q=%d mean=%.6g s over %d/%d", workload, n_q, mean, len(kept), repeats)
        records.append(BenchRecord(workload, n_q, config.backend, repeats, mean, std,
                                   samples, len(kept)))
    return records


@dataclass
class ThreadSweep:
    cells: list[ThreadCell]
    best: list[BestThreads]
    max_output_deviation: float

    def table(self) -> list[list[str]]:
        """Rows = thread counts, columns = qubit counts, then a best-threads row."""
        qubits = sorted({c.n_qubits for c in self.cells})
        threads = sorted({c.threads for c in self.cells})
        cell = {(c.n_qubits, c.threads): c for c in self.cells}
        rows = [["threads"] + [str(q) for q in qubits]]
        for t in threads:
            rows.append([str(t)] + [f"{cell[(q, t)].mean_s:.4g}" if (q, t) in cell else ""
                                    for q in qubits])
        best = {b.n_qubits: b.best_threads for b in self.best}
        rows.append(["Best thread count"] + [str(best[q]) for q in qubits])
        return rows


def run_thread_sweep(workload: str, qubits, threads=DEFAULT_THREADS, repeats: int = 3,
                     config: BenchConfig | None = None) -> ThreadSweep:
    config = config or BenchConfig()
    thread_set = sorted({int(t) for t in threads})
    if not thread_set or thread_set[0] < 1:
        raise ValueError("thread counts must be >= 1")
    cells, best, deviation = [], [], 0.0
    for n_q in _validate_qubits(qubits):
        check_capacity(n_q, Precision.parse(config.precision))
        work = Workload(workload, n_q, config)
        reference = work.outputs(work.simulator(1))
        row = []
        for t in thread_set:
            sim = work.simulator(t)
            deviation = max(deviation, float(np.max(np.abs(work.outputs(sim) - reference))))
            samples = [work.run_once(sim) for _ in range(repeats)]
            mean, std, _ = summarize(samples, config.filter_outliers)
            row.append(ThreadCell(n_q, t, mean, std, samples))
        cells.extend(row)
        # ties go to the smaller thread count: min() keeps the first minimum
        winner = min(row, key=lambda c: c.mean_s)
        best.append(BestThreads(n_q, winner.threads, winner.mean_s))
    return ThreadSweep(cells, best, deviation)


def run_fidelity_campaign(qubits, noise_grid, shots: int | None = 1000, jobs: int = 10,
                          seed: int | None = 0, precision: str = "double",
                          threads: int = 1) -> list[FidelityRow]:
    noise_grid = [float(p) for p in noise_grid]
    if not noise_grid:
        raise ValueError("empty noise grid")
    rows = []
    for n_q in _validate_qubits(qubits):
        layout = QnnLayout.from_qubits(n_q)
        for p in noise_grid:
            sim = Simulator(precision, threads, seed)
            mean, std = measure_fidelity(layout, NoiseSpec(p, seed), shots, jobs, sim)
            rows.append(FidelityRow(n_q, p, mean, None if np.isnan(std) else std))
    return rows


def cost_table(model: costmod.CostModel, qubits, epochs: int = 100, samples: int = 100,
               shots: int = 1000, billed_seconds=None, inference: bool = False,
               n_w: int | None = None) -> list[CostRow]:
    """One quote per circuit size; ``n_w`` defaults to the qubit count."""
    rows = []
    for n_q in qubits:
        q = costmod.estimate_cost(model, epochs, samples, n_q if n_w is None else n_w, shots,
                                  billed_seconds=billed_seconds, inference=inference)
        rows.append(CostRow(q.scheme, int(n_q), q.n_circuits, q.total_usd,
                            q.task_usd, q.shot_usd, q.time_usd))
    return rows
