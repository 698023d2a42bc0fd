"""``qvbench`` command line.

Every command resolves its settings as flags > ``--config`` file > defaults,
writes ``results.csv``, ``results.json`` and the resolved ``config.json``
under ``<out>/<command>/<timestamp>/`` and reports that directory on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path

from . import bench, cost as costmod
from .dataset import ConfigError, ShellConfig, ShellDataset, generate
from .io import emit_results, write_table
from .statevector import CapacityError
from .training import MlpHead, QnnModel, TrainConfig, save_checkpoint, train

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_CAPACITY = 0, 1, 2, 3

log = logging.getLogger("qvbench")


class CliError(Exception):
    """Bad configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# value parsers

def parse_qubits(spec) -> list[int]:
    """``"2..=12"`` (inclusive, step 2), ``"2..12"`` (exclusive), ``"2,4,8"`` or a list."""
    if isinstance(spec, int):
        values = [spec]
    elif isinstance(spec, (list, tuple)):
        values = [int(v) for v in spec]
    else:
        values = []
        for part in str(spec).split(","):
            part = part.strip()
            if "..=" in part:
                lo, hi = part.split("..=")
                values += list(range(int(lo), int(hi) + 1, 2))
            elif ".." in part:
                lo, hi = part.split("..")
                values += list(range(int(lo), int(hi), 2))
            elif part:
                values.append(int(part))
    if not values:
        raise CliError(f"empty qubit range {spec!r}")
    odd = [v for v in values if v % 2 or v < 2]
    if odd:
        raise CliError(f"qubit counts must be even and >= 2 because n_q = 2*n_d; got {odd}")
    return values


def parse_floats(spec) -> list[float]:
    if isinstance(spec, (int, float)):
        return [float(spec)]
    if isinstance(spec, (list, tuple)):
        return [float(v) for v in spec]
    return [float(v) for v in str(spec).split(",") if v.strip()]


def parse_ints(spec) -> list[int]:
    return [int(v) for v in parse_floats(spec)]


# ---------------------------------------------------------------------------
# argument definitions

DEFAULTS = {
    "dataset": dict(n_d=2, m=500, r_inner=0.2, r_outer=1.0, sigma=0.3, seed=0),
    "bench": dict(workload="all", qubits="2..=12", repeats=10, shots=1000, seed=0, threads=1,
                  precision="double", train_samples=4, filter=True),
    "threads": dict(workload="infer-qnn", qubits="2..=12", thread_set="1,2,4,8,12,16,20,24",
                    repeats=3, shots=1000, seed=0, precision="double", train_samples=4,
                    filter=True),
    "fidelity": dict(qubits="2..=8", noise="0.0", shots=1000, jobs=10, seed=0, threads=1,
                     precision="double"),
    "cost": dict(scheme=None, vendor=None, rates=None, per_task=None, per_shot=None, rate=None,
                 setup_seconds=None, per_shot_seconds=None, setups_per_epoch=1,
                 billed_seconds=None, epochs=100, samples=100, n_w=None, qubits=None,
                 shots=1000, inference=False),
    "train": dict(n_d=1, m=100, r_inner=0.2, r_outer=1.0, sigma=0.3, data=None, epochs=10,
                  shots=1000, lr=0.3, batch_size=1, hybrid=False, seed=0, threads=1,
                  precision="double"),
}

S = argparse.SUPPRESS


def _shots_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--shots", type=int, default=S, help="shots per expectation value (default 1000)")
    g.add_argument("--exact", dest="shots", action="store_const", const=None, default=S,
                   help="exact expectation values instead of shot estimates")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=S, help="JSON file with settings (flags override it)")
    p.add_argument("--out", default="results", help="output root directory (default: results)")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("-v", "--verbose", action="store_true")


def _shell_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-d", type=int, default=S, help="feature dimension")
    p.add_argument("--m", type=int, default=S, help="number of points")
    p.add_argument("--r-inner", type=float, default=S)
    p.add_argument("--r-outer", type=float, default=S)
    p.add_argument("--sigma", type=float, default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qvbench", description="State-vector QNN benchmark workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset", help="generate the two-shell dataset as CSV")
    _common(p)
    _shell_flags(p)

    p = sub.add_parser("bench", help="timing campaign over circuit sizes")
    _common(p)
    p.add_argument("--workload", default=S,
                   help=f"comma list of {', '.join(bench.WORKLOADS)} or 'all'")
    p.add_argument("--qubits", default=S, help="even qubit counts, e.g. 2..=12 or 2,4,8")
    p.add_argument("--repeats", type=int, default=S)
    p.add_argument("--threads", type=int, default=S, help="simulator worker threads")
    p.add_argument("--precision", choices=["double", "single"], default=S)
    p.add_argument("--train-samples", type=int, default=S,
                   help="samples per timed training epoch")
    p.add_argument("--no-filter", dest="filter", action="store_false", default=S,
                   help="skip Chauvenet outlier rejection")
    _shots_flags(p)

    p = sub.add_parser("threads", help="thread-count sweep")
    _common(p)
    p.add_argument("--workload", default=S, choices=bench.WORKLOADS)
    p.add_argument("--qubits", default=S)
    p.add_argument("--thread-set", default=S, help="comma list of thread counts")
    p.add_argument("--repeats", type=int, default=S)
    p.add_argument("--precision", choices=["double", "single"], default=S)
    p.add_argument("--train-samples", type=int, default=S)
    p.add_argument("--no-filter", dest="filter", action="store_false", default=S)
    _shots_flags(p)

    p = sub.add_parser("fidelity", help="adjoint-circuit fidelity campaign")
    _common(p)
    p.add_argument("--qubits", default=S)
    p.add_argument("--noise", default=S, help="comma list of per-gate Pauli error probabilities")
    p.add_argument("--jobs", type=int, default=S)
    p.add_argument("--threads", type=int, default=S)
    p.add_argument("--precision", choices=["double", "single"], default=S)
    _shots_flags(p)

    p = sub.add_parser("cost", help="QPU cost estimate")
    _common(p)
    p.add_argument("--scheme", choices=["per-task-per-shot", "per-second", "amortized-setup"],
                   default=S)
    p.add_argument("--vendor", default=S, help="rate-file entry, e.g. ionq, rigetti, ibm")
    p.add_argument("--rates", default=S, help="alternative rate file")
    p.add_argument("--per-task", type=float, default=S)
    p.add_argument("--per-shot", type=float, default=S)
    p.add_argument("--rate", type=float, default=S, help="USD per second")
    p.add_argument("--setup-seconds", type=float, default=S)
    p.add_argument("--per-shot-seconds", type=float, default=S)
    p.add_argument("--setups-per-epoch", type=int, default=S)
    p.add_argument("--billed-seconds", type=float, default=S)
    p.add_argument("--epochs", type=int, default=S)
    p.add_argument("--samples", type=int, default=S)
    p.add_argument("--n-w", type=int, default=S, help="trainable parameters (default: n_qubits)")
    p.add_argument("--qubits", default=S)
    p.add_argument("--shots", type=int, default=S)
    p.add_argument("--inference", action="store_true", default=S,
                   help="price forward passes only")

    p = sub.add_parser("train", help="train a QNN or HQNN on the shell dataset")
    _common(p)
    _shell_flags(p)
    p.add_argument("--data", default=S, help="dataset CSV instead of generating one")
    p.add_argument("--epochs", type=int, default=S)
    p.add_argument("--lr", type=float, default=S)
    p.add_argument("--batch-size", type=int, default=S)
    p.add_argument("--hybrid", action="store_true", default=S, help="add the MLP head")
    p.add_argument("--threads", type=int, default=S)
    p.add_argument("--precision", choices=["double", "single"], default=S)
    _shots_flags(p)
    return parser


def resolve(command: str, flags: dict) -> dict:
    cfg = dict(DEFAULTS[command])
    path = flags.pop("config", None)
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {path}: {exc}") from exc
        loaded.pop("command", None)
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise CliError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(loaded)
    cfg.update(flags)
    return cfg


# ---------------------------------------------------------------------------
# commands

def _run_dir(out: str, command: str) -> Path:
    stamp = datetime.now().strftime("%Y%m%dT%H%M%S%f")
    path = Path(out) / command / stamp
    path.mkdir(parents=True, exist_ok=False)
    return path


def _shell_config(cfg: dict) -> ShellConfig:
    sc = ShellConfig(n_d=cfg["n_d"], m=cfg["m"], r_inner=cfg["r_inner"], r_outer=cfg["r_outer"],
                     sigma=cfg["sigma"], rng_seed=cfg["seed"])
    try:
        sc.validate()
    except ConfigError as exc:
        raise CliError(str(exc)) from exc
    return sc


def cmd_dataset(cfg: dict, run: Path) -> None:
    ds = generate(_shell_config(cfg))
    ds.to_csv(run / "results.csv")


def _bench_config(cfg: dict) -> bench.BenchConfig:
    return bench.BenchConfig(shots=cfg["shots"], seed=cfg["seed"], threads=cfg.get("threads", 1),
                             precision=cfg["precision"], train_samples=cfg["train_samples"],
                             filter_outliers=cfg["filter"])


def cmd_bench(cfg: dict, run: Path) -> None:
    names = bench.WORKLOADS if cfg["workload"] == "all" else [
        w.strip() for w in str(cfg["workload"]).split(",")]
    for w in names:
        if w not in bench.WORKLOADS:
            raise CliError(f"unknown workload {w!r}")
    if cfg["repeats"] < 1:
        raise CliError("repeats must be >= 1")
    qubits = parse_qubits(cfg["qubits"])
    records = []
    for w in names:
        records += bench.run_timing_campaign(w, qubits, cfg["repeats"], _bench_config(cfg))
    emit_results(records, "csv", run / "results.csv")
    emit_results(records, "json", run / "results.json")


def cmd_threads(cfg: dict, run: Path) -> None:
    sweep = bench.run_thread_sweep(cfg["workload"], parse_qubits(cfg["qubits"]),
                                   parse_ints(cfg["thread_set"]), cfg["repeats"],
                                   _bench_config(cfg))
    emit_results(sweep.cells, "csv", run / "results.csv")
    emit_results(sweep.cells, "json", run / "results.json")
    emit_results(sweep.best, "csv", run / "best_threads.csv")
    write_table(sweep.table(), run / "table.csv")
    log.info("max output deviation across thread counts: %.3g", sweep.max_output_deviation)


def cmd_fidelity(cfg: dict, run: Path) -> None:
    noise = parse_floats(cfg["noise"])
    if any(not 0 <= p < 1 for p in noise):
        raise CliError("noise probabilities must be in [0, 1)")
    rows = bench.run_fidelity_campaign(parse_qubits(cfg["qubits"]), noise, cfg["shots"],
                                       cfg["jobs"], cfg["seed"], cfg["precision"], cfg["threads"])
    emit_results(rows, "csv", run / "results.csv")
    emit_results(rows, "json", run / "results.json")


def _cost_model(cfg: dict) -> costmod.CostModel:
    if cfg["vendor"]:
        try:
            return costmod.model_from_rates(cfg["vendor"], costmod.load_rates(cfg["rates"]))
        except KeyError as exc:
            raise CliError(str(exc)) from exc
    scheme = cfg["scheme"]
    if scheme is None:
        raise CliError("give --scheme or --vendor")
    keys = {"per-task-per-shot": ("per_task", "per_shot"), "per-second": ("rate",),
            "amortized-setup": ("rate", "setup_seconds", "per_shot_seconds")}[scheme]
    missing = [k for k in keys if cfg[k] is None]
    if missing:
        raise CliError(f"{scheme} needs --{', --'.join(k.replace('_', '-') for k in missing)}")
    kw = {k: cfg[k] for k in keys}
    if scheme == "amortized-setup":
        kw["setups_per_epoch"] = cfg["setups_per_epoch"]
    try:
        return costmod.make_model(scheme, **kw)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def cmd_cost(cfg: dict, run: Path) -> None:
    model = _cost_model(cfg)
    if isinstance(model, costmod.PerSecond) and cfg["billed_seconds"] is None:
        raise CliError("per-second pricing needs --billed-seconds")
    if cfg["qubits"] is not None:
        qubits = parse_qubits(cfg["qubits"])
    elif cfg["n_w"] is not None:
        qubits = [cfg["n_w"]]
    else:
        raise CliError("give --n-w or --qubits")
    try:
        rows = bench.cost_table(model, qubits, cfg["epochs"], cfg["samples"], cfg["shots"],
                                cfg["billed_seconds"], cfg["inference"], cfg["n_w"])
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    emit_results(rows, "csv", run / "results.csv")
    emit_results(rows, "json", run / "results.json")
    for r in rows:
        print(costmod.format_usd(r.total_usd))


def cmd_train(cfg: dict, run: Path) -> None:
    if cfg["data"]:
        ds = ShellDataset.from_csv(cfg["data"])
        n_d = ds.n_d
    else:
        ds = generate(_shell_config(cfg))
        n_d = cfg["n_d"]
    try:
        tc = TrainConfig(epochs=cfg["epochs"], shots=cfg["shots"], batch_size=cfg["batch_size"],
                         rng_seed=cfg["seed"], threads=cfg["threads"], lr=cfg["lr"],
                         precision=cfg["precision"])
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    model = QnnModel.init(n_d, cfg["seed"])
    head = MlpHead.init(n_d, cfg["seed"] + 1) if cfg["hybrid"] else None
    result = train(model, ds, tc, head=head)
    emit_results(result.history, "csv", run / "results.csv")
    emit_results(result.history, "json", run / "results.json")
    save_checkpoint(run / "checkpoint.json", result.model, result.head, result.optimizer)


COMMANDS = {"dataset": cmd_dataset, "bench": cmd_bench, "threads": cmd_threads,
            "fidelity": cmd_fidelity, "cost": cmd_cost, "train": cmd_train}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "out", "verbose")}
    try:
        cfg = resolve(args.command, flags)
        run = _run_dir(args.out, args.command)
        (run / "config.json").write_text(json.dumps({"command": args.command, **cfg}, indent=2))
        COMMANDS[args.command](cfg, run)
    except CliError as exc:
        print(f"qvbench: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"qvbench: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except Exception as exc:  # noqa: BLE001 - top-level exit-code mapping
        log.debug("internal error", exc_info=True)
        print(f"qvbench: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    print(run, file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
