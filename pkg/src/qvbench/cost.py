"""Cloud QPU pricing schemes and training/inference cost estimates."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_UP, Decimal
from importlib import resources


@dataclass(frozen=True)
class PerTaskPerShot:
    per_task: float
    per_shot: float
    scheme = "per-task-per-shot"


@dataclass(frozen=True)
class PerSecond:
    rate: float
    scheme = "per-second"


@dataclass(frozen=True)
class AmortizedSetup:
    rate: float
    setup_seconds: float
    per_shot_seconds: float
    setups_per_epoch: int = 1
    scheme = "amortized-setup"


CostModel = PerTaskPerShot | PerSecond | AmortizedSetup


def _check_nonneg(model) -> None:
    for k, v in asdict(model).items():
        if v < 0:
            raise ValueError(f"{k} must be >= 0")


@dataclass
class CostQuote:
    scheme: str
    n_circuits: int
    n_shots_per_circuit: int
    total_usd: float
    task_usd: float | None = None
    shot_usd: float | None = None
    time_usd: float | None = None

    def breakdown_sum(self) -> float:
        return sum(x for x in (self.task_usd, self.shot_usd, self.time_usd) if x is not None)


def circuit_count(epochs: int, samples: int, n_w: int, inference: bool = False) -> int:
    """Distinct circuits submitted: forward plus two shifted runs per parameter."""
    per_sample = 1 if inference else 2 * n_w + 1
    return epochs * samples * per_sample


def estimate_cost(model: CostModel, epochs: int, samples: int, n_w: int, shots: int,
                  billed_seconds: float | None = None, inference: bool = False) -> CostQuote:
    """Price a training run (or, with ``inference=True``, forward passes only).

    ``billed_seconds`` is required for :class:`PerSecond`; it is never
    inferred from local wall time.
    """
    if min(epochs, samples, n_w, shots) < 0:
        raise ValueError("counts must be >= 0")
    _check_nonneg(model)
    n = circuit_count(epochs, samples, n_w, inference)

    if isinstance(model, PerTaskPerShot):
        task = n * model.per_task
        shot = n * shots * model.per_shot
        return CostQuote(model.scheme, n, shots, task + shot, task_usd=task, shot_usd=shot)
    if isinstance(model, PerSecond):
        if billed_seconds is None:
            raise ValueError("per-second pricing needs billed_seconds")
        t = model.rate * billed_seconds
        return CostQuote(model.scheme, n, shots, t, time_usd=t)
    if isinstance(model, AmortizedSetup):
        seconds = (model.setups_per_epoch * epochs * model.setup_seconds
                   + n * shots * model.per_shot_seconds)
        t = model.rate * seconds
        return CostQuote(model.scheme, n, shots, t, time_usd=t)
    raise TypeError(f"unknown cost model {model!r}")


def load_rates(path=None) -> dict:
    """Vendor rate table; defaults to the bundled ``rates.json``."""
    if path is None:
        text = resources.files(__package__).joinpath("rates.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return json.loads(text)


def model_from_rates(name: str, rates: dict | None = None) -> CostModel:
    rates = rates if rates is not None else load_rates()
    try:
        entry = dict(rates["vendors"][name])
    except KeyError:
        raise KeyError(f"no rate entry {name!r}; have {sorted(rates['vendors'])}") from None
    scheme = entry.pop("scheme")
    entry.pop("note", None)
    return make_model(scheme, **entry)


def make_model(scheme: str, **kw) -> CostModel:
    if scheme == PerTaskPerShot.scheme:
        return PerTaskPerShot(kw["per_task"], kw["per_shot"])
    if scheme == PerSecond.scheme:
        return PerSecond(kw["rate"])
    if scheme == AmortizedSetup.scheme:
        return AmortizedSetup(kw["rate"], kw["setup_seconds"], kw["per_shot_seconds"],
                              int(kw.get("setups_per_epoch", 1)))
    raise ValueError(f"unknown scheme {scheme!r}")


def format_usd(amount: float) -> str:
    """Cents, rounded half-up after trimming float noise below 1e-9 (0.335 -> "0.34")."""
    return str(Decimal(f"{float(amount):.9f}").quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))
