"""Error-propagation simulator: layered verification vs a single pass.

The model is explicit Bernoulli error injection, not a reproduction of any
published data. A task has N layers, processed in order. Each layer attempt
is wrong with probability p; verification catches a wrong attempt with
probability q (correct attempts always pass). A caught attempt is retried up
to R times; running out of retries exhausts the task (fail_session
accounting). An uncaught wrong attempt is accepted and silently poisons the
task. Vanilla is the q=0 degenerate: N unchecked steps.

Per-layer closed form, with S = sum_{k=0}^{R} (pq)^k:

    accept-correct  (1-p) * S
    accept-wrong    p(1-q) * S
    exhausted       (pq)^(R+1)

These sum to one; the task-level split follows by independence: a task
succeeds iff all N layers accept-correct. simulate() is the seeded Monte
Carlo counterpart used to cross-check the algebra.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class BadParameter(Exception):
    pass


SWEEPABLE = {
    "p": "error_prob",
    "q": "detection_prob",
    "N": "num_layers",
    "R": "max_refinements",
}

CSV_COLUMNS = [
    "param",
    "value",
    "vanilla_err",
    "layered_err",
    "layered_err_analytic",
    "exhausted",
    "quality",
    "mean_calls",
]


@dataclass(frozen=True)
class SimConfig:
    num_tasks: int = 1000
    num_layers: int = 5
    error_prob: float = 0.2
    detection_prob: float = 0.9
    max_refinements: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_tasks < 1:
            raise ValueError("num_tasks must be >= 1")
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if not 0.0 <= self.error_prob <= 1.0:
            raise ValueError("error_prob must be in [0, 1]")
        if not 0.0 <= self.detection_prob <= 1.0:
            raise ValueError("detection_prob must be in [0, 1]")
        if self.max_refinements < 0:
            raise ValueError("max_refinements must be >= 0")

    def replace(self, **kwargs: Any) -> SimConfig:
        data = {
            "num_tasks": self.num_tasks,
            "num_layers": self.num_layers,
            "error_prob": self.error_prob,
            "detection_prob": self.detection_prob,
            "max_refinements": self.max_refinements,
            "seed": self.seed,
        }
        data.update(kwargs)
        return SimConfig(**data)


@dataclass(frozen=True)
class SimResult:
    vanilla_error_rate: float
    layered_error_rate: float
    exhausted_rate: float
    mean_backend_calls: float
    quality: float

    def __post_init__(self) -> None:
        for name in ("vanilla_error_rate", "layered_error_rate", "exhausted_rate", "quality"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0 + 1e-12:
                raise ValueError(f"{name} out of [0, 1]: {value}")
        if self.layered_error_rate + self.exhausted_rate > 1.0 + 1e-9:
            raise ValueError("layered_error_rate + exhausted_rate must be <= 1")

    def to_dict(self) -> dict[str, float]:
        return {
            "vanilla_error_rate": self.vanilla_error_rate,
            "layered_error_rate": self.layered_error_rate,
            "exhausted_rate": self.exhausted_rate,
            "mean_backend_calls": self.mean_backend_calls,
            "quality": self.quality,
        }


def layer_probabilities(config: SimConfig) -> tuple[float, float, float]:
    """(accept-correct, accept-wrong, exhausted) for a single layer."""
    p, q, r = config.error_prob, config.detection_prob, config.max_refinements
    pq = p * q
    s = sum(pq**k for k in range(r + 1))
    accept_correct = (1.0 - p) * s
    accept_wrong = p * (1.0 - q) * s
    exhausted = pq ** (r + 1)
    return accept_correct, accept_wrong, exhausted


def analytic(config: SimConfig) -> SimResult:
    """Closed-form rates; num_tasks and seed are ignored."""
    p, n, r = config.error_prob, config.num_layers, config.max_refinements
    pq = p * config.detection_prob
    accept_correct, accept_wrong, exhausted_layer = layer_probabilities(config)
    accept = accept_correct + accept_wrong

    vanilla_error = 1.0 - (1.0 - p) ** n
    success = accept_correct**n
    task_exhausted = 1.0 - accept**n
    layered_error = accept**n - success

    s = sum(pq**k for k in range(r + 1))
    # Wald's identity: expected attempts = S per processed layer, and the
    # number of processed layers is a stopping time over iid layer outcomes.
    expected_layers = sum(accept**k for k in range(n))
    mean_calls = 1.0 + s * expected_layers + accept**n
    quality = (accept / s) if s > 0 else 0.0  # reduces to 1 - pq

    return SimResult(
        vanilla_error_rate=vanilla_error,
        layered_error_rate=layered_error,
        exhausted_rate=task_exhausted,
        mean_backend_calls=mean_calls,
        quality=quality,
    )


def simulate(config: SimConfig) -> SimResult:
    """Seeded Monte Carlo over num_tasks independent tasks.

    Pure function of the config: the same seed gives byte-identical results.
    Draw order is fixed (layered draws first, then the vanilla baseline).
    """
    rng = np.random.default_rng(config.seed)
    tasks, layers, attempts = config.num_tasks, config.num_layers, config.max_refinements + 1

    wrong = rng.random((tasks, layers, attempts)) < config.error_prob
    caught = rng.random((tasks, layers, attempts)) < config.detection_prob
    vanilla_wrong = rng.random((tasks, layers)) < config.error_prob

    # An attempt ends its layer unless it is wrong AND caught (then: retry).
    ends = ~(wrong & caught)
    layer_accepted = ends.any(axis=2)
    first_end = np.argmax(ends, axis=2)  # valid where layer_accepted
    attempts_used = np.where(layer_accepted, first_end + 1, attempts)
    ended_wrong = np.take_along_axis(wrong, first_end[:, :, None], axis=2)[:, :, 0]
    layer_correct = layer_accepted & ~ended_wrong

    # Tasks stop at the first exhausted layer; later layers are never run.
    any_exhausted = (~layer_accepted).any(axis=1)
    first_exhausted = np.argmax(~layer_accepted, axis=1)
    last_processed = np.where(any_exhausted, first_exhausted, layers - 1)
    processed = np.arange(layers)[None, :] <= last_processed[:, None]

    completed = ~any_exhausted
    success = completed & layer_correct.all(axis=1)
    task_error = completed & ~layer_correct.all(axis=1)

    total_attempts = (attempts_used * processed).sum(axis=1)
    supported = (layer_accepted & processed).sum(axis=1)
    per_task_quality = supported / total_attempts
    calls = 1 + total_attempts + completed.astype(np.int64)

    return SimResult(
        vanilla_error_rate=float(vanilla_wrong.any(axis=1).mean()),
        layered_error_rate=float(task_error.mean()),
        exhausted_rate=float(any_exhausted.mean()),
        mean_backend_calls=float(calls.mean()),
        quality=float(per_task_quality.mean()),
    )


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: float
    result: SimResult
    analytic_result: SimResult

    def csv_fields(self) -> list[str]:
        raw: list[Any] = [
            self.param,
            self.value,
            self.result.vanilla_error_rate,
            self.result.layered_error_rate,
            self.analytic_result.layered_error_rate,
            self.result.exhausted_rate,
            self.result.quality,
            self.result.mean_backend_calls,
        ]
        return [_format_value(v) for v in raw]


@dataclass(frozen=True)
class SweepTable:
    rows: tuple[SweepRow, ...] = field(default_factory=tuple)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(row.csv_fields())
        return buffer.getvalue()


def _format_value(value: Any) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.6g}"


def sweep(base: SimConfig, vary: str, values: list[float]) -> SweepTable:
    """One simulate + one analytic row per value of the varied parameter."""
    if vary not in SWEEPABLE:
        raise BadParameter(f"cannot sweep {vary!r}; choose one of {sorted(SWEEPABLE)}")
    field_name = SWEEPABLE[vary]
    rows = []
    for value in values:
        if vary in ("N", "R"):
            if float(value) != int(value):
                raise BadParameter(f"{vary} must take integer values, got {value}")
            value = int(value)
        config = base.replace(**{field_name: value})
        rows.append(
            SweepRow(param=vary, value=value, result=simulate(config),
                     analytic_result=analytic(config))
        )
    return SweepTable(rows=tuple(rows))
