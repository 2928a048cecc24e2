"""CSV optimisation traces and JSON run summaries."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .search import OptResult, Trial

TRACE_COLUMNS = ("trial", "delta1", "delta2", "sigma2", "metric", "loss", "seconds")


def write_trace_csv(result: OptResult, path, timings: bool = False) -> None:
    """One row per trial. Floats use the shortest round-trip repr.

    The ``seconds`` column is left empty unless ``timings`` is set, which
    keeps traces byte-identical across runs with the same seed.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for t in result.trials:
            w.writerow([
                t.index,
                repr(t.delta1),
                repr(t.delta2),
                repr(t.sigma2),
                repr(t.metric_value),
                repr(t.loss),
                repr(t.wall_time) if timings else "",
            ])


def read_trace_csv(path) -> list[Trial]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {reader.fieldnames}")
        return [
            Trial(
                int(row["trial"]),
                float(row["delta1"]),
                float(row["delta2"]),
                float(row["sigma2"]),
                float(row["loss"]),
                float(row["metric"]),
                float(row["seconds"]) if row["seconds"] else 0.0,
            )
            for row in reader
        ]


def trial_dict(t: Trial) -> dict:
    return {
        "trial": t.index,
        "delta1": t.delta1,
        "delta2": t.delta2,
        "sigma2": t.sigma2,
        "metric": t.metric_value,
        "loss": t.loss,
    }


def result_summary(result: OptResult, metric, model: dict, pipeline: dict) -> dict:
    """Schema-stable summary: seed, metric, iterations, best, model,
    pipeline, failed_trials."""
    return {
        "seed": result.seed,
        "metric": {"name": metric.name, "tau": metric.tau, "beta": metric.beta},
        "iterations": len(result.trials),
        "best": trial_dict(result.best),
        "model": model,
        "pipeline": pipeline,
        "failed_trials": sum(t.error is not None for t in result.trials),
    }


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj) + "\n", encoding="utf-8")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=False)
