"""Stable file formats: labeled CSV, triplet/unlabeled JSONL, model files,
training-log CSV, and sweep exports.

Floats are written with repr-precision so identical runs produce
byte-identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import ClassPrior, InvalidInputError, LabeledPool, WeakDataset
from .evaluation import SweepResult
from .model import Model, deserialize_model, serialize_model
from .trainer import TrainLog


def write_labeled_csv(path, pool: LabeledPool) -> None:
    d = pool.x.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"] + [f"f{i + 1}" for i in range(d)])
        for yi, xi in zip(pool.y, pool.x):
            writer.writerow([f"{yi:+d}"] + [repr(float(v)) for v in xi])


def read_labeled_csv(path) -> LabeledPool:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "y":
            raise InvalidInputError(f"{path}: expected header starting with 'y'")
        ys, xs = [], []
        for row in reader:
            ys.append(int(row[0]))
            xs.append([float(v) for v in row[1:]])
    if not ys:
        raise InvalidInputError(f"{path}: no data rows")
    return LabeledPool(x=np.array(xs), y=np.array(ys))


def write_triplets_jsonl(path, triplets: np.ndarray) -> None:
    with open(path, "w") as fh:
        for t in triplets:
            fh.write(
                json.dumps(
                    {
                        "anchor": [float(v) for v in t[0]],
                        "c1": [float(v) for v in t[1]],
                        "c2": [float(v) for v in t[2]],
                    }
                )
                + "\n"
            )


def read_triplets_jsonl(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            rows.append([rec["anchor"], rec["c1"], rec["c2"]])
    if not rows:
        raise InvalidInputError(f"{path}: no triplets")
    return np.array(rows, dtype=float)


def write_unlabeled_jsonl(path, x: np.ndarray) -> None:
    with open(path, "w") as fh:
        for row in x:
            fh.write(json.dumps({"x": [float(v) for v in row]}) + "\n")


def read_unlabeled_jsonl(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rows.append(json.loads(line)["x"])
    if not rows:
        raise InvalidInputError(f"{path}: no unlabeled points")
    return np.array(rows, dtype=float)


def read_weak_dataset(
    triplets_path, unlabeled_path, prior: ClassPrior, sampler_kind: str = "rejection"
) -> WeakDataset:
    return WeakDataset(
        triplets=read_triplets_jsonl(triplets_path),
        unlabeled=read_unlabeled_jsonl(unlabeled_path),
        prior=prior,
        sampler_kind=sampler_kind,
    )


def write_model(path, model: Model, config_echo: dict | None = None) -> None:
    Path(path).write_text(
        json.dumps(serialize_model(model, config_echo), indent=2) + "\n"
    )


def read_model(path) -> Model:
    return deserialize_model(json.loads(Path(path).read_text()))


def write_train_log_csv(path, log: TrainLog) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["epoch", "raw_risk", "corrected_risk", "us_term", "u_term", "test_accuracy"]
        )
        for row in log.to_rows():
            writer.writerow(
                [
                    row["epoch"],
                    repr(row["raw_risk"]),
                    repr(row["corrected_risk"]),
                    repr(row["us_term"]),
                    repr(row["u_term"]),
                    "" if row["test_accuracy"] is None else repr(row["test_accuracy"]),
                ]
            )


def write_sweep_csv(path, result: SweepResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([result.axis, "mean", "std", "n_seeds", "per_seed", "error"])
        for row in result.rows:
            writer.writerow(
                [
                    row.setting,
                    "" if row.mean is None else repr(row.mean),
                    "" if row.std is None else repr(row.std),
                    row.n_seeds,
                    ";".join(repr(a) for a in row.per_seed),
                    row.error or "",
                ]
            )


def write_sweep_json(path, result: SweepResult) -> None:
    Path(path).write_text(json.dumps(result.to_dict(), indent=2) + "\n")
