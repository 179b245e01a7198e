"""Readers and writers for matrices, priors, sequence dumps and predictions."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .model import FinitePrior, RepresentationMatrix


def _matrix_from_json_obj(obj) -> RepresentationMatrix:
    if isinstance(obj, dict):
        rows = obj["rows"]
        labels = obj.get("labels")
        P = RepresentationMatrix.from_loaded(rows, labels)
        if "n" in obj and int(obj["n"]) != P.n or "m" in obj and int(obj["m"]) != P.m:
            raise ValueError("declared n/m do not match the rows")
        return P
    return RepresentationMatrix.from_loaded(obj)


def read_matrix(path) -> RepresentationMatrix:
    """Load a matrix from ``.json`` or CSV (header row of column labels)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return _matrix_from_json_obj(json.loads(path.read_text()))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty matrix file")
        rows = [[float(v) for v in row] for row in reader if row]
    if any(len(row) != len(header) for row in rows):
        raise ValueError(f"{path}: every row must have {len(header)} values")
    return RepresentationMatrix.from_loaded(rows, header)


def write_matrix(P: RepresentationMatrix, path) -> None:
    path = Path(path)
    labels = list(P.column_labels) if P.column_labels else [f"o{j}" for j in range(P.m)]
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps({"n": P.n, "m": P.m, "labels": labels, "rows": P.entries.tolist()}))
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(labels)
        for row in P.entries:
            writer.writerow([repr(float(v)) for v in row])


def read_prior(path) -> FinitePrior:
    obj = json.loads(Path(path).read_text())
    comps = obj["components"]
    return FinitePrior([c["weight"] for c in comps], tuple(_matrix_from_json_obj(c["matrix"]) for c in comps))


def write_prior(prior: FinitePrior, path) -> None:
    comps = [{"weight": float(w), "matrix": {"n": P.n, "m": P.m, "rows": P.entries.tolist()}}
             for w, P in zip(prior.weights, prior.matrices)]
    Path(path).write_text(json.dumps({"components": comps}))


SEQUENCE_FIELDS = ("user", "site", "epoch", "topic")


def write_sequences(path, site1: np.ndarray, site2: np.ndarray) -> None:
    """Dump two sites' ``(n, r)`` topic tables as ``user,site,epoch,topic`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SEQUENCE_FIELDS)
        for site, table in ((1, site1), (2, site2)):
            for user, row in enumerate(np.asarray(table)):
                for epoch, topic in enumerate(row):
                    writer.writerow((user, site, epoch, int(topic)))


def read_sequences(path) -> dict[int, np.ndarray]:
    """Inverse of :func:`write_sequences`; returns ``{site: (n, r) table}``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    if data.size == 0:
        raise ValueError(f"{path}: no sequence rows")
    out = {}
    for site in np.unique(data[:, 1]):
        rows = data[data[:, 1] == site]
        n, r = rows[:, 0].max() + 1, rows[:, 2].max() + 1
        table = np.full((n, r), -1, dtype=np.int64)
        table[rows[:, 0], rows[:, 2]] = rows[:, 3]
        if np.any(table < 0):
            raise ValueError(f"{path}: site {site} has missing (user, epoch) entries")
        out[int(site)] = table
    return out


PREDICTION_FIELDS = ("trial", "true_user", "predicted_user", "correct")


def write_predictions(path, true_users, predicted) -> None:
    """Per-trial predictions CSV; ``path`` may also be an open text stream."""
    if hasattr(path, "write"):
        _write_prediction_rows(path, true_users, predicted)
        return
    with open(path, "w", newline="") as fh:
        _write_prediction_rows(fh, true_users, predicted)


def _write_prediction_rows(fh, true_users, predicted) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(PREDICTION_FIELDS)
    for t, (u, p) in enumerate(zip(true_users, predicted)):
        writer.writerow((t, int(u), int(p), int(u == p)))
