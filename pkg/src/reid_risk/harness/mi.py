"""Plug-in mutual information between topics seen by two sites."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LN2 = math.log(2.0)


def _entropy_mm(counts: np.ndarray, total: int) -> float:
    """Miller-Madow corrected plug-in entropy in bits."""
    counts = counts[counts > 0]
    p = counts / total
    h = -np.sum(p * np.log(p))
    return float((h + (counts.size - 1) / (2 * total)) / LN2)


def mutual_information(x, y) -> dict:
    """Miller-Madow corrected plug-in MI (bits) between paired samples.

    ``slack`` is the first-order bias of the uncorrected plug-in estimate
    for independent variables, ``(K_x - 1)(K_y - 1) / (2 n ln 2)``. An
    estimate of independent data should land well inside it.
    """
    x = np.asarray(x, dtype=np.int64).ravel()
    y = np.asarray(y, dtype=np.int64).ravel()
    if x.size != y.size or x.size == 0:
        raise ValueError("need the same positive number of x and y samples")
    total = x.size
    _, xi = np.unique(x, return_inverse=True)
    _, yi = np.unique(y, return_inverse=True)
    kx, ky = xi.max() + 1, yi.max() + 1
    hx = _entropy_mm(np.bincount(xi), total)
    hy = _entropy_mm(np.bincount(yi), total)
    hxy = _entropy_mm(np.bincount(xi * ky + yi), total)
    return {
        "mi": hx + hy - hxy,
        "h_x": hx,
        "h_y": hy,
        "slack": float((kx - 1) * (ky - 1) / (2 * total * LN2)),
    }


@dataclass
class MiReport:
    per_epoch_bits: list
    entropy_a: list
    entropy_b: list
    slack_bits: list
    samples: int
    total_bits: float = field(init=False)

    def __post_init__(self):
        self.total_bits = float(sum(self.per_epoch_bits))

    def to_dict(self) -> dict:
        return {
            "per_epoch_bits": self.per_epoch_bits,
            "total_bits": self.total_bits,
            "entropy_a": self.entropy_a,
            "entropy_b": self.entropy_b,
            "slack_bits": self.slack_bits,
            "samples": self.samples,
        }


def plug_in_mutual_information(A, B) -> MiReport:
    """Per-epoch ``I(A^s; B^s)`` for ``(n, r)`` topic tables from two sites.

    Under cross-epoch independence the sum over epochs is the mutual
    information of the whole sequences.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim == 1:
        A, B = A[:, None], B[:, None]
    if A.shape != B.shape or A.shape[0] < 1:
        raise ValueError("A and B must be non-empty tables of equal shape")
    rows = [mutual_information(A[:, s], B[:, s]) for s in range(A.shape[1])]
    return MiReport(
        per_epoch_bits=[r["mi"] for r in rows],
        entropy_a=[r["h_x"] for r in rows],
        entropy_b=[r["h_y"] for r in rows],
        slack_bits=[r["slack"] for r in rows],
        samples=A.shape[0],
    )


def cross_epoch_mutual_information(A, B) -> np.ndarray:
    """``(r, r)`` matrix of ``I(A^s; B^t)``; off-diagonal entries probe time dependence."""
    A = np.asarray(A)
    B = np.asarray(B)
    r = A.shape[1]
    out = np.empty((r, r))
    for s in range(r):
        for t in range(r):
            out[s, t] = mutual_information(A[:, s], B[:, t])["mi"]
    return out
