"""Representation matrices, prediction rules and finite priors.

A representation matrix ``P`` is row-stochastic: ``P[i, o]`` is the
probability that user ``i`` emits representation ``o``. A prediction matrix
``A`` is column-stochastic: ``A[i, o]`` is the probability that the attacker
answers ``i`` after seeing ``o``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

ROW_SUM_TOL = 1e-9
RENORMALIZE_TOL = 1e-6


def _as_2d(entries) -> np.ndarray:
    arr = np.array(entries, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {arr.shape}")
    return arr


def validate_representation_matrix(P, tol: float = ROW_SUM_TOL) -> list[str]:
    """List every way ``P`` fails to be a representation matrix.

    Accepts a :class:`RepresentationMatrix` or anything array-like. Never
    raises on bad values; an empty list means the matrix is valid.
    """
    arr = P.entries if isinstance(P, RepresentationMatrix) else np.asarray(P, dtype=np.float64)
    problems = []
    if arr.ndim != 2:
        return [f"expected a 2-d matrix, got shape {arr.shape}"]
    n, m = arr.shape
    if n < 1 or m < 1:
        return [f"matrix must have at least one row and one column, got {arr.shape}"]
    if not np.all(np.isfinite(arr)):
        problems.append("matrix contains non-finite entries")
    for i, o in zip(*np.nonzero(arr < 0)):
        problems.append(f"negative entry at ({i}, {o}): {arr[i, o]!r}")
    for i, o in zip(*np.nonzero(arr > 1)):
        problems.append(f"entry above 1 at ({i}, {o}): {arr[i, o]!r}")
    sums = arr.sum(axis=1)
    for i in np.nonzero(np.abs(sums - 1.0) > tol)[0]:
        problems.append(f"row {i} sums to {sums[i]!r}, not 1")
    return problems


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RepresentationMatrix:
    """Row-stochastic ``n x m`` matrix, immutable after construction.

    Raises ``ValueError`` if the entries violate the invariants; use
    :func:`validate_representation_matrix` to inspect raw arrays first, or
    :meth:`from_loaded` to tolerate rounding from text formats.
    """

    entries: np.ndarray
    column_labels: Optional[tuple] = None

    def __post_init__(self):
        arr = _as_2d(self.entries)
        problems = validate_representation_matrix(arr)
        if problems:
            raise ValueError("invalid representation matrix: " + "; ".join(problems[:5]))
        object.__setattr__(self, "entries", _readonly(arr))
        if self.column_labels is not None:
            labels = tuple(self.column_labels)
            if len(labels) != arr.shape[1]:
                raise ValueError("column_labels length does not match the number of columns")
            object.__setattr__(self, "column_labels", labels)

    @classmethod
    def from_loaded(cls, entries, column_labels=None) -> "RepresentationMatrix":
        """Build from file data, renormalising rows that drift by at most 1e-6."""
        arr = _as_2d(entries)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("matrix has negative or non-finite entries")
        sums = arr.sum(axis=1)
        drift = np.abs(sums - 1.0)
        if np.any(drift > RENORMALIZE_TOL):
            bad = int(np.argmax(drift))
            raise ValueError(f"row {bad} sums to {sums[bad]!r}; drift exceeds {RENORMALIZE_TOL}")
        return cls(arr / sums[:, None], column_labels)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"RepresentationMatrix(n={self.n}, m={self.m})"


@dataclass(frozen=True, eq=False)
class PredictionMatrix:
    """Column-stochastic ``n x m`` matrix encoding a (randomised) rule."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _as_2d(self.entries)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("prediction matrix has negative or non-finite entries")
        sums = arr.sum(axis=0)
        bad = np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)[0]
        if bad.size:
            raise ValueError(f"column {bad[0]} of prediction matrix sums to {sums[bad[0]]!r}")
        object.__setattr__(self, "entries", _readonly(arr))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @classmethod
    def from_assignment(cls, users: Sequence[int], n: int) -> "PredictionMatrix":
        """Deterministic rule mapping column ``o`` to user ``users[o]``."""
        users = np.asarray(users, dtype=np.int64)
        A = np.zeros((n, users.size))
        A[users, np.arange(users.size)] = 1.0
        return cls(A)

    @classmethod
    def uniform(cls, n: int, m: int) -> "PredictionMatrix":
        return cls(np.full((n, m), 1.0 / n))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __repr__(self):
        return f"PredictionMatrix(n={self.n}, m={self.m})"


@dataclass(frozen=True, eq=False)
class FinitePrior:
    """Finite-support distribution over representation matrices."""

    weights: np.ndarray
    matrices: tuple = field(default_factory=tuple)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).ravel()
        mats = tuple(
            m if isinstance(m, RepresentationMatrix) else RepresentationMatrix(m) for m in self.matrices
        )
        if len(mats) == 0 or len(mats) != w.size:
            raise ValueError("need one weight per component and at least one component")
        if np.any(w < 0) or abs(w.sum() - 1.0) > ROW_SUM_TOL:
            raise ValueError("prior weights must be nonnegative and sum to 1")
        if len({m.shape for m in mats}) != 1:
            raise ValueError("all prior components must share the same shape")
        object.__setattr__(self, "weights", _readonly(w))
        object.__setattr__(self, "matrices", mats)

    @classmethod
    def single(cls, P) -> "FinitePrior":
        return cls([1.0], (P,))

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrices[0].shape

    def __len__(self):
        return len(self.matrices)


def _check_observations(W, n: int, m: int) -> np.ndarray:
    W = np.asarray(W)
    if W.shape != (n,):
        raise ValueError(f"observation vector must have length {n}, got shape {W.shape}")
    if not np.issubdtype(W.dtype, np.integer):
        raise ValueError("observation vector must hold integer column indices")
    if np.any((W < 0) | (W >= m)):
        raise ValueError(f"observation indices must lie in [0, {m})")
    return W


def _inverse_cdf(cdf: np.ndarray, u: np.ndarray, last_positive: np.ndarray) -> np.ndarray:
    # First index whose cumulative mass exceeds u. Rounding can leave
    # cdf[-1] slightly below 1, so overflow falls back to the last column
    # that actually carries mass.
    idx = (cdf <= u[:, None]).sum(axis=1)
    overflow = idx >= cdf.shape[1]
    idx[overflow] = last_positive[overflow]
    return idx


def sample_observation(P: RepresentationMatrix, i: int, rng: np.random.Generator) -> int:
    """Draw one representation for user ``i``."""
    if not 0 <= i < P.n:
        raise IndexError(f"user index {i} out of range for {P.n} users")
    row = P.entries[i]
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(row), u, side="right"))
    if idx >= P.m:
        idx = int(np.nonzero(row > 0)[0][-1])
    return idx


def sample_rows(P: RepresentationMatrix, users, rng: np.random.Generator) -> np.ndarray:
    """One independent draw from each listed row (users may repeat)."""
    users = np.asarray(users, dtype=np.int64)
    rows = P.entries[users]
    last_positive = P.m - 1 - np.argmax(rows[:, ::-1] > 0, axis=1)
    return _inverse_cdf(np.cumsum(rows, axis=1), rng.random(users.size), last_positive)


def sample_observation_vector(P: RepresentationMatrix, rng: np.random.Generator) -> np.ndarray:
    """Draw ``W`` with ``W[i] ~ P[i, :]`` independently for every user."""
    return sample_rows(P, np.arange(P.n), rng)


def posterior_weights(prior: FinitePrior, W) -> np.ndarray:
    """Posterior probability of each prior component given ``W``."""
    n, m = prior.shape
    W = _check_observations(W, n, m)
    rows = np.arange(n)
    with np.errstate(divide="ignore"):
        loglik = np.array([np.log(P.entries[rows, W]).sum() for P in prior.matrices])
        logpost = np.log(prior.weights) + loglik
    top = np.max(logpost)
    if not np.isfinite(top):
        raise ValueError("observation vector has zero probability under every prior component")
    post = np.exp(logpost - top)
    return post / post.sum()


def posterior_matrix(prior: FinitePrior, W) -> RepresentationMatrix:
    """Exact ``E[P | W]`` for a finite prior."""
    post = posterior_weights(prior, W)
    mean = np.tensordot(post, np.stack([P.entries for P in prior.matrices]), axes=1)
    # Convex combination of row-stochastic matrices; renormalise away rounding.
    return RepresentationMatrix(mean / mean.sum(axis=1, keepdims=True))
