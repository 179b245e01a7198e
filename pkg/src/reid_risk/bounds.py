"""Closed-form accuracies, upper bounds and privacy-notion checks.

All functions are pure. Argmax ties always resolve to the lowest user index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .model import (
    FinitePrior,
    PredictionMatrix,
    RepresentationMatrix,
    posterior_matrix,
)

ONE_HOT_TOL = 1e-9


@dataclass(frozen=True)
class LdpParams:
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be nonnegative")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")


@dataclass(frozen=True)
class BoundReport:
    """A probability-valued result.

    ``value`` is always clamped to [0, 1]; ``raw`` keeps the unclamped
    formula value for bounds that can leave that range.
    """

    value: float
    kind: str
    source: str
    raw: Optional[float] = None
    name: str = ""
    metadata: Optional[dict] = None

    def __post_init__(self):
        if self.kind not in ("exact", "upper_bound"):
            raise ValueError(f"unknown bound kind {self.kind!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"bound value {self.value} outside [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: v for k, v in d.items() if v is not None}


def _report(name, raw, kind, source, **metadata) -> BoundReport:
    raw = float(raw)
    return BoundReport(
        value=min(1.0, max(0.0, raw)),
        kind=kind,
        source=source,
        raw=raw,
        name=name,
        metadata=metadata or None,
    )


def _entries(M) -> np.ndarray:
    return M.entries if hasattr(M, "entries") else np.asarray(M, dtype=np.float64)


def exact_random_user_accuracy(P: RepresentationMatrix, A: PredictionMatrix) -> float:
    """Random-user accuracy of rule ``A`` on ``P``: ``tr(P A^T) / n``."""
    Pe, Ae = _entries(P), _entries(A)
    if Pe.shape != Ae.shape:
        raise ValueError(f"shape mismatch: P is {Pe.shape}, A is {Ae.shape}")
    return float(np.sum(Pe * Ae) / Pe.shape[0])


def max_accuracy_bound(P: RepresentationMatrix) -> float:
    """``||P||_{inf,1} / n``: the best random-user accuracy of any rule.

    This is also the Bayes vulnerability of the channel ``P`` under a
    uniform prior on identities and the identity gain function.
    """
    Pe = _entries(P)
    return float(Pe.max(axis=0).sum() / Pe.shape[0])


def optimal_full_info_rule(P: RepresentationMatrix) -> PredictionMatrix:
    """Deterministic rule sending each column to its lowest-index argmax user."""
    Pe = _entries(P)
    return PredictionMatrix.from_assignment(np.argmax(Pe, axis=0), Pe.shape[0])


def partial_info_bound(prior: FinitePrior, W) -> float:
    """``||E[P | W]||_{inf,1} / n`` for a finite prior."""
    return max_accuracy_bound(posterior_matrix(prior, W))


def partial_info_rule(prior: FinitePrior, W) -> PredictionMatrix:
    """The W-measurable rule attaining :func:`partial_info_bound`."""
    return optimal_full_info_rule(posterior_matrix(prior, W))


def matching_accuracy_bound_raw(P: RepresentationMatrix) -> float:
    """Expected number of distinct observed representations, divided by n."""
    Pe = _entries(P)
    n, m = Pe.shape
    return float(m / n - np.prod(1.0 - Pe, axis=0).sum() / n)


def matching_accuracy_bound(P: RepresentationMatrix) -> float:
    return min(1.0, max(0.0, matching_accuracy_bound_raw(P)))


class LiftedRule:
    """Apply a random-user rule independently to every coordinate.

    Calling the rule on a length-n observation vector returns one predicted
    identity per coordinate, each drawn from the column of ``A`` indexed by
    that observation.
    """

    def __init__(self, A: PredictionMatrix):
        self.A = A
        self._cdf = np.cumsum(A.entries, axis=0)
        self._deterministic = bool(np.all((A.entries == 0) | (A.entries == 1)))
        self._argmax = np.argmax(A.entries, axis=0)

    def __call__(self, observations, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        obs = np.asarray(observations, dtype=np.int64)
        if self._deterministic:
            return self._argmax[obs]
        if rng is None:
            raise ValueError("a randomised rule needs an rng")
        cdf = self._cdf[:, obs]
        u = rng.random(obs.shape)
        idx = (cdf <= u).sum(axis=0)
        return np.minimum(idx, self.A.n - 1)


def lift_random_user_rule(A: PredictionMatrix) -> LiftedRule:
    return LiftedRule(A)


def check_ldp(P: RepresentationMatrix, epsilon: float) -> float:
    """Smallest ``delta`` for which ``P`` is (epsilon, delta)-LDP.

    For a fixed ordered pair (i, j) the worst event is the set of columns
    where ``P[i, o] > e^eps P[j, o]``, so the answer is the largest total
    positive excess over all ordered pairs.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    Pe = _entries(P)
    scale = math.exp(epsilon) if np.isfinite(epsilon) else math.inf
    if scale == math.inf:
        return 0.0
    worst = 0.0
    for i in range(Pe.shape[0]):
        excess = np.clip(Pe[i][None, :] - scale * Pe, 0.0, None).sum(axis=1)
        worst = max(worst, float(excess.max()))
    return min(1.0, worst)


def ldp_accuracy_bound_raw(epsilon: float, delta: float, n: int, m: int) -> float:
    LdpParams(epsilon, delta)
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    return (math.exp(epsilon) + min(n, m) * delta) / n


def ldp_accuracy_bound(epsilon: float, delta: float, n: int, m: int) -> BoundReport:
    return _report(
        "ldp",
        ldp_accuracy_bound_raw(epsilon, delta, n, m),
        "upper_bound",
        "local differential privacy",
        epsilon=epsilon,
        delta=delta,
    )


def check_k_anonymity(P: RepresentationMatrix) -> int:
    """Largest k for which ``P`` is k-anonymous, or 0 if rows are not one-hot."""
    Pe = _entries(P)
    near_one = np.abs(Pe - 1.0) <= ONE_HOT_TOL
    near_zero = np.abs(Pe) <= ONE_HOT_TOL
    if not np.all(near_one | near_zero) or not np.all(near_one.sum(axis=1) == 1):
        return 0
    counts = near_one.sum(axis=0)
    return int(counts[counts > 0].min())


def kanon_accuracy_bound(k: int) -> float:
    if k < 1:
        raise ValueError("k must be at least 1")
    return 1.0 / k


def fano_bound(mi_nats: float, n: int) -> float:
    """``(1 + MI) / ln n`` with MI in nats."""
    if n < 2:
        raise ValueError("the Fano bound needs at least two users")
    if mi_nats < 0:
        raise ValueError("mutual information must be nonnegative")
    return (1.0 + mi_nats) / math.log(n)


def construct_ldp_kanon_counterexample(n: int) -> RepresentationMatrix:
    """Two-column matrix sliding linearly from (1, 0) to (0, 1) across users.

    Neither LDP (for any delta < 1) nor k-anonymous, yet no attacker beats 2/n.
    """
    if n < 2:
        raise ValueError("need at least two users")
    second = np.arange(n) / (n - 1)
    return RepresentationMatrix(np.column_stack([1.0 - second, second]))


def construct_matching_gap_instance(n: int) -> RepresentationMatrix:
    """n/2 disjoint copies of the two-user instance with a shared column.

    Columns ``0..n-1`` are private (user ``i`` owns column ``i``) and column
    ``n + i // 2`` is shared by users ``2j`` and ``2j + 1``. Every nonzero
    entry is 1/2.
    """
    if n < 2 or n % 2:
        raise ValueError("the gap instance needs an even number of users >= 2")
    P = np.zeros((n, n + n // 2))
    users = np.arange(n)
    P[users, users] = 0.5
    P[users, n + users // 2] = 0.5
    labels = tuple(f"u{i + 1}" for i in users) + tuple(f"a{j + 1}" for j in range(n // 2))
    return RepresentationMatrix(P, labels)


def bound_reports(P: RepresentationMatrix, names=("max", "matching"), epsilon: float = 0.0,
                  mi_nats: Optional[float] = None) -> list[BoundReport]:
    """Evaluate the named bounds on ``P`` (used by the command line)."""
    out = []
    for name in names:
        if name == "max":
            out.append(_report("max", max_accuracy_bound(P), "upper_bound", "column-max norm"))
        elif name == "optimal":
            A = optimal_full_info_rule(P)
            out.append(_report("optimal", exact_random_user_accuracy(P, A), "exact", "trace formula"))
        elif name == "matching":
            out.append(_report("matching", matching_accuracy_bound_raw(P), "upper_bound",
                               "distinct-observation count"))
        elif name == "ldp":
            delta = check_ldp(P, epsilon)
            rep = ldp_accuracy_bound(epsilon, delta, P.n, P.m)
            out.append(rep)
        elif name == "kanon":
            k = check_k_anonymity(P)
            if k == 0:
                out.append(_report("kanon", 1.0, "upper_bound", "k-anonymity", k=0, applicable=False))
            else:
                out.append(_report("kanon", kanon_accuracy_bound(k), "upper_bound", "k-anonymity", k=k))
        elif name == "fano":
            if mi_nats is None:
                raise ValueError("the fano bound needs a mutual information value")
            out.append(_report("fano", fano_bound(mi_nats, P.n), "upper_bound", "Fano inequality",
                               log_base="e"))
        else:
            raise ValueError(f"unknown bound {name!r}")
    return out
