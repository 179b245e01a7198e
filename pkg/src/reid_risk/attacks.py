"""Re-identification attacks on Topics sequences and matching instances.

Scores are "lower is better". Every argmin resolves ties to the lowest user
index. Batched functions take a ``(T, r)`` block of target sequences and a
``(n, r)`` site-1 database and return one prediction per target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .topics import TopicsConfig

P_MIN = 1e-6


@dataclass(frozen=True, eq=False)
class PopularityEstimate:
    """Estimated top-set inclusion probability per (epoch, topic).

    ``raw`` is the unbiased estimator, which can leave [0, 1] at finite n;
    ``clamped`` is ``raw`` clipped to ``[P_MIN, 1]`` and is what the scores
    use. Both have shape ``(epochs, N)``; a pooled estimate repeats one row.
    """

    raw: np.ndarray
    clamped: np.ndarray
    radius: float
    delta: float
    samples: int

    @classmethod
    def from_probabilities(cls, p, epochs: Optional[int] = None) -> "PopularityEstimate":
        """Wrap known inclusion probabilities (no estimation error)."""
        p = np.atleast_2d(np.asarray(p, dtype=np.float64))
        if epochs is not None and p.shape[0] == 1:
            p = np.repeat(p, epochs, axis=0)
        return cls(raw=p, clamped=np.clip(p, P_MIN, 1.0), radius=0.0, delta=0.0, samples=0)

    @property
    def epochs(self) -> int:
        return self.clamped.shape[0]


def hoeffding_radius(config: TopicsConfig, n: int, delta: float) -> float:
    """Uniform-over-topics deviation bound for the popularity estimator."""
    gap = config.q_in - config.q_out
    return math.sqrt(math.log(2 * config.taxonomy_size / delta) / (2 * n)) / gap


def _raw_estimate(counts: np.ndarray, n: int, config: TopicsConfig) -> np.ndarray:
    gap = config.q_in - config.q_out
    if gap <= 0:
        raise ValueError("popularity is not identifiable when q_in == q_out (flip_prob == 1)")
    return (counts / n - config.q_out) / gap


def estimate_popularity(W_s, config: TopicsConfig, delta: float = 0.01) -> PopularityEstimate:
    """Estimate ``p_s[o]`` from one epoch of site-1 topics (one per user)."""
    W_s = np.asarray(W_s, dtype=np.int64).ravel()
    n = W_s.size
    if n < 1:
        raise ValueError("need at least one observation")
    counts = np.bincount(W_s, minlength=config.taxonomy_size)
    raw = _raw_estimate(counts, n, config)[None, :]
    return PopularityEstimate(raw, np.clip(raw, P_MIN, 1.0), hoeffding_radius(config, n, delta), delta, n)


def estimate_popularity_sequences(W, config: TopicsConfig, delta: float = 0.01,
                                  pooled: bool = False) -> PopularityEstimate:
    """Per-epoch estimates for an ``(n, r)`` site-1 table.

    With ``pooled=True`` every epoch shares one estimate computed from all
    ``n * r`` observations, which is appropriate when popularity does not
    drift over time.
    """
    W = np.asarray(W, dtype=np.int64)
    n, r = W.shape
    N = config.taxonomy_size
    if pooled:
        counts = np.bincount(W.ravel(), minlength=N)
        raw = np.repeat(_raw_estimate(counts, n * r, config)[None, :], r, axis=0)
        samples = n * r
    else:
        offsets = (np.arange(r) * N)[None, :]
        counts = np.bincount((W + offsets).ravel(), minlength=r * N).reshape(r, N)
        raw = _raw_estimate(counts, n, config)
        samples = n
    return PopularityEstimate(raw, np.clip(raw, P_MIN, 1.0), hoeffding_radius(config, samples, delta),
                              delta, samples)


def alpha_from_p(p, k: int = 5):
    """``P(o in S | o' in S)`` for ``o' != o`` under exchangeable top sets.

    ``(k - 1) p / (k - p)``; with ``k = 5`` this is ``4p / (5 - p)``.
    """
    p = np.asarray(p, dtype=np.float64)
    out = (k - 1) * p / (k - p)
    return float(out) if out.ndim == 0 else out


def match_probability(p, config: TopicsConfig):
    """``E[P_s[i, o] | W_i = o]``: posterior emission probability after a match."""
    q_in, q_out = config.q_in, config.q_out
    gap = q_in - q_out
    p = np.asarray(p, dtype=np.float64)
    return q_out + gap * q_in * p / (q_out + gap * p)


def mismatch_probability(p_target, config: TopicsConfig, p_observed=None):
    """``E[P_s[i, o] | W_i = w]`` for ``w != o``.

    By default the conditional inclusion probability is approximated by
    ``alpha(p[o])``, ignoring that ``w`` may have been a random-branch topic.
    Passing ``p_observed`` (the popularity of ``w``) instead conditions on
    the observation itself, which is exact when top sets are exchangeable.
    """
    q_in, q_out = config.q_in, config.q_out
    gap = q_in - q_out
    k = config.top_set_size
    p_o = np.asarray(p_target, dtype=np.float64)
    alpha = (k - 1) * p_o / (k - p_o)
    if p_observed is None:
        return q_out + gap * alpha
    p_w = np.asarray(p_observed, dtype=np.float64)
    both = alpha * p_w
    only_target = np.clip(p_o - both, 0.0, None)
    cond = (q_in * both + q_out * only_target) / (q_out + gap * p_w)
    return q_out + gap * cond


def _weight_tables(est: PopularityEstimate, config: TopicsConfig):
    p = est.clamped
    with np.errstate(divide="ignore"):
        match = -np.log(match_probability(p, config))
        mismatch = -np.log(mismatch_probability(p, config))
    return match, mismatch


def weighted_hamming_score(o, W_i, est: PopularityEstimate, config: TopicsConfig,
                           conditioning: str = "topic") -> float:
    """Asymmetric weighted Hamming distance between ``o`` and ``W_i``.

    Equals ``-sum_s log E[P_s[i, o^s] | W_i^s]``. ``conditioning="topic"`` is
    the standard attack; ``"observed"`` uses the observation-conditioned
    mismatch term described in :func:`mismatch_probability`.
    """
    o = np.asarray(o, dtype=np.int64)
    W_i = np.asarray(W_i, dtype=np.int64)
    if o.shape != W_i.shape or o.ndim != 1:
        raise ValueError("sequences must be one-dimensional and of equal length")
    r = o.size
    p = est.clamped[:r]
    s = np.arange(r)
    p_o = p[s, o]
    hit = W_i == o
    if conditioning == "topic":
        miss_prob = mismatch_probability(p_o, config)
    elif conditioning == "observed":
        miss_prob = mismatch_probability(p_o, config, p_observed=p[s, W_i])
    else:
        raise ValueError(f"unknown conditioning {conditioning!r}")
    probs = np.where(hit, match_probability(p_o, config), miss_prob)
    with np.errstate(divide="ignore"):
        return float(-np.log(probs).sum())


def hamming_distances(W, targets) -> np.ndarray:
    """``(T, n)`` count of mismatching epochs."""
    W = np.asarray(W)
    targets = np.atleast_2d(np.asarray(targets))
    dist = np.zeros((targets.shape[0], W.shape[0]), dtype=np.int64)
    for s in range(targets.shape[1]):
        dist += W[None, :, s] != targets[:, s, None]
    return dist


def hamming_attack(W, o) -> int:
    """User whose site-1 sequence disagrees with ``o`` in the fewest epochs."""
    W = np.asarray(W)
    if W.shape[0] == 0:
        raise ValueError("no candidate users")
    return int(np.argmin(hamming_distances(W, o)[0]))


def hamming_attack_batch(W, targets) -> np.ndarray:
    return np.argmin(hamming_distances(W, targets), axis=1)


def weighted_hamming_scores(W, targets, est: PopularityEstimate, config: TopicsConfig) -> np.ndarray:
    """``(T, n)`` asymmetric weighted Hamming scores, one row per target."""
    W = np.asarray(W, dtype=np.int64)
    targets = np.atleast_2d(np.asarray(targets, dtype=np.int64))
    r = targets.shape[1]
    match, mismatch = _weight_tables(est, config)
    s = np.arange(r)
    m = match[s[None, :], targets]
    x = mismatch[s[None, :], targets]
    # Sum of mismatch weights plus the (negative) gain on matching epochs.
    # Adding identical gains keeps equal-Hamming ties exact; mismatches that
    # are impossible (infinite weight) are counted separately to avoid inf - inf.
    possible = np.isfinite(x)
    x = np.where(possible, x, 0.0)
    scores = np.repeat(x.sum(axis=1)[:, None], W.shape[0], axis=1)
    blocked = np.zeros(scores.shape, dtype=bool)
    for t in range(r):
        hits = W[None, :, t] == targets[:, t, None]
        scores += np.where(hits, (m - x)[:, t, None], 0.0)
        blocked |= ~hits & ~possible[:, t, None]
    scores[blocked] = np.inf
    return scores


def weighted_hamming_attack(W, o, est: PopularityEstimate, config: TopicsConfig) -> int:
    W = np.asarray(W)
    if W.shape[0] == 0:
        raise ValueError("no candidate users")
    return int(np.argmin(weighted_hamming_scores(W, o, est, config)[0]))


def weighted_hamming_attack_batch(W, targets, est: PopularityEstimate, config: TopicsConfig) -> np.ndarray:
    return np.argmin(weighted_hamming_scores(W, targets, est, config), axis=1)


def matching_assignment(scores, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Minimum-total-score one-to-one assignment of rows to columns.

    ``scores[j, i]`` is the cost of assigning observation ``j`` to user
    ``i``; the result maps each row to a column. Rows and columns are
    shuffled before solving so ties between optimal assignments are broken
    at random. Infinite costs mark impossible pairs.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] != scores.shape[1]:
        raise ValueError(f"score matrix must be square, got shape {scores.shape}")
    n = scores.shape[0]
    finite = np.isfinite(scores)
    if not finite.all():
        big = (np.abs(scores[finite]).max() if finite.any() else 0.0) + 1.0
        scores = np.where(finite, scores, big * (n + 1))
    if rng is None:
        _, cols = linear_sum_assignment(scores)
        return cols
    row_perm = rng.permutation(n)
    col_perm = rng.permutation(n)
    _, cols = linear_sum_assignment(scores[np.ix_(row_perm, col_perm)])
    out = np.empty(n, dtype=np.int64)
    out[row_perm] = col_perm[cols]
    return out


def log_likelihood_scores(P, observations) -> np.ndarray:
    """``scores[j, i] = -log P[i, O_j]`` for the assignment attack on a matrix."""
    Pe = P.entries if hasattr(P, "entries") else np.asarray(P)
    with np.errstate(divide="ignore"):
        return -np.log(Pe[:, np.asarray(observations)].T)
