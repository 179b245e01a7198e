"""Simulation of the Topics API over synthetic user populations.

Each epoch every user holds a top set of ``k`` distinct topics drawn from a
taxonomy of ``N``. A call from site ``w`` in epoch ``s`` returns, with
probability ``p``, a uniform topic from the whole taxonomy and otherwise a
uniform member of the user's top set. The answer is a pure function of
``(seed, user, site, epoch)``, so a site sees the same topic all epoch while
two sites draw independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .model import RepresentationMatrix
from .rng import SeedSpec, as_seed, hash_uniform

_POPULATION_CHUNK = 4096


@dataclass(frozen=True)
class TopicsConfig:
    taxonomy_size: int = 350
    top_set_size: int = 5
    flip_prob: float = 0.05
    epochs: int = 8

    def __post_init__(self):
        if self.taxonomy_size < 1 or self.top_set_size < 1 or self.epochs < 1:
            raise ValueError("taxonomy_size, top_set_size and epochs must be positive")
        if self.top_set_size > self.taxonomy_size:
            raise ValueError("top_set_size cannot exceed taxonomy_size")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError("flip_prob must lie in [0, 1]")

    @property
    def q_in(self) -> float:
        """Probability of returning a given topic that is in the top set."""
        return (1.0 - self.flip_prob) / self.top_set_size + self.flip_prob / self.taxonomy_size

    @property
    def q_out(self) -> float:
        """Probability of returning a given topic outside the top set."""
        return self.flip_prob / self.taxonomy_size

    def with_epochs(self, epochs: int) -> "TopicsConfig":
        return TopicsConfig(self.taxonomy_size, self.top_set_size, self.flip_prob, epochs)

    def to_dict(self) -> dict:
        return {
            "taxonomy_size": self.taxonomy_size,
            "top_set_size": self.top_set_size,
            "flip_prob": self.flip_prob,
            "epochs": self.epochs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TopicsConfig":
        defaults = cls()
        return cls(
            taxonomy_size=int(d.get("taxonomy_size", defaults.taxonomy_size)),
            top_set_size=int(d.get("top_set_size", defaults.top_set_size)),
            flip_prob=float(d.get("flip_prob", defaults.flip_prob)),
            epochs=int(d.get("epochs", defaults.epochs)),
        )


@dataclass(frozen=True, eq=False)
class PopulationModel:
    """How top sets are generated.

    ``zipf`` gives topic ``t`` weight ``(t + 1) ** -zipf_exponent``; when
    ``time_invariant`` is false the popularity ranks are reshuffled every
    epoch. ``explicit`` takes ``weights`` of shape ``(N,)`` or ``(epochs, N)``.
    Top sets are ``k`` draws without replacement, proportional to weight.
    """

    kind: str = "zipf"
    zipf_exponent: float = 1.0
    weights: Optional[np.ndarray] = None
    time_invariant: bool = True

    def __post_init__(self):
        if self.kind not in ("zipf", "uniform", "explicit"):
            raise ValueError(f"unknown population kind {self.kind!r}")
        if self.kind == "explicit":
            if self.weights is None:
                raise ValueError("explicit population needs weights")
            w = np.array(self.weights, dtype=np.float64)
            if w.ndim not in (1, 2) or np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be a nonnegative vector or epochs x N matrix")
            if np.any(w.reshape(-1, w.shape[-1]).sum(axis=1) <= 0):
                raise ValueError("weights must not be all zero")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)
            object.__setattr__(self, "time_invariant", w.ndim == 1 or bool(np.all(w == w[0])))

    def epoch_weights(self, config: TopicsConfig, epoch: int, seed=0) -> np.ndarray:
        N = config.taxonomy_size
        if self.kind == "uniform":
            return np.ones(N)
        if self.kind == "explicit":
            w = self.weights if self.weights.ndim == 1 else self.weights[epoch]
            if w.shape[-1] != N:
                raise ValueError(f"weights have {w.shape[-1]} topics, taxonomy has {N}")
            return np.array(w)
        w = np.arange(1, N + 1, dtype=np.float64) ** -self.zipf_exponent
        if not self.time_invariant:
            w = w[as_seed(seed).stream("zipf-ranks", epoch).permutation(N)]
        return w

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "time_invariant": self.time_invariant}
        if self.kind == "zipf":
            d["exponent"] = self.zipf_exponent
        if self.kind == "explicit":
            d["weights"] = self.weights.tolist()
        return d

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "PopulationModel":
        d = d or {}
        return cls(
            kind=d.get("kind", "zipf"),
            zipf_exponent=float(d.get("exponent", d.get("zipf_exponent", 1.0))),
            weights=d.get("weights"),
            time_invariant=bool(d.get("time_invariant", True)),
        )


@dataclass(frozen=True, eq=False)
class TopSetTable:
    """Top sets ``sets[user, epoch]``, each a sorted row of ``k`` topic ids."""

    sets: np.ndarray
    taxonomy_size: int

    def __post_init__(self):
        sets = np.array(self.sets, dtype=np.int64)
        if sets.ndim != 3:
            raise ValueError("sets must have shape (users, epochs, k)")
        if np.any((sets < 0) | (sets >= self.taxonomy_size)):
            raise ValueError("topic ids out of range")
        srt = np.sort(sets, axis=2)
        if np.any(srt[..., 1:] == srt[..., :-1]):
            raise ValueError("top sets must hold distinct topics")
        srt.setflags(write=False)
        object.__setattr__(self, "sets", srt)

    @property
    def n(self) -> int:
        return self.sets.shape[0]

    @property
    def epochs(self) -> int:
        return self.sets.shape[1]

    @property
    def k(self) -> int:
        return self.sets.shape[2]

    def contains(self, users, epoch, topics) -> np.ndarray:
        """Broadcasted test ``topics in S[users, epoch]``."""
        users, epoch, topics = np.broadcast_arrays(users, epoch, topics)
        return np.any(self.sets[users, epoch] == topics[..., None], axis=-1)

    def inclusion_frequency(self, epoch: int) -> np.ndarray:
        """Fraction of users whose epoch top set contains each topic."""
        counts = np.bincount(self.sets[:, epoch].ravel(), minlength=self.taxonomy_size)
        return counts / self.n


def inclusion_probabilities(weights, k: int) -> np.ndarray:
    """Exact ``P(topic in top set)`` for k weighted draws without replacement.

    Successive weighted sampling is an exponential race: topic ``j`` finishes
    at ``Exp(w_j)`` and the first ``k`` finishers form the set. Hence
    ``pi_i = int_0^inf w_i exp(-w_i t) P(fewer than k others finished by t) dt``
    where the count of other finishers is Poisson-binomial.
    """
    w = np.asarray(weights, dtype=np.float64)
    positive = w > 0
    if positive.sum() < k:
        raise ValueError("fewer than k topics have positive weight")
    if positive.sum() == k:
        return positive.astype(np.float64)
    w = w / w[positive].sum()
    N = w.size

    def integrand(t):
        done = -np.expm1(-w * t)
        # below[i, c] = P(exactly c of the topics other than i finished), c < k
        below = np.zeros((N, k))
        below[:, 0] = 1.0
        for j in range(N):
            q = np.full(N, done[j])
            q[j] = 0.0
            shifted = np.zeros_like(below)
            shifted[:, 1:] = below[:, :-1]
            below = below * (1.0 - q)[:, None] + shifted * q[:, None]
        return w * np.exp(-w * t) * below.sum(axis=1)

    scale = k / w[positive].min()
    val, _ = _quad_halfline(integrand, scale)
    return np.clip(val, 0.0, 1.0)


def _quad_halfline(f, scale):
    # Split [0, inf) at geometric breakpoints so both the fast early mass of
    # popular topics and the slow tail of rare topics are resolved.
    total = 0.0
    err = 0.0
    edges = [0.0] + [scale * 2.0 ** e for e in range(-20, 2)]
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad_vec(f, a, b, epsabs=1e-14, epsrel=1e-12)
        total = total + v
        err += e
    v, e = integrate.quad_vec(f, edges[-1], np.inf, epsabs=1e-14, epsrel=1e-12)
    return total + v, err + e


def generate_population(n: int, config: TopicsConfig, model: PopulationModel, seed) -> TopSetTable:
    """Draw an independent top set for every (user, epoch)."""
    if n < 1:
        raise ValueError("need at least one user")
    seed = as_seed(seed)
    k, N = config.top_set_size, config.taxonomy_size
    sets = np.empty((n, config.epochs, k), dtype=np.int64)
    for s in range(config.epochs):
        w = model.epoch_weights(config, s, seed)
        if np.count_nonzero(w > 0) < k:
            raise ValueError(f"epoch {s}: fewer than {k} topics have positive weight")
        with np.errstate(divide="ignore"):
            inv_w = np.where(w > 0, 1.0 / np.where(w > 0, w, 1.0), np.inf)
        for start in range(0, n, _POPULATION_CHUNK):
            stop = min(n, start + _POPULATION_CHUNK)
            rng = seed.stream("population", s, start // _POPULATION_CHUNK)
            race = rng.standard_exponential((stop - start, N)) * inv_w
            sets[start:stop, s] = np.argpartition(race, k - 1, axis=1)[:, :k]
    return TopSetTable(sets, N)


def get_topic(user, site, epoch, table: TopSetTable, config: TopicsConfig, seed) -> np.ndarray:
    """Topic returned to ``site`` for ``user`` in ``epoch`` (broadcasts).

    Returns an int64 array (0-d for scalar inputs).
    """
    seed = as_seed(seed)
    user, site, epoch = np.broadcast_arrays(
        np.asarray(user, dtype=np.int64), np.asarray(site, dtype=np.int64), np.asarray(epoch, dtype=np.int64)
    )
    coin = seed.uniform("coin", user, site, epoch)
    pick = seed.uniform("pick", user, site, epoch)
    random_topic = np.minimum((pick * config.taxonomy_size).astype(np.int64), config.taxonomy_size - 1)
    slot = np.minimum((pick * table.k).astype(np.int64), table.k - 1)
    top_topic = table.sets[user, epoch, slot]
    return np.where(coin < config.flip_prob, random_topic, top_topic)


def site_sequences(users, site, table: TopSetTable, config: TopicsConfig, seed,
                   epochs: Optional[int] = None) -> np.ndarray:
    """``(len(users), epochs)`` topic sequences seen by one site (or one site per user)."""
    r = config.epochs if epochs is None else epochs
    users = np.asarray(users, dtype=np.int64)
    site = np.asarray(site, dtype=np.int64)
    site = site[:, None] if site.ndim == 1 else site
    return get_topic(users[:, None], site, np.arange(r)[None, :], table, config, seed)


def per_epoch_matrix(table: TopSetTable, epoch: int, config: TopicsConfig) -> RepresentationMatrix:
    """``P_s[i, o] = q_in`` if ``o`` is in user i's top set, else ``q_out``."""
    if not 0 <= epoch < table.epochs:
        raise IndexError(f"epoch {epoch} out of range")
    P = np.full((table.n, config.taxonomy_size), config.q_out)
    np.put_along_axis(P, table.sets[:, epoch], config.q_in, axis=1)
    return RepresentationMatrix(P)


def sequence_log_likelihood(user: int, seq, table: TopSetTable, config: TopicsConfig) -> float:
    """``log P[user, seq]`` where the sequence probability factorises over epochs."""
    seq = np.asarray(seq, dtype=np.int64)
    if seq.ndim != 1 or seq.size > table.epochs:
        raise ValueError("sequence must be one-dimensional with at most one topic per epoch")
    inside = table.contains(user, np.arange(seq.size), seq)
    with np.errstate(divide="ignore"):
        return float(np.log(np.where(inside, config.q_in, config.q_out)).sum())


@dataclass(frozen=True, eq=False)
class TwoSiteSample:
    table: TopSetTable
    site1: np.ndarray
    site2: np.ndarray
    config: TopicsConfig = field(default_factory=TopicsConfig)


def simulate_two_sites(n: int, config: TopicsConfig, model: PopulationModel, seed) -> TwoSiteSample:
    """One population observed by site 1 and site 2 for every epoch."""
    table = generate_population(n, config, model, seed)
    users = np.arange(n)
    return TwoSiteSample(
        table=table,
        site1=site_sequences(users, 1, table, config, seed),
        site2=site_sequences(users, 2, table, config, seed),
        config=config,
    )
