"""Monte Carlo re-identification experiments.

Randomness is drawn per fixed-size batch of trials from streams labelled by
the batch index, so a report depends only on its inputs and master seed and
never on how batches are spread over threads.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ..attacks import (
    estimate_popularity_sequences,
    hamming_attack_batch,
    log_likelihood_scores,
    matching_assignment,
    weighted_hamming_attack_batch,
)
from ..bounds import LiftedRule, optimal_full_info_rule
from ..model import PredictionMatrix, RepresentationMatrix, sample_rows
from ..rng import as_seed
from ..topics import PopulationModel, TopicsConfig, generate_population, get_topic, site_sequences
from .report import ExperimentReport

MATRIX_BATCH = 8192
MATCHING_BATCH = 2048
TOPICS_BATCH = 128

TOPIC_METHODS = ("hamming", "weighted")


def thread_count(threads: Optional[int] = None) -> int:
    """Explicit value, else ``REID_THREADS``, else 1."""
    if threads is None:
        threads = int(os.environ.get("REID_THREADS", "1") or 1)
    return max(1, int(threads))


def _map_batches(fn: Callable[[int], int], n_batches: int, threads: Optional[int]) -> int:
    workers = thread_count(threads)
    if workers == 1 or n_batches == 1:
        return sum(fn(b) for b in range(n_batches))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(fn, range(n_batches)))


def _batches(trials: int, size: int):
    starts = range(0, trials, size)
    return [(s, min(trials, s + size)) for s in starts]


@dataclass(frozen=True)
class ExperimentConfig:
    """Topics random-user experiment settings (the JSON config file)."""

    topics: TopicsConfig = field(default_factory=TopicsConfig)
    population: PopulationModel = field(default_factory=PopulationModel)
    users: int = 10_000
    trials: int = 10_000
    seed: int = 0
    delta: float = 0.01
    pooled_popularity: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(
            topics=TopicsConfig.from_dict(d),
            population=PopulationModel.from_dict(d.get("population")),
            users=int(d.get("users", 10_000)),
            trials=int(d.get("trials", 10_000)),
            seed=int(d.get("seed", 0)),
            delta=float(d.get("delta", 0.01)),
            pooled_popularity=bool(d.get("pooled_popularity", True)),
        )

    def to_dict(self) -> dict:
        d = self.topics.to_dict()
        d.update(
            population=self.population.to_dict(),
            users=self.users,
            trials=self.trials,
            seed=self.seed,
            delta=self.delta,
            pooled_popularity=self.pooled_popularity,
        )
        return d


def _matrix_random_user(P: RepresentationMatrix, method, trials: int, seed, threads) -> ExperimentReport:
    if isinstance(method, str):
        if method == "optimal":
            A = optimal_full_info_rule(P)
        elif method == "uniform":
            A = PredictionMatrix.uniform(P.n, P.m)
        else:
            raise ValueError(f"unknown rule {method!r} for a matrix experiment")
        name = method
    else:
        A, name = method, "custom"
    if A.shape != P.shape:
        raise ValueError("prediction matrix shape does not match P")
    rule = LiftedRule(A)
    seed = as_seed(seed)
    batches = _batches(trials, MATRIX_BATCH)

    def run(b):
        lo, hi = batches[b]
        rng = seed.stream("random-user", b)
        users = rng.integers(P.n, size=hi - lo)
        obs = sample_rows(P, users, rng)
        return int(np.count_nonzero(rule(obs, rng) == users))

    successes = _map_batches(run, len(batches), threads)
    return ExperimentReport(trials, successes, name, seed.master_seed, {"n": P.n, "m": P.m})


def _trial_users(seed, lo: int, hi: int, n: int) -> np.ndarray:
    u = seed.uniform("trial-user", np.arange(lo, hi))
    return np.minimum((u * n).astype(np.int64), n - 1)


def _trial_sites(lo: int, hi: int) -> np.ndarray:
    # Site 1 is the attacker's database; trial t observes the target through
    # its own second site, id 2 + t, so repeated users get fresh draws.
    return 2 + np.arange(lo, hi, dtype=np.int64)


def run_topics_curve(config: ExperimentConfig, epochs: Sequence[int], methods: Sequence[str] = TOPIC_METHODS,
                     trials: Optional[int] = None, seed=None, threads: Optional[int] = None) -> list[ExperimentReport]:
    """Random-user experiment for several epoch counts and attack methods.

    One population, one site-1 database and one set of trial targets are
    shared by every (r, method) cell; a shorter horizon uses the first r
    epochs. Cells are therefore paired.
    """
    for m in methods:
        if m not in TOPIC_METHODS:
            raise ValueError(f"unknown attack method {m!r}")
    epochs = sorted(set(int(r) for r in epochs))
    if not epochs or epochs[0] < 1:
        raise ValueError("epoch counts must be positive")
    trials = config.trials if trials is None else int(trials)
    seed = as_seed(config.seed if seed is None else seed)
    start = time.perf_counter()
    r_max = epochs[-1]
    topics = config.topics.with_epochs(r_max)
    table = generate_population(config.users, topics, config.population, seed)
    n = config.users
    site1 = site_sequences(np.arange(n), 1, table, topics, seed)
    batches = _batches(trials, TOPICS_BATCH)

    target_users = _trial_users(seed, 0, trials, n)
    targets = get_topic(target_users[:, None], _trial_sites(0, trials)[:, None], np.arange(r_max)[None, :],
                        table, topics, seed)

    reports = []
    for r in epochs:
        W = site1[:, :r]
        est = estimate_popularity_sequences(W, topics.with_epochs(r), config.delta, config.pooled_popularity)
        for method in methods:
            def run(b, method=method):
                lo, hi = batches[b]
                users, seqs = target_users[lo:hi], targets[lo:hi, :r]
                if method == "hamming":
                    pred = hamming_attack_batch(W, seqs)
                else:
                    pred = weighted_hamming_attack_batch(W, seqs, est, topics)
                return int(np.count_nonzero(pred == users))

            successes = _map_batches(run, len(batches), threads)
            echo = config.to_dict()
            echo.update(epochs=r, trials=trials, seed=seed.master_seed)
            reports.append(ExperimentReport(trials, successes, method, seed.master_seed, echo))
    elapsed = time.perf_counter() - start
    for rep in reports:
        rep.wall_time = elapsed
    return reports


def run_random_user_experiment(source: Union[RepresentationMatrix, ExperimentConfig], method="optimal",
                               trials: int = 10_000, seed=0, threads: Optional[int] = None,
                               epochs: Optional[int] = None) -> ExperimentReport:
    """Estimate random-user re-identification accuracy by simulation.

    ``source`` is either an explicit representation matrix (``method`` is
    ``"optimal"``, ``"uniform"`` or a :class:`PredictionMatrix`) or a Topics
    experiment config (``method`` is ``"hamming"`` or ``"weighted"``).
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    start = time.perf_counter()
    if isinstance(source, RepresentationMatrix):
        report = _matrix_random_user(source, method, trials, seed, threads)
    elif isinstance(source, ExperimentConfig):
        r = source.topics.epochs if epochs is None else epochs
        report = run_topics_curve(source, [r], [method], trials, seed, threads)[0]
    else:
        raise TypeError("source must be a RepresentationMatrix or an ExperimentConfig")
    report.wall_time = time.perf_counter() - start
    return report


def _matching_rule(P: RepresentationMatrix, rule):
    if callable(rule) and not isinstance(rule, str):
        return rule, getattr(rule, "__name__", "custom")
    if isinstance(rule, PredictionMatrix):
        return LiftedRule(rule), "lifted"
    if rule == "assignment":
        return (lambda obs, rng: matching_assignment(log_likelihood_scores(P, obs), rng)), "assignment"
    if rule == "lifted":
        return LiftedRule(optimal_full_info_rule(P)), "lifted"
    if rule == "constant":
        return (lambda obs, rng: np.zeros(len(obs), dtype=np.int64)), "constant"
    raise ValueError(f"unknown matching rule {rule!r}")


def run_matching_experiment(P: RepresentationMatrix, rule="assignment", trials: int = 10_000, seed=0,
                            threads: Optional[int] = None) -> ExperimentReport:
    """Estimate matching accuracy: shuffle users, observe all, match back.

    ``rule`` is ``"assignment"`` (optimal assignment on ``-log P``),
    ``"lifted"`` (the optimal random-user rule applied per coordinate),
    ``"constant"``, a :class:`PredictionMatrix`, or a callable
    ``rule(observations, rng) -> predicted identities``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    fn, name = _matching_rule(P, rule)
    seed = as_seed(seed)
    start = time.perf_counter()
    batches = _batches(trials, MATCHING_BATCH)
    n = P.n

    def run(b):
        lo, hi = batches[b]
        rng = seed.stream("matching", b)
        perms = np.argsort(rng.random((hi - lo, n)), axis=1)
        obs = sample_rows(P, perms.ravel(), rng).reshape(hi - lo, n)
        correct = 0
        for t in range(hi - lo):
            correct += int(np.count_nonzero(np.asarray(fn(obs[t], rng)) == perms[t]))
        return correct

    successes = _map_batches(run, len(batches), threads)
    report = ExperimentReport(trials * n, successes, name, seed.master_seed, {"n": n, "m": P.m, "runs": trials},
                              ci_sample_size=trials)
    report.wall_time = time.perf_counter() - start
    return report
