"""Sampling attack on per-user item sets (song "likes").

Each user is released as ``r`` songs sampled from the set they like. Site 1
holds one such sample for every user; the attacker sees a fresh sample of a
random user and guesses the site-1 user with the largest multiset overlap.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..rng import as_seed
from .report import ExperimentReport

log = logging.getLogger(__name__)


class MalformedLineError(ValueError):
    def __init__(self, path, lineno, line):
        super().__init__(f"{path}:{lineno}: expected 'user<TAB>song<TAB>count', got {line!r}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class SongDataset:
    """CSR layout: user ``i`` likes ``items[indptr[i]:indptr[i + 1]]``."""

    indptr: np.ndarray
    items: np.ndarray
    user_ids: tuple = ()
    item_ids: tuple = ()

    def __post_init__(self):
        indptr = np.asarray(self.indptr, dtype=np.int64)
        if indptr.ndim != 1 or indptr.size < 2:
            raise ValueError("dataset has no users")
        if np.any(np.diff(indptr) < 1):
            raise ValueError("every user must like at least one item")
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "items", np.asarray(self.items, dtype=np.int64))

    @classmethod
    def from_sets(cls, sets) -> "SongDataset":
        """Build from a list of per-user item collections (duplicates collapse)."""
        rows = [np.unique(np.asarray(list(s), dtype=np.int64)) for s in sets]
        indptr = np.concatenate([[0], np.cumsum([r.size for r in rows])])
        items = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
        return cls(indptr, items)

    @property
    def n(self) -> int:
        return self.indptr.size - 1

    @property
    def vocabulary_size(self) -> int:
        return int(self.items.max()) + 1 if self.items.size else 0

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.indptr)


def ingest_song_dataset(path, fmt: str = "triplets", skip_malformed: bool = False) -> SongDataset:
    """Read taste-profile triplets ``user<TAB>song<TAB>play_count``.

    Play counts are ignored. Identifiers are interned to dense indices in
    first-seen order.
    """
    if fmt != "triplets":
        raise ValueError(f"unsupported song dataset format {fmt!r}")
    users: dict[str, int] = {}
    songs: dict[str, int] = {}
    pairs_u, pairs_s = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped:
                continue
            parts = stripped.split("\t")
            if len(parts) != 3 or not parts[0] or not parts[1] or not parts[2].isdigit():
                if skip_malformed:
                    log.warning("skipping malformed line %d of %s", lineno, path)
                    continue
                raise MalformedLineError(path, lineno, stripped)
            pairs_u.append(users.setdefault(parts[0], len(users)))
            pairs_s.append(songs.setdefault(parts[1], len(songs)))
    if not pairs_u:
        raise ValueError(f"{path}: no usable entries")
    u = np.asarray(pairs_u, dtype=np.int64)
    s = np.asarray(pairs_s, dtype=np.int64)
    key = np.unique(u * len(songs) + s)
    u, s = key // len(songs), key % len(songs)
    indptr = np.concatenate([[0], np.cumsum(np.bincount(u, minlength=len(users)))])
    return SongDataset(indptr, s, tuple(users), tuple(songs))


def sample_releases(dataset: SongDataset, r: int, users, site, seed, replace: bool = True) -> np.ndarray:
    """``(len(users), r)`` sampled items; -1 pads users with fewer than r items when sampling
    without replacement."""
    seed = as_seed(seed)
    users = np.asarray(users, dtype=np.int64)
    sizes = dataset.sizes[users]
    starts = dataset.indptr[users]
    j = np.arange(r)[None, :]
    if replace:
        u = seed.uniform("song", site, users[:, None], j)
        offset = np.minimum((u * sizes[:, None]).astype(np.int64), sizes[:, None] - 1)
        return dataset.items[starts[:, None] + offset]
    out = np.full((users.size, r), -1, dtype=np.int64)
    for row, (start, size, user) in enumerate(zip(starts, sizes, users)):
        keys = seed.uniform("song-wor", site, user, np.arange(size))
        take = np.argsort(keys, kind="stable")[:r]
        out[row, :take.size] = dataset.items[start + take]
    return out


class OverlapIndex:
    """Inverted index from item to the site-1 users that released it."""

    def __init__(self, releases: np.ndarray):
        n, r = releases.shape
        users = np.repeat(np.arange(n), r)
        items = releases.ravel()
        keep = items >= 0
        users, items = users[keep], items[keep]
        order = np.lexsort((users, items))
        items, users = items[order], users[order]
        # Collapse repeated (item, user) pairs into counts.
        new = np.ones(items.size, dtype=bool)
        new[1:] = (items[1:] != items[:-1]) | (users[1:] != users[:-1])
        starts = np.nonzero(new)[0]
        self.items = items[starts]
        self.users = users[starts]
        self.counts = np.diff(np.append(starts, items.size))
        self.n = n

    def best_match(self, target) -> int:
        """User with the largest multiset overlap with ``target``; ties to lowest index."""
        target = np.asarray(target)
        vals, cnt = np.unique(target[target >= 0], return_counts=True)
        cand_users, cand_scores = [], []
        for item, c in zip(vals, cnt):
            lo, hi = np.searchsorted(self.items, [item, item + 1])
            if hi > lo:
                cand_users.append(self.users[lo:hi])
                cand_scores.append(np.minimum(self.counts[lo:hi], c))
        if not cand_users:
            return 0
        users = np.concatenate(cand_users)
        scores = np.concatenate(cand_scores)
        uniq, inv = np.unique(users, return_inverse=True)
        totals = np.bincount(inv, weights=scores)
        return int(uniq[np.argmax(totals)])


def run_song_experiment(dataset: SongDataset, r: int, trials: int = 10_000, seed=0,
                        replace: bool = True, users: Optional[int] = None) -> ExperimentReport:
    """Random-user accuracy of the overlap attack with ``r`` released songs.

    ``users`` restricts the population to the first that many users.
    """
    if r < 1:
        raise ValueError("need at least one sample per user")
    if dataset.n < 1:
        raise ValueError("empty dataset")
    seed = as_seed(seed)
    start = time.perf_counter()
    n = dataset.n if users is None else min(int(users), dataset.n)
    site1 = sample_releases(dataset, r, np.arange(n), 1, seed, replace)
    index = OverlapIndex(site1)
    u = seed.uniform("song-trial-user", np.arange(trials))
    targets = np.minimum((u * n).astype(np.int64), n - 1)
    successes = 0
    for t, user in enumerate(targets):
        release = sample_releases(dataset, r, [user], 2 + t, seed, replace)[0]
        successes += index.best_match(release) == user
    report = ExperimentReport(trials, int(successes), "overlap", seed.master_seed,
                              {"epochs": r, "users": n, "replace": replace})
    report.wall_time = time.perf_counter() - start
    return report
