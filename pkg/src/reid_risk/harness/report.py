"""Experiment reports, confidence intervals and accuracy curves."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from scipy.stats import norm


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("need at least one trial")
    z = norm.ppf(0.5 + confidence / 2)
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return float(max(0.0, centre - half)), float(min(1.0, centre + half))


@dataclass
class ExperimentReport:
    """Outcome of a Monte Carlo re-identification experiment.

    ``trials`` counts individual predictions. For matching experiments each
    run contributes ``n`` predictions, and the interval is computed from
    ``ci_sample_size`` runs instead, since predictions within a run are
    dependent.
    """

    trials: int
    successes: int
    method: str
    master_seed: int
    config: dict = field(default_factory=dict)
    ci_sample_size: Optional[int] = None
    wall_time: float = 0.0
    accuracy: float = field(init=False)
    ci_low: float = field(init=False)
    ci_high: float = field(init=False)

    def __post_init__(self):
        if self.trials < 1 or not 0 <= self.successes <= self.trials:
            raise ValueError("need 0 <= successes <= trials and trials >= 1")
        self.accuracy = self.successes / self.trials
        m = self.ci_sample_size or self.trials
        lo, hi = wilson_interval(self.accuracy * m, m)
        # Rounding in the Wilson formula can put an endpoint a hair inside the point estimate.
        self.ci_low = min(lo, self.accuracy)
        self.ci_high = max(hi, self.accuracy)

    @property
    def epochs(self) -> Optional[int]:
        return self.config.get("epochs")

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "method": self.method,
            "trials": self.trials,
            "successes": self.successes,
            "accuracy": self.accuracy,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "master_seed": self.master_seed,
            "config": self.config,
        }
        if self.ci_sample_size is not None:
            d["ci_sample_size"] = self.ci_sample_size
        if include_timing:
            d["wall_time"] = self.wall_time
        return d

    def to_json(self, include_timing: bool = False) -> str:
        """Canonical JSON. Timing is excluded by default so output is reproducible."""
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2)


CURVE_FIELDS = ("r", "method", "accuracy", "ci_low", "ci_high", "trials", "successes")


def emit_accuracy_curve(
    reports: Union[Mapping[int, Union[ExperimentReport, Iterable[ExperimentReport]]], Iterable[ExperimentReport]],
) -> list[dict]:
    """Flatten reports into rows sorted by epoch count, then method."""
    rows = []
    if isinstance(reports, Mapping):
        items = []
        for r, value in reports.items():
            for rep in ([value] if isinstance(value, ExperimentReport) else value):
                items.append((int(r), rep))
    else:
        items = [(int(rep.epochs), rep) for rep in reports]
    if not items:
        raise ValueError("need at least one report")
    for r, rep in items:
        rows.append({
            "r": r,
            "method": rep.method,
            "accuracy": rep.accuracy,
            "ci_low": rep.ci_low,
            "ci_high": rep.ci_high,
            "trials": rep.trials,
            "successes": rep.successes,
        })
    rows.sort(key=lambda row: (row["r"], row["method"]))
    return rows


def curve_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CURVE_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def curve_to_json(rows: list[dict]) -> str:
    return json.dumps(rows, sort_keys=True, indent=2)
