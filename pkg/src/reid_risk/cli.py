"""Command line entry point: ``reid <command> ...``.

Exit status is 0 on success, 2 when an input fails validation and 3 on I/O
errors. ``REID_THREADS`` caps the number of worker threads.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import attacks, bounds, io
from .harness import (
    ExperimentConfig,
    cross_epoch_mutual_information,
    curve_to_csv,
    curve_to_json,
    emit_accuracy_curve,
    ingest_song_dataset,
    plug_in_mutual_information,
    run_song_experiment,
    run_topics_curve,
)
from .rng import stream
from .topics import simulate_two_sites

EXIT_VALIDATION = 2
EXIT_IO = 3

log = logging.getLogger("reid")


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load_config(args) -> ExperimentConfig:
    d = json.loads(Path(args.config).read_text()) if args.config else {}
    if getattr(args, "seed", None) is not None:
        d["seed"] = args.seed
    if getattr(args, "users", None) is not None:
        d["users"] = args.users
    if getattr(args, "trials", None) is not None:
        d["trials"] = args.trials
    return ExperimentConfig.from_dict(d)


def cmd_bound(args):
    P = io.read_matrix(args.matrix)
    names = [b.strip() for b in args.bounds.split(",") if b.strip()]
    reports = bounds.bound_reports(P, names, epsilon=args.epsilon, mi_nats=args.mi_nats)
    _emit(json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True), args.out)


def cmd_check(args):
    P = io.read_matrix(args.matrix)
    if args.notion == "ldp":
        result = {"notion": "ldp", "epsilon": args.epsilon, "delta_star": bounds.check_ldp(P, args.epsilon)}
    else:
        result = {"notion": "kanon", "k": bounds.check_k_anonymity(P)}
    _emit(json.dumps(result, sort_keys=True), args.out)


def cmd_simulate(args):
    cfg = _load_config(args)
    sample = simulate_two_sites(cfg.users, cfg.topics, cfg.population, cfg.seed)
    if args.format == "json":
        _emit(json.dumps({"site1": sample.site1.tolist(), "site2": sample.site2.tolist()}), args.out)
    elif args.out:
        io.write_sequences(args.out, sample.site1, sample.site2)
    else:
        raise ValueError("CSV sequence dumps need --out")


def cmd_attack(args):
    cfg = _load_config(args)
    tables = io.read_sequences(args.sequences)
    if 1 not in tables or 2 not in tables:
        raise ValueError("sequence dump must contain sites 1 and 2")
    W, targets = tables[1], tables[2]
    if W.shape[1] != targets.shape[1]:
        raise ValueError("sites 1 and 2 have different epoch counts")
    topics = cfg.topics.with_epochs(W.shape[1])
    truth = np.arange(targets.shape[0])
    if args.method == "hamming":
        pred = attacks.hamming_attack_batch(W, targets)
    else:
        est = attacks.estimate_popularity_sequences(W, topics, cfg.delta, cfg.pooled_popularity)
        if args.method == "weighted":
            pred = attacks.weighted_hamming_attack_batch(W, targets, est, topics)
        else:
            if targets.shape[0] != W.shape[0]:
                raise ValueError("assignment needs the same number of users on both sites")
            scores = attacks.weighted_hamming_scores(W, targets, est, topics)
            pred = attacks.matching_assignment(scores, stream(cfg.seed, "cli-assignment"))
    io.write_predictions(args.out or sys.stdout, truth, pred)
    log.info("accuracy %.6f over %d targets", float(np.mean(pred == truth)), truth.size)


def cmd_experiment(args):
    cfg = _load_config(args)
    epochs = [int(r) for r in args.epochs.split(",")] if args.epochs else [cfg.topics.epochs]
    methods = [m.strip() for m in args.methods.split(",")]
    reports = run_topics_curve(cfg, epochs, methods, threads=args.threads)
    rows = emit_accuracy_curve(reports)
    if args.format == "csv":
        _emit(curve_to_csv(rows), args.out)
    else:
        _emit(json.dumps({"curve": rows, "reports": [r.to_dict() for r in reports]}, indent=2,
                         sort_keys=True), args.out)


def cmd_mi(args):
    cfg = _load_config(args)
    sample = simulate_two_sites(cfg.users, cfg.topics, cfg.population, cfg.seed)
    report = plug_in_mutual_information(sample.site1, sample.site2)
    out = report.to_dict()
    out["cross_epoch_bits"] = cross_epoch_mutual_information(sample.site1, sample.site2).tolist()
    _emit(json.dumps(out, indent=2, sort_keys=True), args.out)


def cmd_songs(args):
    dataset = ingest_song_dataset(args.path, skip_malformed=args.skip_malformed)
    reports = [run_song_experiment(dataset, r, args.trials, args.seed if args.seed is not None else 0,
                                   replace=not args.without_replacement, users=args.users)
               for r in args.r]
    rows = emit_accuracy_curve(reports)
    _emit(curve_to_csv(rows) if args.format == "csv" else curve_to_json(rows), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reid", description="Re-identification risk toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="json")

    p = sub.add_parser("bound", help="accuracy bounds for a matrix file")
    p.add_argument("matrix")
    p.add_argument("--bounds", default="max,optimal,matching")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--mi-nats", type=float)
    common(p, config=False)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("check", help="privacy notion checks")
    p.add_argument("notion", choices=("ldp", "kanon"))
    p.add_argument("matrix")
    p.add_argument("--epsilon", type=float, default=0.0)
    common(p, config=False)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="simulate two sites calling the Topics API")
    p.add_argument("--users", type=int)
    common(p)
    p.set_defaults(func=cmd_simulate, format="csv")

    p = sub.add_parser("attack", help="attack a sequence dump")
    p.add_argument("--method", choices=("hamming", "weighted", "assignment"), default="weighted")
    p.add_argument("--sequences", required=True)
    common(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("experiment", help="random-user accuracy curve")
    p.add_argument("--epochs", help="comma-separated epoch counts, e.g. 1,2,4,8")
    p.add_argument("--methods", default="hamming,weighted")
    p.add_argument("--users", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--threads", type=int)
    common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("mi", help="plug-in mutual information on simulated data")
    p.add_argument("--users", type=int)
    common(p)
    p.set_defaults(func=cmd_mi)

    p = sub.add_parser("songs", help="song-sampling attack on taste-profile triplets")
    p.add_argument("path")
    p.add_argument("--r", type=int, nargs="+", default=[4])
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--users", type=int)
    p.add_argument("--without-replacement", action="store_true")
    p.add_argument("--skip-malformed", action="store_true")
    common(p, config=False)
    p.set_defaults(func=cmd_songs)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except OSError as exc:
        print(f"reid: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"reid: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return 0


if __name__ == "__main__":
    sys.exit(main())
