"""Command-line entry point: ``kglp train | evaluate | analyze ...``.

Exit codes: 0 success, 1 runtime failure, 2 usage or input error.
"""

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from kglp import __version__, kernels
from kglp.data import DisjointnessError, TripleFormatError, load_dataset
from kglp.evaluation import (
    ExternalRankingError,
    TiePolicy,
    evaluate,
    ingest_external_rankings,
    read_predictions,
    tie_diagnostics,
    write_predictions,
)
from kglp.models import ModelKind, load_model, save_model
from kglp.training import TrainConfig, read_config, train

logger = logging.getLogger("kglp")


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _dataset(args):
    directory = Path(args.dataset)
    if not directory.is_dir():
        raise InputError(f"dataset directory not found: {directory}")
    names = (args.train_file, args.valid_file, args.test_file)
    for name in names:
        if not (directory / name).is_file():
            raise InputError(f"dataset file not found: {directory / name}")
    ds = load_dataset(directory, *names)
    files = {name: {"path": str(directory / name), "sha256": _digest(directory / name)}
             for name in names}
    return ds, files


def _write_manifest(path, command, args, dataset_files, extra):
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "dataset": dataset_files,
        "version": __version__,
        "backend": kernels.BACKEND_NAME,
    }
    manifest.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    logger.info("manifest written to %s", path)


def _threads(args):
    if args.threads:
        return args.threads
    env = os.environ.get("KGLP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"KGLP_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _policies(text):
    try:
        return [TiePolicy.parse(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _fmt(x):
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.6f}"


def print_metrics(results, out=None):
    out = out or sys.stdout
    cols = ["MR", "MRR", "H@1", "H@3", "H@5", "H@10"]
    print(f"{'policy':<12}{'scenario':<10}" + "".join(f"{c:>12}" for c in cols), file=out)
    for policy, res in results.items():
        for scenario, m in (("raw", res.raw), ("filtered", res.filtered)):
            vals = m.as_dict() if m else {}
            print(f"{str(policy):<12}{scenario:<10}"
                  + "".join(f"{_fmt(vals.get(c)):>12}" for c in cols), file=out)


def _metrics_json(results):
    return {str(p): {"raw": r.raw.as_dict() if r.raw else None,
                     "filtered": r.filtered.as_dict() if r.filtered else None}
            for p, r in results.items()}


def cmd_train(args):
    ds, files = _dataset(args)
    try:
        config = read_config(args.config) if args.config else TrainConfig()
        overrides = {f.name: getattr(args, f.name) for f in fields(TrainConfig)
                     if getattr(args, f.name, None) is not None}
        config = config.updated(overrides)
        kind = ModelKind.parse(args.model)
    except (ValueError, OSError) as exc:
        raise InputError(str(exc)) from None
    start = time.monotonic()
    result = train(ds, kind, config, log_every=args.log_every)
    hours = (time.monotonic() - start) / 3600.0
    save_model(result.params, args.out)
    print(f"trained {kind.value} on {len(ds.train)} facts in {hours * 3600:.2f}s; "
          f"model written to {args.out}")
    if result.epoch_losses:
        print(f"loss: first epoch {result.epoch_losses[0]:.6f}, last {result.epoch_losses[-1]:.6f}")
    _write_manifest(args.manifest or f"{args.out}.manifest.json", "train", args, files, {
        "model": kind.value,
        "config": asdict(config),
        "seed": config.seed,
        "training_time_hours": hours,
        "epoch_losses": result.epoch_losses,
        "outputs": {"model": args.out},
    })
    return 0


def cmd_evaluate(args):
    ds, files = _dataset(args)
    policies = _policies(args.policies)
    extra = {"policies": [str(p) for p in policies]}
    if args.external:
        if not Path(args.external).is_file():
            raise InputError(f"external ranking file not found: {args.external}")
        results = {}
        for p in policies:
            try:
                results[p] = ingest_external_rankings(args.external, ds, p)
            except ExternalRankingError as exc:
                raise InputError(str(exc)) from None
        extra["external"] = {"path": args.external, "sha256": _digest(args.external)}
    else:
        if not args.model or not Path(args.model).is_file():
            raise InputError(f"model file not found: {args.model}")
        try:
            params = load_model(args.model)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        if (params.num_entities, params.num_relations) != (ds.num_entities, ds.num_relations):
            raise InputError(
                f"vocabulary mismatch: dataset has {ds.num_entities} entities and "
                f"{ds.num_relations} relations, model file has {params.num_entities} and "
                f"{params.num_relations}")
        triples = ds.valid if args.split == "valid" else ds.test
        results = evaluate(params, ds, policies, triples=triples, threads=_threads(args))
        extra["model"] = {"path": args.model, "sha256": _digest(args.model)}
        ms = next(iter(results.values())).prediction_time_ms
        extra["prediction_time_ms"] = ms
        print(f"prediction time: {ms:.4f} ms per test fact (head + tail)")
    print_metrics(results)
    first = results[policies[0]]
    diag = tie_diagnostics(first.records)
    print(f"ties: {100 * diag['tied_fraction']:.2f}% of predictions, "
          f"mean {diag['mean_ties']:.3f} tied candidates")
    if args.export:
        write_predictions(first.records, ds, args.export)
        print(f"{len(first.records)} predictions written to {args.export}")
    extra.update(metrics=_metrics_json(results), tie_diagnostics=diag,
                 outputs={"predictions": args.export})
    manifest = args.manifest or f"{args.export or args.model or args.external}.eval.manifest.json"
    _write_manifest(manifest, "evaluate", args, files, extra)
    return 0


def cmd_analyze_peers(args):
    from kglp.analysis import peer_features, write_feature_file

    ds, files = _dataset(args)
    triples = ds.valid if args.split == "valid" else ds.test
    rows = peer_features(ds, triples)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_feature_file(out / "peers_source.csv", ds, [(t, d, s) for t, d, s, _ in rows])
    write_feature_file(out / "peers_target.csv", ds, [(t, d, g) for t, d, _, g in rows])
    print(f"peer features for {len(rows)} predictions written to {out}")
    _write_manifest(args.manifest or out / "peers.manifest.json", "analyze peers", args, files,
                    {"outputs": [str(out / "peers_source.csv"), str(out / "peers_target.csv")]})
    return 0


def cmd_analyze_rps(args):
    from kglp.analysis import build_rps_index, rps, rps_scorer, write_feature_file

    ds, files = _dataset(args)
    if not 1 <= args.max_len <= 3:
        raise InputError("--max-len must be 1, 2 or 3")
    start = time.monotonic()
    index = build_rps_index(ds, args.max_len)
    logger.info("RPS index built in %.2fs (%d paths)", time.monotonic() - start, len(index.df))
    triples = ds.valid if args.split == "valid" else ds.test
    extra = {"max_len": args.max_len, "seed": args.seed}
    if args.as_model:
        if args.sample and args.sample < len(triples):
            rng = np.random.default_rng(args.seed)
            triples = triples[np.sort(rng.choice(len(triples), args.sample, replace=False))]
        policies = _policies(args.policies)
        results = evaluate(None, ds, policies, triples=triples, scorer=rps_scorer(index, ds),
                           threads=_threads(args))
        print_metrics(results)
        if args.export:
            write_predictions(results[policies[0]].records, ds, args.export)
        extra.update(metrics=_metrics_json(results), sample=len(triples),
                     prediction_time_ms=next(iter(results.values())).prediction_time_ms)
    if args.out:
        rows = []
        for tr in triples:
            value = rps(index, ds, tr)
            key = tuple(int(x) for x in tr)
            rows.extend((key, d, value) for d in ("head", "tail"))
        write_feature_file(args.out, ds, rows)
        print(f"RPS (max length {args.max_len}) for {len(triples)} facts written to {args.out}")
    if not args.out and not args.as_model:
        raise InputError("nothing to do: give --out and/or --as-model")
    target = args.manifest or f"{args.out or args.export or 'rps'}.manifest.json"
    extra["outputs"] = {"features": args.out, "predictions": args.export}
    _write_manifest(target, "analyze rps", args, files, extra)
    return 0


def cmd_analyze_relprops(args):
    import csv

    from kglp.analysis import PROPERTIES, detect_relation_properties, group_report

    ds, files = _dataset(args)
    if not 0 <= args.tolerance <= 1:
        raise InputError("--tolerance must lie in [0, 1]")
    profiles = detect_relation_properties(ds, args.tolerance)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["relation", "num_facts", *PROPERTIES, "properties"])
        for r, prof in profiles.items():
            w.writerow([ds.relations[r], prof.num_facts,
                        *(repr(prof.ratios[p]) for p in PROPERTIES),
                        ";".join(p for p in PROPERTIES if p in prof.properties)])
    print(f"properties of {len(profiles)} relations written to {args.out}")
    outputs = {"relprops": args.out}
    if args.predictions:
        records = read_predictions(args.predictions, ds)
        groups = [sorted(profiles[rec.triple[1]].properties) if rec.triple[1] in profiles else []
                  for rec in records]
        report = group_report(records, groups)
        report_path = args.report or f"{args.out}.report.csv"
        report.write_csv(report_path)
        outputs["report"] = report_path
        print(f"per-property report written to {report_path}")
    _write_manifest(args.manifest or f"{args.out}.manifest.json", "analyze relprops", args, files,
                    {"tolerance": args.tolerance, "outputs": outputs})
    return 0


def _parse_edges(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad --edges value {text!r}") from None


def cmd_analyze_buckets(args):
    from kglp.analysis import bucket_report, join_feature, log_edges, read_feature_file
    from kglp.analysis.buckets import JoinError

    ds, files = _dataset(args)
    feature_path = Path(args.feature)
    if not feature_path.is_file():
        feature_path = Path(args.features_dir) / f"{args.feature}.csv"
    if not feature_path.is_file():
        raise InputError(f"feature file not found: {args.feature}")
    if not Path(args.predictions).is_file():
        raise InputError(f"predictions file not found: {args.predictions}")
    records = read_predictions(args.predictions, ds)
    try:
        values = join_feature(records, read_feature_file(feature_path, ds), ds)
    except JoinError as exc:
        raise InputError(str(exc)) from None
    if args.edges:
        edges = _parse_edges(args.edges)
    else:
        edges = log_edges(max(values) if values else 0)
        if args.mode == "disjoint":
            edges.append(math.inf)
    report = bucket_report(records, values, args.mode, edges)
    report.write_csv(args.out)
    print(f"{len(report.buckets)} buckets over {report.total} predictions written to {args.out}")
    _write_manifest(args.manifest or f"{args.out}.manifest.json", "analyze buckets", args, files,
                    {"feature": str(feature_path), "mode": args.mode, "edges": edges,
                     "outputs": {"report": args.out}})
    return 0


def _add_dataset_args(p):
    p.add_argument("--dataset", required=True, help="directory with the split files")
    p.add_argument("--train-file", default="train.txt")
    p.add_argument("--valid-file", default="valid.txt")
    p.add_argument("--test-file", default="test.txt")
    p.add_argument("--manifest", help="where to write the run manifest (JSON)")


def _add_eval_args(p):
    p.add_argument("--policies", default="average",
                   help="comma-separated tie policies: min,average,random[:seed],ordinal,max")
    p.add_argument("--threads", type=int, help="evaluation threads (env KGLP_THREADS)")
    p.add_argument("--export", help="write per-prediction CSV here")
    p.add_argument("--split", choices=("test", "valid"), default="test")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kglp", description="Train, evaluate and analyse knowledge-graph link prediction models.")
    parser.add_argument("--version", action="version", version=f"kglp {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an embedding model")
    _add_dataset_args(p)
    p.add_argument("--model", required=True, choices=[k.value for k in ModelKind])
    p.add_argument("--config", help="key=value training configuration file")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--log-every", type=int, default=0)
    for f in fields(TrainConfig):
        flag = "--" + f.name.replace("_", "-")
        typ = {int: int, float: float}.get(f.type, str)
        p.add_argument(flag, dest=f.name, type=typ, default=None,
                       help=f"override config '{f.name}'")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="rank test facts and report metrics")
    _add_dataset_args(p)
    p.add_argument("--model", help="model file written by 'train'")
    p.add_argument("--external", help="top-k ranking file from an external system")
    _add_eval_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="structural features and bucketed reports")
    asub = p.add_subparsers(dest="analysis", required=True)

    q = asub.add_parser("peers", help="source/target peer counts per prediction")
    _add_dataset_args(q)
    q.add_argument("--out-dir", default=".")
    q.add_argument("--split", choices=("test", "valid"), default="test")
    q.set_defaults(func=cmd_analyze_peers)

    q = asub.add_parser("rps", help="relational path support")
    _add_dataset_args(q)
    q.add_argument("--max-len", type=int, default=3)
    q.add_argument("--out", help="feature CSV to write")
    q.add_argument("--as-model", action="store_true", help="rank candidates by RPS")
    q.add_argument("--sample", type=int, default=0, help="evaluate on a random sample of facts")
    q.add_argument("--seed", type=int, default=0)
    _add_eval_args(q)
    q.set_defaults(func=cmd_analyze_rps)

    q = asub.add_parser("relprops", help="relation properties with tolerance")
    _add_dataset_args(q)
    q.add_argument("--tolerance", type=float, default=0.5)
    q.add_argument("--out", required=True)
    q.add_argument("--predictions", help="prediction CSV to group by property")
    q.add_argument("--report", help="group report CSV path")
    q.set_defaults(func=cmd_analyze_relprops)

    q = asub.add_parser("buckets", help="join a feature with predictions into a report")
    _add_dataset_args(q)
    q.add_argument("--predictions", required=True)
    q.add_argument("--feature", required=True, help="feature CSV path or name in --features-dir")
    q.add_argument("--features-dir", default=".")
    q.add_argument("--mode", choices=("cumulative", "disjoint"), default="cumulative")
    q.add_argument("--edges", help="comma-separated bucket edges (inf allowed)")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_analyze_buckets)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, FileNotFoundError, TripleFormatError, DisjointnessError) as exc:
        print(f"kglp: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        logger.debug("failure", exc_info=True)
        print(f"kglp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
