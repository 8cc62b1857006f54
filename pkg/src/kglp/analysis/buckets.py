"""Bucketed H@1/MRR reports over a per-prediction feature, plus feature files."""

import csv
import math
from dataclasses import dataclass

import numpy as np

FEATURE_HEADER = ["head", "relation", "tail", "direction", "value"]
REPORT_HEADER = ["edge", "count", "coverage_pct", "h1", "mrr"]


@dataclass(frozen=True)
class Bucket:
    edge: object
    count: int
    coverage_pct: float
    h1: float
    mrr: float


@dataclass
class BucketReport:
    mode: str
    buckets: list
    total: int

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_HEADER)
            for b in self.buckets:
                w.writerow([b.edge, b.count, repr(b.coverage_pct), repr(b.h1), repr(b.mrr)])


def _bucket(edge, ranks, total):
    n = len(ranks)
    if n == 0:
        return Bucket(edge, 0, 0.0, math.nan, math.nan)
    return Bucket(edge, n, 100.0 * n / total,
                  sum(1 for q in ranks if q <= 1) / n,
                  math.fsum(1.0 / q for q in ranks) / n)


def _ranks(records, scenario):
    attr = "filtered_rank" if scenario == "filtered" else "raw_rank"
    return np.array([getattr(r, attr) for r in records], dtype=np.float64)


def bucket_report(records, feature, mode="cumulative", edges=None, scenario="filtered"):
    """Aggregate H@1 and MRR by feature value.

    ``cumulative``: one bucket per edge ``x`` holding every record with
    feature <= x. ``disjoint``: buckets ``[edges[i], edges[i+1])``, labelled
    by their lower edge.
    """
    feature = np.asarray(feature, dtype=np.float64)
    if len(feature) != len(records):
        raise ValueError(f"{len(feature)} feature values for {len(records)} records")
    if mode not in ("cumulative", "disjoint"):
        raise ValueError(f"mode must be 'cumulative' or 'disjoint', not {mode!r}")
    if edges is None:
        edges = log_edges(feature.max() if len(feature) else 0)
    edges = list(edges)
    ranks = _ranks(records, scenario)
    total = len(records)
    buckets = []
    if mode == "cumulative":
        for x in edges:
            buckets.append(_bucket(x, ranks[feature <= x].tolist(), total))
    else:
        for lo, hi in zip(edges[:-1], edges[1:]):
            sel = (feature >= lo) & (feature < hi)
            buckets.append(_bucket(lo, ranks[sel].tolist(), total))
    return BucketReport(mode, buckets, total)


def group_report(records, groups, scenario="filtered"):
    """Report over possibly overlapping labelled groups (e.g. relation properties).

    ``groups`` gives, per record, the iterable of labels it belongs to.
    """
    if len(groups) != len(records):
        raise ValueError(f"{len(groups)} group entries for {len(records)} records")
    ranks = _ranks(records, scenario)
    members = {}
    for i, labels in enumerate(groups):
        for label in labels:
            members.setdefault(label, []).append(i)
    buckets = [_bucket(label, ranks[idx].tolist(), len(records))
               for label, idx in sorted(members.items())]
    return BucketReport("groups", buckets, len(records))


def log_edges(max_value):
    """``0, 1, 2, 4, 8, ...`` up to the first power of two >= ``max_value``."""
    edges = [0, 1]
    while edges[-1] < max_value:
        edges.append(edges[-1] * 2)
    return edges


def write_feature_file(path, dataset, rows):
    """``rows`` are ``(triple_ids, direction, value)``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURE_HEADER)
        for triple, direction, value in rows:
            w.writerow([*dataset.decode(triple), direction, repr(float(value))])


def read_feature_file(path, dataset):
    values = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(FEATURE_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            ids = dataset.encode([(row["head"], row["relation"], row["tail"])])[0]
            values[(tuple(int(x) for x in ids), row["direction"])] = float(row["value"])
    return values


class JoinError(ValueError):
    pass


def join_feature(records, values, dataset=None):
    """Feature value per record; raises :class:`JoinError` naming unmatched predictions."""
    out, missing = [], []
    for rec in records:
        key = (tuple(rec.triple), rec.direction)
        if key in values:
            out.append(values[key])
        else:
            missing.append(key)
    if missing:
        shown = [(dataset.decode(k[0]) if dataset else k[0], k[1]) for k in missing[:10]]
        raise JoinError(f"{len(missing)} predictions have no feature value, e.g. {shown}")
    return out
