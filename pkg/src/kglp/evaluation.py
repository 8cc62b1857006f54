"""Raw/filtered ranking under tie policies, global metrics, prediction files."""

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from kglp import kernels
from kglp.data import filter_candidates
from kglp.models import score_all

POLICY_NAMES = ("min", "average", "random", "ordinal", "max")
HITS_AT = (1, 3, 5, 10)
DIRECTIONS = ("head", "tail")


@dataclass(frozen=True)
class TiePolicy:
    name: str
    seed: int = 0

    def __post_init__(self):
        if self.name not in POLICY_NAMES:
            raise ValueError(f"unknown tie policy {self.name!r} (choose from {POLICY_NAMES})")

    @classmethod
    def parse(cls, text):
        """``min``, ``average``, ``max``, ``ordinal``, ``random`` or ``random:SEED``."""
        name, _, seed = str(text).strip().lower().partition(":")
        if name == "avg":
            name = "average"
        return cls(name, int(seed) if seed else 0)

    def __str__(self):
        return f"random:{self.seed}" if self.name == "random" else self.name


MIN, AVERAGE, ORDINAL, MAX = (TiePolicy(n) for n in ("min", "average", "ordinal", "max"))
RANDOM = TiePolicy("random")


def rank_from_counts(greater, ties, ties_below, policy, rng=None):
    if policy.name == "min":
        return float(greater + 1)
    if policy.name == "max":
        return float(greater + ties + 1)
    if policy.name == "average":
        return greater + 1 + ties / 2
    if policy.name == "ordinal":
        return float(greater + 1 + ties_below)
    if rng is None:
        rng = np.random.default_rng(policy.seed)
    return float(greater + 1 + int(rng.integers(0, ties + 1)))


def _mask(n, entities):
    mask = np.zeros(n, dtype=bool)
    if entities:
        mask[np.fromiter(entities, dtype=np.int64, count=len(entities))] = True
    return mask


def compute_rank(scores, target, filtered_out=(), scenario="filtered", policy=AVERAGE, rng=None):
    """Rank of ``target`` among ``scores`` (higher is better).

    In the filtered scenario entities in ``filtered_out`` are removed before
    counting both better-scored and tied competitors.
    """
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    if scenario not in ("raw", "filtered"):
        raise ValueError(f"scenario must be 'raw' or 'filtered', not {scenario!r}")
    filtered_out = set(filtered_out)
    if target in filtered_out:
        raise ValueError(f"target {target} is among the filtered-out entities")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    mask = _mask(len(scores), filtered_out) if scenario == "filtered" else None
    counts = kernels.rank_counts(scores, int(target), mask)
    return rank_from_counts(*counts[3:], policy, rng)


@dataclass(frozen=True)
class Metrics:
    mr: float
    mrr: float
    hits: dict
    count: int

    def as_dict(self):
        out = {"MR": self.mr, "MRR": self.mrr}
        out.update({f"H@{k}": v for k, v in self.hits.items()})
        out["count"] = self.count
        return out


def metrics_from_ranks(ranks):
    ranks = [float(q) for q in ranks]
    if not ranks:
        raise ValueError("cannot compute metrics over an empty rank list")
    n = len(ranks)
    return Metrics(
        mr=math.fsum(ranks) / n,
        mrr=math.fsum(1.0 / q for q in ranks) / n,
        hits={k: sum(1 for q in ranks if q <= k) / n for k in HITS_AT},
        count=n,
    )


@dataclass
class PredictionRecord:
    triple: tuple
    direction: str
    raw_rank: float
    filtered_rank: float
    outranking: list = field(default_factory=list)
    ties: int = 0

    @property
    def target(self):
        return self.triple[0] if self.direction == "head" else self.triple[2]

    @property
    def source(self):
        return self.triple[2] if self.direction == "head" else self.triple[0]


@dataclass
class EvaluationResult:
    policy: TiePolicy
    records: list
    raw: Metrics
    filtered: Metrics
    prediction_time_ms: float = float("nan")


def _predict(scores, triple, direction, dataset, policies, index, keep_outranking):
    h, r, t = (int(x) for x in triple)
    source, target = (t, h) if direction == "head" else (h, t)
    valid = filter_candidates(dataset, source, r, direction)
    valid.discard(target)
    mask = _mask(len(scores), valid)
    g, ties, below, gf, tf, bf = kernels.rank_counts(scores, target, mask)
    outranking = []
    if keep_outranking and gf:
        better = np.flatnonzero((scores > scores[target]) & ~mask)
        better = better[np.lexsort((better, -scores[better]))]
        outranking = better.tolist()
    out = []
    for policy in policies:
        rng = None
        if policy.name == "random":
            rng = np.random.default_rng([policy.seed, index, DIRECTIONS.index(direction)])
        raw = rank_from_counts(g, ties, below, policy, rng)
        if rng is not None:
            rng = np.random.default_rng([policy.seed, index, DIRECTIONS.index(direction), 1])
        filt = rank_from_counts(gf, tf, bf, policy, rng)
        out.append(PredictionRecord((h, r, t), direction, raw, filt, outranking, tf))
    return out


def evaluate(params, dataset, policies=(AVERAGE,), triples=None, scorer=None, threads=1,
             keep_outranking=True):
    """Head and tail prediction over ``triples`` (default: the test split).

    One score vector per prediction serves every policy. ``scorer(source,
    relation, direction)`` replaces the embedding model when given (used by
    the path-support predictor). Returns ``{policy: EvaluationResult}``.
    """
    policies = [p if isinstance(p, TiePolicy) else TiePolicy.parse(p) for p in policies]
    if not policies:
        raise ValueError("at least one tie policy is required")
    triples = dataset.test if triples is None else np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    if scorer is None:
        if params.num_entities != dataset.num_entities or params.num_relations != dataset.num_relations:
            raise ValueError(
                f"model has {params.num_entities} entities/{params.num_relations} relations, "
                f"dataset expects {dataset.num_entities}/{dataset.num_relations}")

        def scorer(source, relation, direction):
            return score_all(params, source, relation, direction)

    def run(idx):
        out, elapsed = [], 0.0
        for i in idx:
            h, r, t = (int(x) for x in triples[i])
            start = time.perf_counter()
            pair = []
            for direction in DIRECTIONS:
                source = t if direction == "head" else h
                scores = np.ascontiguousarray(scorer(source, r, direction), dtype=np.float64)
                pair.append(_predict(scores, triples[i], direction, dataset, policies, i,
                                     keep_outranking))
            elapsed += time.perf_counter() - start
            out.append(pair)
        return out, elapsed

    indices = np.arange(len(triples))
    threads = max(1, int(threads or 1))
    if threads == 1 or len(indices) < 2:
        chunks = [run(indices)]
    else:
        parts = np.array_split(indices, min(threads * 4, len(indices)))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run, parts))
    per_fact = [pair for chunk, _ in chunks for pair in chunk]
    elapsed = sum(e for _, e in chunks)
    mean_ms = 1000.0 * elapsed / len(triples) if len(triples) else float("nan")

    results = {}
    for j, policy in enumerate(policies):
        records = [rec[j] for pair in per_fact for rec in pair]
        if records:
            raw = metrics_from_ranks([r.raw_rank for r in records])
            filt = metrics_from_ranks([r.filtered_rank for r in records])
        else:
            raw = filt = None
        results[policy] = EvaluationResult(policy, records, raw, filt, mean_ms)
    return results


def validation_mrr(params, dataset):
    res = evaluate(params, dataset, (AVERAGE,), triples=dataset.valid, keep_outranking=False)
    return res[AVERAGE].filtered.mrr


def tie_diagnostics(records):
    """Share of predictions whose target ties with another candidate, and mean tie size."""
    if not records:
        return {"tied_fraction": 0.0, "mean_ties": 0.0}
    ties = [r.ties for r in records]
    return {"tied_fraction": sum(1 for x in ties if x > 0) / len(ties),
            "mean_ties": math.fsum(ties) / len(ties)}


PREDICTION_HEADER = ["head", "relation", "tail", "direction", "raw_rank", "filtered_rank",
                     "outranking"]


def write_predictions(records, dataset, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTION_HEADER)
        for rec in records:
            h, r, t = dataset.decode(rec.triple)
            writer.writerow([h, r, t, rec.direction, repr(rec.raw_rank), repr(rec.filtered_rank),
                             ";".join(dataset.entities[e] for e in rec.outranking)])


def read_predictions(path, dataset):
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(PREDICTION_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            triple = tuple(int(x) for x in dataset.encode([(row["head"], row["relation"],
                                                             row["tail"])])[0])
            out = [dataset.entity_id(e) for e in row["outranking"].split(";") if e]
            records.append(PredictionRecord(triple, row["direction"], float(row["raw_rank"]),
                                            float(row["filtered_rank"]), out))
    return records


class ExternalRankingError(ValueError):
    pass


def _parse_external(path):
    blocks = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().replace(" ", "")
        if header not in ("convention=higher", "convention=lower"):
            raise ExternalRankingError(f"{path}: first line must be convention=higher|lower")
        higher = header.endswith("higher")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) == 4:
                blocks.append((tuple(parts[:3]), parts[3], [], lineno))
            elif len(parts) == 2:
                if not blocks:
                    raise ExternalRankingError(f"{path}:{lineno}: score line before any query")
                blocks[-1][2].append((parts[0], float(parts[1]), lineno))
            else:
                raise ExternalRankingError(f"{path}:{lineno}: expected 2 or 4 tab-separated fields")
    return higher, blocks


def ingest_external_rankings(path, dataset, policy=AVERAGE):
    """Rank targets from partial top-k lists; unlisted entities score 0."""
    policy = policy if isinstance(policy, TiePolicy) else TiePolicy.parse(policy)
    higher, blocks = _parse_external(path)
    records = []
    for index, (labels, direction, listed, lineno) in enumerate(blocks):
        if direction not in DIRECTIONS:
            raise ExternalRankingError(f"{path}:{lineno}: bad direction {direction!r}")
        try:
            triple = dataset.encode([labels])[0]
        except KeyError as exc:
            raise ExternalRankingError(f"{path}:{lineno}: unknown label {exc.args[0]!r}") from None
        scores = np.zeros(dataset.num_entities)
        seen = set()
        for label, value, line_no in listed:
            try:
                e = dataset.entity_id(label)
            except KeyError:
                raise ExternalRankingError(f"{path}:{line_no}: unknown entity {label!r}") from None
            if e in seen:
                raise ExternalRankingError(f"{path}:{line_no}: entity {label!r} listed twice")
            seen.add(e)
            scores[e] = value if higher else -value
        records.extend(_predict(scores, triple, direction, dataset, [policy], index, True))
    if not records:
        raise ExternalRankingError(f"{path}: no predictions found")
    return EvaluationResult(policy, records, metrics_from_ranks([r.raw_rank for r in records]),
                            metrics_from_ranks([r.filtered_rank for r in records]))
