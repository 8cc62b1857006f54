"""Relational Path Support: TF-IDF similarity between a fact's connecting
paths and the paths typical of its relation.

Relations are documents and relational paths are words. A training fact
contributes each distinct path connecting its head to its tail (its own edge
excluded) once to its relation's document. A query fact is scored by the
cosine between its own TF-IDF vector, computed as if it were one more
document, and its relation's vector. Logarithms are base 10.
"""

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from kglp.analysis.paths import MAX_PATH_LENGTH, PathGraph


@dataclass
class RpsIndex:
    graph: PathGraph
    max_len: int
    num_documents: int
    fact_counts: np.ndarray
    path_counts: dict
    df: dict
    tf: dict
    idf: dict
    tfidf: dict
    norms: np.ndarray

    @property
    def vocabulary(self):
        return sorted(self.df)

    def tfidf_of(self, relation, path):
        """TF-IDF weight of a path (label tuple or code) in a relation's document."""
        code = path if isinstance(path, (int, np.integer)) else self._code(path)
        return self.tfidf.get(int(relation), {}).get(code, 0.0)

    def _code(self, labels):
        tokens = []
        for label in labels:
            inv = label.startswith("INV.")
            r = self.graph.dataset.relation_id(label[4:] if inv else label)
            tokens.append(2 * r + int(inv))
        return self.graph.encode(tokens)

    def query_idf(self, code):
        return math.log10((self.num_documents + 1) / (self.df.get(code, 0) + 1))


def build_rps_index(dataset, max_len=MAX_PATH_LENGTH, graph=None):
    graph = graph or PathGraph(dataset)
    num_rel = dataset.num_relations
    fact_counts = np.bincount(dataset.train[:, 1], minlength=num_rel) if len(dataset.train) \
        else np.zeros(num_rel, dtype=np.int64)
    path_counts = {}
    for k, (h, r, t) in enumerate(dataset.train):
        codes = graph.paths(h, t, max_len, exclude=k)
        if len(codes):
            path_counts.setdefault(int(r), Counter()).update(codes.tolist())

    df = Counter()
    for r, counts in path_counts.items():
        for code, n in counts.items():
            if n > fact_counts[r]:
                raise AssertionError(f"relation {r}: path count {n} exceeds fact count")
            df[code] += 1

    idf = {code: math.log10(num_rel / n) for code, n in df.items()}
    tf, tfidf = {}, {}
    norms = np.zeros(num_rel)
    for r, counts in path_counts.items():
        total = sum(counts.values())
        tf[r] = {code: n / total for code, n in counts.items()}
        tfidf[r] = {code: w * idf[code] for code, w in tf[r].items()}
        norms[r] = math.sqrt(math.fsum(v * v for v in tfidf[r].values()))
    return RpsIndex(graph, max_len, num_rel, fact_counts, path_counts, dict(df), tf, idf, tfidf,
                    norms)


def _group_scores(index, relation, ends, codes, size):
    """Cosine per end entity; ``codes`` must be sorted within each end."""
    out = np.zeros(size)
    rnorm = index.norms[int(relation)] if int(relation) < len(index.norms) else 0.0
    if len(ends) == 0 or rnorm == 0.0:
        return out
    vec = index.tfidf.get(int(relation), {})
    uniq, inv = np.unique(codes, return_inverse=True)
    qidf = np.array([index.query_idf(c) for c in uniq.tolist()])
    rel = np.array([vec.get(c, 0.0) for c in uniq.tolist()])
    dots = np.bincount(ends, weights=(qidf * rel)[inv], minlength=size)
    qnorm = np.sqrt(np.bincount(ends, weights=(qidf * qidf)[inv], minlength=size))
    ok = qnorm > 0
    out[ok] = np.minimum(dots[ok] / (qnorm[ok] * rnorm), 1.0)
    return out


def rps(index, dataset, triple, max_len=None):
    """Path support of one fact, in [0, 1]. A training fact's own edge is not used."""
    max_len = index.max_len if max_len is None else max_len
    if max_len != index.max_len:
        raise ValueError(f"index was built with max_len={index.max_len}, not {max_len}")
    h, r, t = (int(x) for x in triple)
    codes = index.graph.paths(h, t, max_len, exclude=index.graph.edge_id((h, r, t)))
    return float(_group_scores(index, r, np.zeros(len(codes), dtype=np.int64), codes, 1)[0])


def rps_score_all(index, dataset, source, relation, direction):
    """Path support of every candidate completion; usable as a ranking scorer."""
    source, relation = int(source), int(relation)
    graph = index.graph
    ends, codes = graph.walks(source, index.max_len)
    if direction == "head" and len(codes):
        flipped = {c: graph.reverse(c) for c in np.unique(codes).tolist()}
        codes = np.array([flipped[c] for c in codes.tolist()], dtype=np.int64)
        order = np.lexsort((codes, ends))
        ends, codes = ends[order], codes[order]
    elif direction not in ("head", "tail"):
        raise ValueError(f"direction must be 'head' or 'tail', not {direction!r}")
    scores = _group_scores(index, relation, ends, codes, dataset.num_entities)
    # completions that are training facts must not use their own edge
    known = dataset.train_tails if direction == "tail" else dataset.train_heads
    key = (source, relation) if direction == "tail" else (relation, source)
    for e in known.get(key, ()):
        triple = (source, relation, e) if direction == "tail" else (e, relation, source)
        scores[e] = rps(index, dataset, triple)
    return scores


def rps_scorer(index, dataset):
    def scorer(source, relation, direction):
        return rps_score_all(index, dataset, source, relation, direction)
    return scorer
