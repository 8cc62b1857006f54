"""Relational-path enumeration over the training graph.

A relational path is a sequence of up to three relation tokens. Token
``2*r`` traverses an edge of relation ``r`` head-to-tail, token ``2*r + 1``
traverses it backwards (rendered with an ``INV.`` prefix). Paths are packed
into one int64 code, least-significant step first, with base ``2|R| + 1``.
"""

import numpy as np

from kglp import kernels

INV_PREFIX = "INV."
MAX_PATH_LENGTH = 3


class PathGraph:
    """Bidirectional CSR adjacency over the training triples.

    Each row is sorted by neighbour id so the compiled kernel can binary-search
    the last hop. Edge ids are positions in ``dataset.train``.
    """

    def __init__(self, dataset, backend=None):
        self.dataset = dataset
        self.backend = backend or kernels.backend
        self.num_relations = dataset.num_relations
        self.base = 2 * dataset.num_relations + 1
        train = dataset.train
        n = dataset.num_entities
        m = len(train)
        eids = np.arange(m, dtype=np.int64)
        src = np.concatenate([train[:, 0], train[:, 2]])
        nbr = np.concatenate([train[:, 2], train[:, 0]])
        tok = np.concatenate([2 * train[:, 1], 2 * train[:, 1] + 1])
        eid = np.concatenate([eids, eids])
        order = np.lexsort((eid, tok, nbr, src))
        self.nbr = np.ascontiguousarray(nbr[order], dtype=np.int64)
        self.tok = np.ascontiguousarray(tok[order], dtype=np.int64)
        self.eid = np.ascontiguousarray(eid[order], dtype=np.int64)
        counts = np.bincount(src, minlength=n) if m else np.zeros(n, dtype=np.int64)
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.indptr[1:])
        self._edge_ids = {tuple(int(x) for x in tr): i for i, tr in enumerate(train)}

    def edge_id(self, triple):
        """Position of ``triple`` in the training split, or -1."""
        return self._edge_ids.get(tuple(int(x) for x in triple), -1)

    def paths(self, source, target, max_len=MAX_PATH_LENGTH, exclude=-1):
        """Sorted unique path codes connecting ``source`` to ``target``."""
        _check_len(max_len)
        codes = self.backend.paths_between(self.indptr, self.nbr, self.tok, self.eid,
                                           int(source), int(target), int(max_len),
                                           int(exclude), self.base)
        return np.unique(codes)

    def walks(self, source, max_len=MAX_PATH_LENGTH, exclude=-1):
        """Unique ``(end, code)`` pairs for all walks from ``source``, sorted by end then code."""
        _check_len(max_len)
        ends, codes = self.backend.walks_from(self.indptr, self.nbr, self.tok, self.eid,
                                              int(source), int(max_len), int(exclude), self.base)
        return _unique_pairs(ends, codes)

    def decode(self, code):
        tokens = []
        code = int(code)
        while code:
            code, digit = divmod(code, self.base)
            tokens.append(digit - 1)
        return tokens

    def encode(self, tokens):
        code = 0
        for k, token in enumerate(tokens):
            code += (token + 1) * self.base ** k
        return code

    def reverse(self, code):
        """Code of the same walk traversed from its end back to its start."""
        return self.encode([t ^ 1 for t in reversed(self.decode(code))])

    def label(self, code):
        rels = self.dataset.relations
        return tuple((INV_PREFIX if t & 1 else "") + rels[t >> 1] for t in self.decode(code))


def _check_len(max_len):
    if not 1 <= max_len <= MAX_PATH_LENGTH:
        raise ValueError(f"max_len must be between 1 and {MAX_PATH_LENGTH}, got {max_len}")


def _unique_pairs(ends, codes):
    if len(ends) == 0:
        return ends, codes
    order = np.lexsort((codes, ends))
    ends, codes = ends[order], codes[order]
    keep = np.ones(len(ends), dtype=bool)
    keep[1:] = (ends[1:] != ends[:-1]) | (codes[1:] != codes[:-1])
    return ends[keep], codes[keep]


def enumerate_relational_paths(dataset, head, tail, max_len=MAX_PATH_LENGTH, exclude=None,
                               graph=None):
    """Distinct relational paths from ``head`` to ``tail`` as tuples of tokens.

    ``exclude`` is a triple whose edge may not be used in either direction.
    """
    graph = graph or PathGraph(dataset)
    excluded = graph.edge_id(exclude) if exclude is not None else -1
    return {graph.label(c) for c in graph.paths(head, tail, max_len, excluded)}
