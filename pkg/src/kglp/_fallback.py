"""Pure-Python/numpy implementations of the hot kernels.

Every function here mirrors one in ``_kernels.pyx`` with the same signature
and the same floating-point operation order, so both backends produce
bit-identical results. Sums are accumulated column by column (sequentially
over the embedding dimension) instead of with ``ndarray.sum`` for that reason.
"""

import numpy as np

TRANSE, DISTMULT, COMPLEX, SIMPLE, HOLE, ROTATE = range(6)


def score_candidates(kind, source, relation, candidates, tail, norm_p, dim):
    """Score ``source`` against every row of ``candidates``.

    ``tail=True`` means candidates fill the tail slot, otherwise the head.
    ``relation`` is the effective relation row (RotatE: cosines then sines).
    """
    n = candidates.shape[0]
    acc = np.zeros(n, dtype=np.float64)
    src = [float(x) for x in source]
    rel = [float(x) for x in relation]

    def h(i):
        return src[i] if tail else candidates[:, i]

    def t(i):
        return candidates[:, i] if tail else src[i]

    d = dim
    if kind == TRANSE:
        for i in range(d):
            v = (h(i) + rel[i]) - t(i)
            acc = acc + (np.abs(v) if norm_p == 1 else v * v)
        out = -acc if norm_p == 1 else -np.sqrt(acc)
    elif kind == DISTMULT:
        for i in range(d):
            acc = acc + (h(i) * t(i)) * rel[i]
        out = acc
    elif kind == COMPLEX:
        for i in range(d):
            a, b = h(i), h(d + i)
            c, dd = rel[i], rel[d + i]
            e, f = t(i), t(d + i)
            acc = acc + (((a * c) - (b * dd)) * e + ((a * dd) + (b * c)) * f)
        out = acc
    elif kind == SIMPLE:
        acc2 = np.zeros(n, dtype=np.float64)
        for i in range(d):
            acc = acc + (h(i) * rel[i]) * t(d + i)
            acc2 = acc2 + (t(i) * rel[d + i]) * h(d + i)
        out = 0.5 * (acc + acc2)
    elif kind == HOLE:
        for k in range(d):
            c = np.zeros(n, dtype=np.float64)
            for i in range(d):
                c = c + h(i) * t((i + k) % d)
            acc = acc + rel[k] * c
        out = acc
    elif kind == ROTATE:
        for i in range(d):
            a, b = h(i), h(d + i)
            cs, sn = rel[i], rel[d + i]
            e, f = t(i), t(d + i)
            u = ((a * cs) - (b * sn)) - e
            v = ((a * sn) + (b * cs)) - f
            acc = acc + np.sqrt(u * u + v * v)
        out = -acc
    else:
        raise ValueError(f"unknown model kind code {kind}")
    return np.asarray(out, dtype=np.float64).reshape(n)


def rank_counts(scores, target, filtered):
    """Counts needed by every tie policy, in one pass.

    Returns ``(greater, ties, ties_below)`` for the raw scenario followed by
    the same three for the filtered one. Ties exclude the target itself and
    ``ties_below`` counts tied entities with a smaller id than the target.
    """
    scores = np.asarray(scores, dtype=np.float64)
    st = scores[target]
    gt = scores > st
    eq = scores == st
    eq[target] = False
    below = np.zeros_like(eq)
    below[:target] = eq[:target]
    g, t, b = int(gt.sum()), int(eq.sum()), int(below.sum())
    if filtered is None:
        return g, t, b, g, t, b
    keep = ~np.asarray(filtered, dtype=bool)
    return (g, t, b,
            int((gt & keep).sum()), int((eq & keep).sum()), int((below & keep).sum()))


def _steps(indptr, nbr, tok, eid, node):
    for j in range(indptr[node], indptr[node + 1]):
        yield nbr[j], tok[j], eid[j]


def paths_between(indptr, nbr, tok, eid, source, target, max_len, excluded, base):
    """Codes of all walks of 1..max_len edges from ``source`` to ``target``.

    Consecutive steps never reuse the same edge and ``excluded`` is never used.
    Duplicate codes are returned as found; callers deduplicate.
    """
    indptr, nbr, tok, eid = (np.asarray(a).tolist() for a in (indptr, nbr, tok, eid))
    out = []
    for n1, k1, e1 in _steps(indptr, nbr, tok, eid, source):
        if e1 == excluded:
            continue
        c1 = k1 + 1
        if n1 == target:
            out.append(c1)
        if max_len < 2:
            continue
        for n2, k2, e2 in _steps(indptr, nbr, tok, eid, n1):
            if e2 == excluded or e2 == e1:
                continue
            c2 = c1 + (k2 + 1) * base
            if n2 == target:
                out.append(c2)
            if max_len < 3:
                continue
            for n3, k3, e3 in _steps(indptr, nbr, tok, eid, n2):
                if n3 != target or e3 == excluded or e3 == e2:
                    continue
                out.append(c2 + (k3 + 1) * base * base)
    return np.asarray(out, dtype=np.int64)


def walks_from(indptr, nbr, tok, eid, source, max_len, excluded, base):
    """End entities and codes of every walk of 1..max_len edges from ``source``."""
    indptr, nbr, tok, eid = (np.asarray(a).tolist() for a in (indptr, nbr, tok, eid))
    ends, codes = [], []
    for n1, k1, e1 in _steps(indptr, nbr, tok, eid, source):
        if e1 == excluded:
            continue
        c1 = k1 + 1
        ends.append(n1)
        codes.append(c1)
        if max_len < 2:
            continue
        for n2, k2, e2 in _steps(indptr, nbr, tok, eid, n1):
            if e2 == excluded or e2 == e1:
                continue
            c2 = c1 + (k2 + 1) * base
            ends.append(n2)
            codes.append(c2)
            if max_len < 3:
                continue
            for n3, k3, e3 in _steps(indptr, nbr, tok, eid, n2):
                if e3 == excluded or e3 == e2:
                    continue
                ends.append(n3)
                codes.append(c2 + (k3 + 1) * base * base)
    return np.asarray(ends, dtype=np.int64), np.asarray(codes, dtype=np.int64)
