"""Scoring functions, their gradients, and embedding stores.

Six shallow models are supported. Every score is "higher is better":
distance-based models (TransE, RotatE) return the negated distance.

Row layouts (``d`` is the model dimension):

==========  =====================  =========================
kind        entity row             relation row
==========  =====================  =========================
TransE      ``d`` reals            ``d`` reals
DistMult    ``d`` reals            ``d`` reals
ComplEx     ``[re(d), im(d)]``     ``[re(d), im(d)]``
SimplE      ``[e_h(d), e_t(d)]``   ``[r(d), r_inv(d)]``
HolE        ``d`` reals            ``d`` reals
RotatE      ``[re(d), im(d)]``     ``d`` phases
==========  =====================  =========================
"""

import enum
from dataclasses import dataclass

import numpy as np

from kglp import kernels


class ModelKind(enum.Enum):
    TRANSE = "transe"
    DISTMULT = "distmult"
    COMPLEX = "complex"
    SIMPLE = "simple"
    HOLE = "hole"
    ROTATE = "rotate"

    @classmethod
    def parse(cls, name):
        try:
            return cls(str(name).lower())
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown model kind {name!r} (choose from {choices})") from None

    @property
    def code(self):
        return _CODES[self]

    @property
    def entity_width_factor(self):
        return 2 if self in (ModelKind.COMPLEX, ModelKind.SIMPLE, ModelKind.ROTATE) else 1

    @property
    def relation_width_factor(self):
        return 2 if self in (ModelKind.COMPLEX, ModelKind.SIMPLE) else 1


_CODES = {
    ModelKind.TRANSE: 0,
    ModelKind.DISTMULT: 1,
    ModelKind.COMPLEX: 2,
    ModelKind.SIMPLE: 3,
    ModelKind.HOLE: 4,
    ModelKind.ROTATE: 5,
}


class DivergenceError(FloatingPointError):
    """A score or loss became non-finite."""


@dataclass
class ModelParams:
    kind: ModelKind
    dim: int
    entities: np.ndarray
    relations: np.ndarray
    norm_p: int = 2
    seed: int = 0

    @property
    def num_entities(self):
        return self.entities.shape[0]

    @property
    def num_relations(self):
        return self.relations.shape[0]

    def effective_relation(self, r):
        """Relation row as consumed by the kernels (RotatE: cosines then sines)."""
        row = self.relations[r]
        if self.kind is ModelKind.ROTATE:
            return np.concatenate([np.cos(row), np.sin(row)])
        return np.ascontiguousarray(row)

    def copy(self):
        return ModelParams(self.kind, self.dim, self.entities.copy(), self.relations.copy(),
                           self.norm_p, self.seed)


def init_params(kind, num_entities, num_relations, dim, seed=0, norm_p=2):
    kind = ModelKind.parse(kind) if not isinstance(kind, ModelKind) else kind
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    if num_entities < 1 or num_relations < 1:
        raise ValueError("need at least one entity and one relation")
    if norm_p not in (1, 2):
        raise ValueError("norm_p must be 1 or 2")
    rng = np.random.default_rng(seed)
    bound = 6.0 / np.sqrt(dim)
    ent = rng.uniform(-bound, bound, size=(num_entities, dim * kind.entity_width_factor))
    if kind is ModelKind.ROTATE:
        rel = rng.uniform(-np.pi, np.pi, size=(num_relations, dim))
    else:
        rel = rng.uniform(-bound, bound, size=(num_relations, dim * kind.relation_width_factor))
    return ModelParams(kind, dim, ent, rel, norm_p, seed)


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise DivergenceError("non-finite score: the embeddings have diverged")
    return values


def score(params, h, r, t, backend=None):
    """Plausibility of ``(h, r, t)``; bit-identical to the matching ``score_all`` entry."""
    k = backend or kernels.backend
    ent = params.entities
    out = k.score_candidates(params.kind.code, np.ascontiguousarray(ent[h]),
                             params.effective_relation(r), ent[t:t + 1], True,
                             params.norm_p, params.dim)
    return float(_check_finite(out)[0])


def score_all(params, source, r, direction, backend=None):
    """Scores of every entity completing ``(source, r, ?)`` or ``(?, r, source)``."""
    if direction not in ("head", "tail"):
        raise ValueError(f"direction must be 'head' or 'tail', not {direction!r}")
    k = backend or kernels.backend
    ent = params.entities
    out = k.score_candidates(params.kind.code, np.ascontiguousarray(ent[source]),
                             params.effective_relation(r), np.ascontiguousarray(ent),
                             direction == "tail", params.norm_p, params.dim)
    return _check_finite(out)


def circular_correlation(a, b):
    """``(a * b)_k = sum_i a_i b_{(i+k) mod d}``, computed through the FFT."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return np.fft.irfft(np.conj(np.fft.rfft(a)) * np.fft.rfft(b), n=a.shape[-1])


def _hole_index(d):
    i = np.arange(d)
    return (i[:, None] + i[None, :]) % d, (i[:, None] - i[None, :]) % d


def score_and_grad(kind, norm_p, dim, H, R, T):
    """Vectorised scores and their gradients for a batch of rows.

    ``H``, ``R``, ``T`` are ``(B, width)`` arrays of raw stored rows. Returns
    ``(scores, dH, dR, dT)`` with gradients of each score w.r.t. its own rows.
    Used by training; evaluation goes through :func:`score_all`.
    """
    d = dim
    if kind is ModelKind.TRANSE:
        v = H + R - T
        if norm_p == 1:
            s = -np.abs(v).sum(axis=1)
            g = -np.sign(v)
        else:
            n = np.sqrt((v * v).sum(axis=1))
            s = -n
            safe = np.where(n > 0, n, 1.0)
            g = -v / safe[:, None]
            g[n == 0] = 0.0
        return s, g, g.copy(), -g
    if kind is ModelKind.DISTMULT:
        return (H * R * T).sum(axis=1), R * T, H * T, H * R
    if kind is ModelKind.COMPLEX:
        a, b = H[:, :d], H[:, d:]
        c, e_ = R[:, :d], R[:, d:]
        x, y = T[:, :d], T[:, d:]
        s = ((a * c - b * e_) * x + (a * e_ + b * c) * y).sum(axis=1)
        dH = np.concatenate([c * x + e_ * y, -e_ * x + c * y], axis=1)
        dR = np.concatenate([a * x + b * y, -b * x + a * y], axis=1)
        dT = np.concatenate([a * c - b * e_, a * e_ + b * c], axis=1)
        return s, dH, dR, dT
    if kind is ModelKind.SIMPLE:
        hh, ht = H[:, :d], H[:, d:]
        th, tt = T[:, :d], T[:, d:]
        r, ri = R[:, :d], R[:, d:]
        s = 0.5 * ((hh * r * tt).sum(axis=1) + (th * ri * ht).sum(axis=1))
        dH = 0.5 * np.concatenate([r * tt, th * ri], axis=1)
        dR = 0.5 * np.concatenate([hh * tt, th * ht], axis=1)
        dT = 0.5 * np.concatenate([ri * ht, hh * r], axis=1)
        return s, dH, dR, dT
    if kind is ModelKind.HOLE:
        plus, minus = _hole_index(d)
        Tm = T[:, plus]  # [b, i, k] = t_{(i+k) mod d}
        corr = np.einsum("bi,bik->bk", H, Tm)
        s = (R * corr).sum(axis=1)
        dH = np.einsum("bk,bik->bi", R, Tm)
        dT = np.einsum("bk,bjk->bj", R, H[:, minus])
        return s, dH, corr, dT
    if kind is ModelKind.ROTATE:
        a, b = H[:, :d], H[:, d:]
        x, y = T[:, :d], T[:, d:]
        cs, sn = np.cos(R), np.sin(R)
        u = a * cs - b * sn - x
        w = a * sn + b * cs - y
        m = np.sqrt(u * u + w * w)
        s = -m.sum(axis=1)
        safe = np.where(m > 0, m, 1.0)
        gu = np.where(m > 0, -u / safe, 0.0)
        gw = np.where(m > 0, -w / safe, 0.0)
        dH = np.concatenate([gu * cs + gw * sn, -gu * sn + gw * cs], axis=1)
        dR = gu * (-a * sn - b * cs) + gw * (a * cs - b * sn)
        dT = np.concatenate([-gu, -gw], axis=1)
        return s, dH, dR, dT
    raise ValueError(f"unsupported model kind {kind}")


def save_model(params, path):
    """Write the plain-text model file; reals use 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{params.kind.value} {params.dim} {params.dim} {params.num_entities} "
                 f"{params.num_relations} {params.norm_p} {params.seed}\n")
        for store in (params.entities, params.relations):
            for row in store:
                fh.write(" ".join(format(float(x), ".17g") for x in row))
                fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 7:
            raise ValueError(f"{path}: malformed model header {' '.join(header)!r}")
        kind = ModelKind.parse(header[0])
        d_e, d_r, n_e, n_r, norm_p, seed = (int(x) for x in header[1:])
        rows = [line.split() for line in fh if line.strip()]
    if len(rows) != n_e + n_r:
        raise ValueError(f"{path}: expected {n_e + n_r} rows, found {len(rows)}")
    ent = np.array(rows[:n_e], dtype=np.float64).reshape(n_e, d_e * kind.entity_width_factor)
    rel = np.array(rows[n_e:], dtype=np.float64).reshape(n_r, d_r * kind.relation_width_factor)
    return ModelParams(kind, d_e, ent, rel, norm_p, seed)
