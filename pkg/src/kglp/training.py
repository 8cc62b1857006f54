"""Negative sampling, losses with analytic gradients, optimizers, training loop."""

import logging
from dataclasses import dataclass, fields

import numpy as np

from kglp.models import DivergenceError, ModelKind, init_params, score_and_grad

logger = logging.getLogger(__name__)

LOSSES = ("margin", "logistic", "self_adversarial")
OPTIMIZERS = ("sgd", "adagrad", "adam")
SAMPLINGS = ("uniform", "bernoulli")
REGULARIZERS = ("none", "l2", "n3")
MAX_RESAMPLES = 100


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 0.01
    optimizer: str = "adam"
    loss: str = "margin"
    margin: float = 1.0
    temperature: float = 1.0
    negatives: int = 1
    sampling: str = "uniform"
    regularization: str = "none"
    reg_weight: float = 0.0
    dim: int = 100
    norm_p: int = 2
    normalize_entities: bool = True
    early_stopping: int = 0
    eval_every: int = 10
    seed: int = 0

    def __post_init__(self):
        for name in ("batch_size", "learning_rate", "margin", "temperature", "negatives", "dim",
                     "eval_every"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        for name, allowed in (("loss", LOSSES), ("optimizer", OPTIMIZERS),
                              ("sampling", SAMPLINGS), ("regularization", REGULARIZERS)):
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if self.regularization != "none" and not self.reg_weight > 0:
            raise ValueError("reg_weight must be positive when regularization is enabled")
        if self.norm_p not in (1, 2):
            raise ValueError("norm_p must be 1 or 2")

    @classmethod
    def from_mapping(cls, values):
        """Build from string values (config file or CLI), coercing to field types."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            key = key.strip().replace("-", "_")
            if key not in types:
                raise ValueError(f"unknown training option {key!r}")
            kwargs[key] = _coerce(types[key], raw)
        return cls(**kwargs)

    def updated(self, values):
        merged = {f.name: getattr(self, f.name) for f in fields(self)}
        merged.update({k.replace("-", "_"): v for k, v in values.items()})
        return TrainConfig.from_mapping(merged)


def _coerce(typ, raw):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if typ in (bool, "bool"):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if typ in (int, "int"):
        return int(raw)
    if typ in (float, "float"):
        return float(raw)
    return raw.lower()


def read_config(path):
    """Parse a ``key = value`` file; blank lines and ``#`` comments are ignored."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return TrainConfig.from_mapping(values)


def bernoulli_stats(dataset):
    """Per-relation ``(tph, hpt)`` over the training split."""
    train = dataset.train
    stats = {}
    for r in np.unique(train[:, 1]):
        facts = train[train[:, 1] == r]
        n = len(facts)
        stats[int(r)] = (n / len(np.unique(facts[:, 0])), n / len(np.unique(facts[:, 2])))
    return stats


class NegativeSampler:
    """Corrupts one side of each positive, avoiding training triples.

    The replacement is drawn uniformly from the entities other than the one
    being replaced, then redrawn (at most ``MAX_RESAMPLES`` times) while the
    corrupted triple is a training fact.
    """

    def __init__(self, dataset, strategy="uniform"):
        if strategy not in SAMPLINGS:
            raise ValueError(f"unknown sampling strategy {strategy!r}")
        if dataset.num_entities < 2:
            raise ValueError("negative sampling needs at least two entities")
        self.num_entities = dataset.num_entities
        self.num_relations = dataset.num_relations
        self.strategy = strategy
        self._train_keys = np.sort(self._keys(dataset.train))
        self._head_prob = np.full(dataset.num_relations, 0.5)
        if strategy == "bernoulli":
            for r, (tph, hpt) in bernoulli_stats(dataset).items():
                self._head_prob[r] = tph / (tph + hpt)

    def _keys(self, triples):
        triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        return (triples[:, 0] * self.num_relations + triples[:, 1]) * self.num_entities + triples[:, 2]

    def _in_train(self, triples):
        keys = self._keys(triples)
        pos = np.searchsorted(self._train_keys, keys)
        pos = np.minimum(pos, max(len(self._train_keys) - 1, 0))
        if len(self._train_keys) == 0:
            return np.zeros(len(keys), dtype=bool)
        return self._train_keys[pos] == keys

    def _draw(self, original, rng):
        u = rng.integers(0, self.num_entities - 1, size=original.shape)
        return u + (u >= original)

    def sample(self, positives, num_negatives, rng):
        """Return an ``(B, num_negatives, 3)`` array of corrupted triples."""
        positives = np.asarray(positives, dtype=np.int64).reshape(-1, 3)
        neg = np.repeat(positives[:, None, :], num_negatives, axis=1).reshape(-1, 3)
        corrupt_head = rng.random(len(neg)) < self._head_prob[neg[:, 1]]
        col = np.where(corrupt_head, 0, 2)
        rows = np.arange(len(neg))
        original = neg[rows, col].copy()
        neg[rows, col] = self._draw(original, rng)
        pending = np.flatnonzero(self._in_train(neg))
        for _ in range(MAX_RESAMPLES):
            if len(pending) == 0:
                break
            neg[pending, col[pending]] = self._draw(original[pending], rng)
            pending = pending[self._in_train(neg[pending])]
        return neg.reshape(len(positives), num_negatives, 3)


def sample_negative(triple, dataset, strategy, rng):
    return tuple(int(x) for x in NegativeSampler(dataset, strategy).sample([triple], 1, rng)[0, 0])


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return np.exp(-np.logaddexp(0.0, -x))


def self_adversarial_weights(neg_scores, temperature):
    z = temperature * neg_scores
    z = z - z.max(axis=-1, keepdims=True)
    w = np.exp(z)
    return w / w.sum(axis=-1, keepdims=True)


@dataclass
class Gradients:
    """Row-sparse gradient: unique row ids and the summed gradient per row."""

    entity_rows: np.ndarray
    entity_grad: np.ndarray
    relation_rows: np.ndarray
    relation_grad: np.ndarray


def _accumulate(rows, grads):
    uniq, inv = np.unique(rows, return_inverse=True)
    out = np.zeros((len(uniq), grads.shape[1]))
    np.add.at(out, inv, grads)
    return uniq, out


def loss_and_gradients(params, positives, negatives, config):
    """Mean loss over the positives of a batch and its exact gradient.

    ``positives`` is ``(B, 3)``, ``negatives`` ``(B, N, 3)``. The
    self-adversarial weights are differentiated too, so the gradient is that
    of the reported loss.
    """
    positives = np.asarray(positives, dtype=np.int64).reshape(-1, 3)
    negatives = np.asarray(negatives, dtype=np.int64)
    if negatives.ndim == 2:
        negatives = negatives[:, None, :] if len(positives) > 1 else negatives[None]
    B, N = negatives.shape[:2]
    if N == 0:
        raise ValueError("need at least one negative per positive")
    allt = np.concatenate([positives, negatives.reshape(-1, 3)])
    H = params.entities[allt[:, 0]]
    R = params.relations[allt[:, 1]]
    T = params.entities[allt[:, 2]]
    s, dH, dR, dT = score_and_grad(params.kind, params.norm_p, params.dim, H, R, T)
    sp, sn = s[:B], s[B:].reshape(B, N)

    if config.loss == "margin":
        viol = config.margin - sp[:, None] + sn
        active = (viol > 0).astype(np.float64)
        per = np.maximum(viol, 0.0).sum(axis=1)
        gp = -active.sum(axis=1)
        gn = active
    elif config.loss == "logistic":
        per = _softplus(-sp) + _softplus(sn).sum(axis=1)
        gp = -_sigmoid(-sp)
        gn = _sigmoid(sn)
    else:
        w = self_adversarial_weights(sn, config.temperature)
        spn = _softplus(sn)
        neg_term = (w * spn).sum(axis=1)
        per = _softplus(-sp) + neg_term
        gp = -_sigmoid(-sp)
        gn = w * _sigmoid(sn) + config.temperature * w * (spn - neg_term[:, None])

    coef = np.concatenate([gp, gn.reshape(-1)]) / B
    ent_rows = np.concatenate([allt[:, 0], allt[:, 2]])
    ent_grads = np.concatenate([coef[:, None] * dH, coef[:, None] * dT])
    rel_rows = allt[:, 1]
    rel_grads = coef[:, None] * dR

    loss = per.mean()
    if config.regularization != "none":
        lam = config.reg_weight / B
        pe = np.concatenate([positives[:, 0], positives[:, 2]])
        E = params.entities[pe]
        if config.regularization == "l2":
            loss += lam * (E * E).sum()
            ent_g = 2 * lam * E
        else:
            loss += lam * (np.abs(E) ** 3).sum()
            ent_g = 3 * lam * E * np.abs(E)
        ent_rows = np.concatenate([ent_rows, pe])
        ent_grads = np.concatenate([ent_grads, ent_g])
        if params.kind is not ModelKind.ROTATE:
            Rp = params.relations[positives[:, 1]]
            if config.regularization == "l2":
                loss += lam * (Rp * Rp).sum()
                rel_g = 2 * lam * Rp
            else:
                loss += lam * (np.abs(Rp) ** 3).sum()
                rel_g = 3 * lam * Rp * np.abs(Rp)
            rel_rows = np.concatenate([rel_rows, positives[:, 1]])
            rel_grads = np.concatenate([rel_grads, rel_g])

    loss = float(loss)
    if not np.isfinite(loss):
        raise DivergenceError(f"non-finite loss {loss}")
    er, eg = _accumulate(ent_rows, ent_grads)
    rr, rg = _accumulate(rel_rows, rel_grads)
    return loss, Gradients(er, eg, rr, rg)


class Optimizer:
    """Dense SGD / Adagrad / Adam over the two embedding stores."""

    def __init__(self, name, params, lr, betas=(0.9, 0.999), eps=1e-8):
        self.name = name
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.step_count = 0
        self.state = {}
        if name == "adagrad":
            self.state = {k: np.zeros_like(getattr(params, k)) for k in ("entities", "relations")}
        elif name == "adam":
            self.state = {k: (np.zeros_like(getattr(params, k)), np.zeros_like(getattr(params, k)))
                          for k in ("entities", "relations")}

    def step(self, params, grads):
        self.step_count += 1
        for key, rows, g in (("entities", grads.entity_rows, grads.entity_grad),
                             ("relations", grads.relation_rows, grads.relation_grad)):
            store = getattr(params, key)
            if self.name == "sgd":
                store[rows] -= self.lr * g
            elif self.name == "adagrad":
                acc = self.state[key]
                acc[rows] += g * g
                store[rows] -= self.lr * g / (np.sqrt(acc[rows]) + 1e-10)
            else:
                m, v = self.state[key]
                b1, b2 = self.betas
                full = np.zeros_like(store)
                full[rows] = g
                m *= b1
                m += (1 - b1) * full
                v *= b2
                v += (1 - b2) * full * full
                mhat = m / (1 - b1 ** self.step_count)
                vhat = v / (1 - b2 ** self.step_count)
                store -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def _clamp_rows(store, rows):
    norms = np.linalg.norm(store[rows], axis=1)
    over = norms > 1.0
    if over.any():
        store[rows[over]] /= norms[over][:, None]


@dataclass
class TrainResult:
    params: object
    epoch_losses: list
    best_epoch: int = -1


def train(dataset, kind, config, log_every=0):
    """Train a model; deterministic for a given dataset, kind and config."""
    kind = ModelKind.parse(kind) if not isinstance(kind, ModelKind) else kind
    params = init_params(kind, dataset.num_entities, dataset.num_relations, config.dim,
                         seed=config.seed, norm_p=config.norm_p)
    losses = []
    if config.epochs == 0 or len(dataset.train) == 0:
        return TrainResult(params, losses)
    rng = np.random.default_rng(config.seed)
    sampler = NegativeSampler(dataset, config.sampling)
    opt = Optimizer(config.optimizer, params, config.learning_rate)
    clamp = kind is ModelKind.TRANSE and config.normalize_entities
    best, best_mrr, best_epoch, stale = None, -1.0, -1, 0
    train_triples = dataset.train
    for epoch in range(config.epochs):
        order = rng.permutation(len(train_triples))
        total, count = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            batch = train_triples[order[start:start + config.batch_size]]
            negs = sampler.sample(batch, config.negatives, rng)
            try:
                loss, grads = loss_and_gradients(params, batch, negs, config)
            except DivergenceError as exc:
                raise DivergenceError(f"epoch {epoch + 1}: {exc}") from exc
            opt.step(params, grads)
            if clamp:
                _clamp_rows(params.entities, grads.entity_rows)
            total += loss * len(batch)
            count += len(batch)
        losses.append(total / count)
        if log_every and (epoch + 1) % log_every == 0:
            logger.info("epoch %d loss %.6f", epoch + 1, losses[-1])
        if config.early_stopping and (epoch + 1) % config.eval_every == 0 and len(dataset.valid):
            from kglp.evaluation import validation_mrr

            mrr = validation_mrr(params, dataset)
            if mrr > best_mrr:
                best, best_mrr, best_epoch, stale = params.copy(), mrr, epoch + 1, 0
            else:
                stale += 1
                if stale >= config.early_stopping:
                    logger.info("early stop at epoch %d (best %d)", epoch + 1, best_epoch)
                    break
    if best is not None:
        return TrainResult(best, losses, best_epoch)
    return TrainResult(params, losses)
