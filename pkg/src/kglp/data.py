"""Triple files, vocabularies and the lookup indices used everywhere else."""

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class TripleFormatError(ValueError):
    """A triple file line does not have exactly three tab-separated fields."""

    def __init__(self, path, lineno, line):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: expected 'head<TAB>relation<TAB>tail', got {line!r}")


class DisjointnessError(ValueError):
    pass


def load_triples(path):
    """Read a tab-separated triple file, keeping file order and duplicates."""
    triples = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.endswith("\n"):
                line = line[:-1]
            if line.endswith("\r"):
                line = line[:-1]
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise TripleFormatError(str(path), lineno, line)
            triples.append((parts[0], parts[1], parts[2]))
    return triples


def _index(triples, key, value):
    idx = defaultdict(set)
    for tr in triples:
        idx[(tr[key[0]], tr[key[1]])].add(tr[value])
    return {k: frozenset(v) for k, v in idx.items()}


@dataclass(frozen=True)
class Dataset:
    """An immutable link-prediction dataset.

    Triples are ``(n, 3)`` int64 arrays of ``(head, relation, tail)`` ids.
    ``known_tails[(h, r)]`` and ``known_heads[(r, t)]`` cover all three
    splits; the ``train_*`` variants only the training split.
    """

    entities: tuple
    relations: tuple
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray
    known_tails: dict = field(repr=False)
    known_heads: dict = field(repr=False)
    train_tails: dict = field(repr=False)
    train_heads: dict = field(repr=False)
    train_set: frozenset = field(repr=False)

    @property
    def num_entities(self):
        return len(self.entities)

    @property
    def num_relations(self):
        return len(self.relations)

    def entity_id(self, label):
        return self._entity_ids[label]

    def relation_id(self, label):
        return self._relation_ids[label]

    def __post_init__(self):
        object.__setattr__(self, "_entity_ids", {e: i for i, e in enumerate(self.entities)})
        object.__setattr__(self, "_relation_ids", {r: i for i, r in enumerate(self.relations)})

    def all_triples(self):
        return np.concatenate([self.train, self.valid, self.test])

    def encode(self, labeled):
        """Map labelled triples to an id array; unknown labels raise ``KeyError``."""
        ids = [(self._entity_ids[h], self._relation_ids[r], self._entity_ids[t])
               for h, r, t in labeled]
        return np.asarray(ids, dtype=np.int64).reshape(-1, 3)

    def decode(self, triple):
        h, r, t = (int(x) for x in triple)
        return self.entities[h], self.relations[r], self.entities[t]


def build_dataset(train, valid, test):
    """Assign dense ids by first appearance and build the filtering indices.

    Duplicates inside a split collapse to one copy; a triple shared by two
    splits raises :class:`DisjointnessError`.
    """
    entity_ids, relation_ids = {}, {}
    splits = []
    for split in (train, valid, test):
        seen = {}
        for h, r, t in split:
            for label in (h, t):
                if label not in entity_ids:
                    entity_ids[label] = len(entity_ids)
            if r not in relation_ids:
                relation_ids[r] = len(relation_ids)
            seen.setdefault((entity_ids[h], relation_ids[r], entity_ids[t]), None)
        splits.append(list(seen))

    names = ("train", "valid", "test")
    owner = {}
    for name, split in zip(names, splits):
        for tr in split:
            if tr in owner:
                raise DisjointnessError(
                    f"triple {tr} appears in both {owner[tr]} and {name}")
            owner[tr] = name

    arrays = [np.asarray(s, dtype=np.int64).reshape(-1, 3) for s in splits]
    everything = [tr for s in splits for tr in s]
    return Dataset(
        entities=tuple(entity_ids),
        relations=tuple(relation_ids),
        train=arrays[0],
        valid=arrays[1],
        test=arrays[2],
        known_tails=_index(everything, (0, 1), 2),
        known_heads=_index(everything, (1, 2), 0),
        train_tails=_index(splits[0], (0, 1), 2),
        train_heads=_index(splits[0], (1, 2), 0),
        train_set=frozenset(splits[0]),
    )


def load_dataset(directory, train="train.txt", valid="valid.txt", test="test.txt"):
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {directory}")
    return build_dataset(*(load_triples(directory / name) for name in (train, valid, test)))


def filter_candidates(dataset, source, relation, direction):
    """Entities completing ``(source, relation, ?)`` (tail) or ``(?, relation, source)``
    (head) into a fact of any split."""
    if direction == "tail":
        return set(dataset.known_tails.get((source, relation), ()))
    if direction == "head":
        return set(dataset.known_heads.get((relation, source), ()))
    raise ValueError(f"direction must be 'head' or 'tail', not {direction!r}")
