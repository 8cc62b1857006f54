import numpy as np
import pytest

from kglp import build_dataset
from kglp import kernels

# Small path fixture built so that every relation
# document has the stated co-occurrence counts: nationality is supported by
# born_in+located_in twice and by works_in once; works_in by born_in+located_in
# and nationality once each. Components are disjoint so no longer walk adds a path.
PATHS_TRAIN = [
    ("P1", "born_in", "C1"), ("C1", "located_in", "K1"), ("P1", "nationality", "K1"),
    ("P2", "born_in", "C2"), ("C2", "located_in", "K2"), ("P2", "nationality", "K2"),
    ("P3", "works_in", "K3"), ("P3", "nationality", "K3"),
    ("P4", "born_in", "C4"), ("C4", "located_in", "K4"), ("P4", "works_in", "K4"),
    ("Harry", "born_in", "Toronto"), ("Toronto", "located_in", "Canada"),
]
PATHS_TEST = [("Harry", "nationality", "Canada"), ("Harry", "works_in", "Canada")]

FAMILY_TRAIN = [
    ("Barack", "parent", "Malia"),
    ("Michelle", "parent", "Malia"),
    ("Barack", "parent", "Natasha"),
]


def toy_kg(seed=0, n_entities=12, n_relations=3, n_facts=40):
    """Small random KG split 70/15/15, used for smoke and property tests."""
    rng = np.random.default_rng(seed)
    facts = set()
    while len(facts) < n_facts:
        h, t = rng.integers(0, n_entities, size=2)
        facts.add((f"e{h}", f"r{rng.integers(0, n_relations)}", f"e{t}"))
    facts = sorted(facts)
    order = rng.permutation(len(facts))
    facts = [facts[i] for i in order]
    a, b = int(0.7 * len(facts)), int(0.85 * len(facts))
    return build_dataset(facts[:a], facts[a:b], facts[b:])


@pytest.fixture
def paths_kg():
    return build_dataset(PATHS_TRAIN, [], PATHS_TEST)


@pytest.fixture
def family_kg():
    return build_dataset(FAMILY_TRAIN, [], [])


@pytest.fixture
def toy():
    return toy_kg()


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    return kernels.BACKENDS[request.param]


def write_split(directory, name, triples):
    directory.mkdir(parents=True, exist_ok=True)
    (directory / name).write_text("".join(f"{h}\t{r}\t{t}\n" for h, r, t in triples),
                                  encoding="utf-8")


@pytest.fixture
def toy_dir(tmp_path):
    ds = toy_kg()
    d = tmp_path / "toy"
    for name, split in (("train.txt", ds.train), ("valid.txt", ds.valid), ("test.txt", ds.test)):
        write_split(d, name, [ds.decode(t) for t in split])
    return d
