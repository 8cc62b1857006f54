"""Relation properties detected from training facts with a tolerance."""

from collections import defaultdict
from dataclasses import dataclass

PROPERTIES = ("reflexive", "irreflexive", "symmetric", "anti_symmetric", "transitive")


@dataclass(frozen=True)
class RelationProfile:
    relation: int
    num_facts: int
    ratios: dict
    properties: frozenset


def _ratios(facts, fact_set):
    n = len(facts)
    self_loops = {h for h, t in facts if h == t}
    reflexive = sum(1 for h, _ in facts if h in self_loops)
    # a fact supports irreflexivity when it is not a self-loop and its head has none
    irreflexive = sum(1 for h, t in facts if h != t and h not in self_loops)
    symmetric = sum(1 for h, t in facts if (t, h) in fact_set)
    anti = sum(1 for h, t in facts if h != t and (t, h) not in fact_set)
    outgoing = defaultdict(list)
    for h, t in facts:
        outgoing[h].append(t)
    pairs = closed = 0
    for h, x in facts:
        for t in outgoing.get(x, ()):
            pairs += 1
            closed += (h, t) in fact_set
    return {
        "reflexive": reflexive / n,
        "irreflexive": irreflexive / n,
        "symmetric": symmetric / n,
        "anti_symmetric": anti / n,
        "transitive": closed / pairs if pairs else 0.0,
    }


def detect_relation_properties(dataset, tolerance=0.5):
    """Profile every relation that has training facts.

    A property is granted when its supporting ratio is strictly above
    ``tolerance``. The transitive ratio is taken over composable ordered fact
    pairs; relations without any get 0.
    """
    if not 0.0 <= tolerance <= 1.0:
        raise ValueError("tolerance must lie in [0, 1]")
    by_rel = defaultdict(list)
    for h, r, t in dataset.train.tolist():
        by_rel[r].append((h, t))
    profiles = {}
    for r in sorted(by_rel):
        facts = by_rel[r]
        ratios = _ratios(facts, set(facts))
        granted = frozenset(p for p in PROPERTIES if ratios[p] > tolerance)
        profiles[r] = RelationProfile(r, len(facts), ratios, granted)
    return profiles
