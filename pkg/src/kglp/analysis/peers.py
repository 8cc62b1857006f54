"""Peer counts: alternative entities seen in training for the same query."""

from dataclasses import dataclass


@dataclass(frozen=True)
class PeerCounts:
    head_peers: int
    tail_peers: int

    def source_peers(self, direction):
        # head prediction: the tail is the source
        return self.tail_peers if direction == "head" else self.head_peers

    def target_peers(self, direction):
        return self.head_peers if direction == "head" else self.tail_peers


def count_peers(dataset, triple):
    h, r, t = (int(x) for x in triple)
    return PeerCounts(
        head_peers=len(dataset.train_heads.get((r, t), ())),
        tail_peers=len(dataset.train_tails.get((h, r), ())),
    )


def peer_features(dataset, triples=None):
    """``(triple, direction, source_peers, target_peers)`` for both directions of each fact."""
    triples = dataset.test if triples is None else triples
    rows = []
    for tr in triples:
        pc = count_peers(dataset, tr)
        key = tuple(int(x) for x in tr)
        for direction in ("head", "tail"):
            rows.append((key, direction, pc.source_peers(direction), pc.target_peers(direction)))
    return rows
