"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py --entities 20000 --dim 100 --repeat 5

Each row reports the best of ``--repeat`` timings per backend and checks that
both backends return identical results.
"""

import argparse
import time

import numpy as np

from kglp import build_dataset, kernels
from kglp.analysis.paths import PathGraph
from kglp.models import ModelKind, init_params


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def random_graph(n_entities, n_relations, n_facts, seed):
    rng = np.random.default_rng(seed)
    facts = {(f"e{h}", f"r{r}", f"e{t}") for h, r, t in zip(
        rng.integers(0, n_entities, n_facts), rng.integers(0, n_relations, n_facts),
        rng.integers(0, n_entities, n_facts))}
    return build_dataset(sorted(facts), [], [])


def cases(args):
    for kind in ModelKind:
        p = init_params(kind, args.entities, 4, args.dim, seed=args.seed)
        rel = p.effective_relation(1)

        def run(be, p=p, rel=rel, kind=kind):
            return be.score_candidates(kind.code, p.entities[0], rel, p.entities, True,
                                       p.norm_p, p.dim)
        yield f"score_all {kind.value}", run

    rng = np.random.default_rng(args.seed)
    scores = rng.integers(0, 50, size=args.entities).astype(np.float64)
    mask = rng.random(args.entities) < 0.01
    mask[7] = False
    yield "rank_counts", lambda be: be.rank_counts(scores, 7, mask)

    ds = random_graph(args.graph_entities, 20, args.graph_facts, args.seed)
    graphs = {name: PathGraph(ds, backend=be) for name, be in kernels.BACKENDS.items()}
    sources = rng.integers(0, ds.num_entities, size=20)

    def walks(be):
        g = graphs[[n for n, b in kernels.BACKENDS.items() if b is be][0]]
        return [g.walks(s, 3) for s in sources]
    yield "walks (20 sources, len 3)", walks

    pairs = ds.train[:200]

    def paths(be):
        g = graphs[[n for n, b in kernels.BACKENDS.items() if b is be][0]]
        return [g.paths(h, t, 3, k) for k, (h, _, t) in enumerate(pairs)]
    yield "paths (200 facts, len 3)", paths


def same(a, b):
    if isinstance(a, list):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--entities", type=int, default=20000)
    ap.add_argument("--dim", type=int, default=100)
    ap.add_argument("--graph-entities", type=int, default=2000)
    ap.add_argument("--graph-facts", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if "compiled" not in kernels.BACKENDS:
        raise SystemExit("compiled extension not built; run pip install -e . first")
    py, cc = kernels.BACKENDS["python"], kernels.BACKENDS["compiled"]
    print(f"{'kernel':<28}{'python (ms)':>14}{'compiled (ms)':>16}{'speedup':>10}  identical")
    for name, fn in cases(args):
        tp, out_p = best_of(lambda: fn(py), args.repeat)
        tc, out_c = best_of(lambda: fn(cc), args.repeat)
        print(f"{name:<28}{1e3 * tp:>14.2f}{1e3 * tc:>16.2f}{tp / tc:>10.1f}  {same(out_p, out_c)}")


if __name__ == "__main__":
    main()
