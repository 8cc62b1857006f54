import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kglp.models import (
    ModelKind,
    ModelParams,
    circular_correlation,
    init_params,
    load_model,
    save_model,
    score,
    score_all,
    score_and_grad,
)

from oracles import correlation_oracle

KINDS = list(ModelKind)


def params_from(kind, ents, rels, norm_p=2):
    ents = np.asarray(ents, dtype=np.float64)
    rels = np.asarray(rels, dtype=np.float64)
    dim = rels.shape[1] // kind.relation_width_factor
    return ModelParams(kind, dim, ents, rels, norm_p)


def test_init_deterministic_and_shapes():
    a = init_params("complex", 5, 2, 100, seed=3)
    b = init_params("complex", 5, 2, 100, seed=3)
    assert np.array_equal(a.entities, b.entities) and np.array_equal(a.relations, b.relations)
    assert a.entities.shape == (5, 200)
    bound = 6 / math.sqrt(100)
    assert np.abs(a.entities).max() <= bound


def test_init_rotate_phases():
    p = init_params(ModelKind.ROTATE, 4, 7, 16, seed=1)
    assert p.relations.shape == (7, 16)
    assert np.all(np.abs(p.relations) <= np.pi)


@pytest.mark.parametrize("n_e,n_r", [(0, 1), (1, 0)])
def test_init_rejects_empty(n_e, n_r):
    with pytest.raises(ValueError):
        init_params("transe", n_e, n_r, 4)


def test_transe_exact_translation():
    p = params_from(ModelKind.TRANSE, [[0.5, 0.5], [0.75, 0.0]], [[0.25, -0.5]], norm_p=1)
    assert score(p, 0, 0, 1) == 0.0


def test_distmult_hand_value_and_symmetry():
    p = params_from(ModelKind.DISTMULT, [[1, 2], [5, 6]], [[3, 4]])
    assert score(p, 0, 0, 1) == 63.0
    assert score(p, 1, 0, 0) == 63.0


def test_complex_real_parts_reduce_to_distmult():
    p = params_from(ModelKind.COMPLEX, [[1, 2, 0, 0], [5, 6, 0, 0]], [[3, 4, 0, 0]])
    assert score(p, 0, 0, 1) == 63.0


def test_complex_asymmetry_witness():
    p = params_from(ModelKind.COMPLEX, [[1, 0], [0, 1]], [[0, 1]])
    assert score(p, 0, 0, 1) == 1.0
    assert score(p, 1, 0, 0) == -1.0


def test_hole_example():
    assert np.allclose(circular_correlation([1, 0], [0, 1]), [0, 1])
    p = params_from(ModelKind.HOLE, [[1, 0], [0, 1]], [[0, 1]])
    assert score(p, 0, 0, 1) == 1.0


def test_rotate_half_turn():
    p = params_from(ModelKind.ROTATE, [[1, 0], [-1, 0]], [[math.pi]])
    assert abs(score(p, 0, 0, 1)) < 1e-15


def test_simple_averages_both_directions():
    # e_h, e_t halves; r, r_inv halves
    p = params_from(ModelKind.SIMPLE, [[1, 2], [3, 5]], [[7, 11]])
    expected = 0.5 * (1 * 7 * 5 + 3 * 11 * 2)
    assert score(p, 0, 0, 1) == expected


def test_circular_correlation_small_cases():
    assert np.allclose(circular_correlation([1, 1], [1, 1]), [2, 2])
    assert np.allclose(circular_correlation([3, -1, 2], [0, 0, 0]), 0)
    with pytest.raises(ValueError):
        circular_correlation([1, 2], [1, 2, 3])


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 64), st.integers(0, 2**31 - 1))
def test_circular_correlation_matches_direct(d, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=d), rng.normal(size=d)
    assert np.max(np.abs(circular_correlation(a, b) - correlation_oracle(a, b))) < 1e-9


@pytest.mark.parametrize("kind", KINDS)
def test_score_all_bit_identical(kind):
    p = init_params(kind, 9, 3, 6, seed=2, norm_p=1 if kind is ModelKind.TRANSE else 2)
    for r in range(3):
        for s in range(9):
            tails = score_all(p, s, r, "tail")
            heads = score_all(p, s, r, "head")
            for e in range(9):
                assert tails[e] == score(p, s, r, e)
                assert heads[e] == score(p, e, r, s)


def test_distmult_score_all_direction_symmetry():
    p = init_params("distmult", 10, 2, 8, seed=5)
    assert np.array_equal(score_all(p, 3, 1, "tail"), score_all(p, 3, 1, "head"))


def test_score_all_toy_hand_values():
    p = params_from(ModelKind.DISTMULT, [[1, 0], [0, 1], [1, 1]], [[2, 3]])
    assert list(score_all(p, 2, 0, "tail")) == [2.0, 3.0, 5.0]


@pytest.mark.parametrize("kind", KINDS)
def test_batch_scores_match_kernel(kind):
    p = init_params(kind, 7, 2, 5, seed=4)
    h = np.array([0, 3, 6]); r = np.array([1, 0, 1]); t = np.array([2, 2, 5])
    s, *_ = score_and_grad(kind, p.norm_p, p.dim, p.entities[h], p.relations[r], p.entities[t])
    ref = [score(p, a, b, c) for a, b, c in zip(h, r, t)]
    assert np.allclose(s, ref, rtol=1e-12, atol=1e-12)


def test_rotate_phase_invariance():
    p = init_params("rotate", 6, 2, 8, seed=9)
    q = p.copy()
    q.relations[1, 3] += 2 * np.pi
    for s in range(6):
        assert np.max(np.abs(score_all(p, s, 1, "tail") - score_all(q, s, 1, "tail"))) < 1e-9


def test_transe_nonpositive_and_zero_iff_translation():
    p = init_params("transe", 8, 2, 4, seed=0)
    for s in range(8):
        assert np.all(score_all(p, s, 0, "tail") <= 0)
    p.entities[1] = p.entities[0] + p.relations[0]
    assert score(p, 0, 0, 1) == 0.0 or abs(score(p, 0, 0, 1)) < 1e-15


def test_nonfinite_score_raises():
    p = init_params("distmult", 3, 1, 2)
    p.entities[1, 0] = np.inf
    with pytest.raises(FloatingPointError):
        score(p, 0, 0, 1)


@pytest.mark.parametrize("kind", KINDS)
def test_model_file_round_trip(tmp_path, kind):
    p = init_params(kind, 5, 2, 3, seed=11)
    path = tmp_path / "m.emb"
    save_model(p, path)
    q = load_model(path)
    assert q.kind is kind and q.dim == 3 and q.seed == 11
    assert np.array_equal(p.entities, q.entities) and np.array_equal(p.relations, q.relations)
    header = path.read_text().splitlines()[0].split()
    assert header == [kind.value, "3", "3", "5", "2", str(p.norm_p), "11"]
