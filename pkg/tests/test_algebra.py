import json
import random
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import random_gmm_op
from maltsev_csp.algebra import (
    AlgebraError,
    ArityMismatch,
    LengthMismatch,
    NotGMM,
    OperationTable,
    PairKind,
    affine_op,
    apply_pointwise,
    apply_rows,
    binary_violation,
    classify_pair,
    closure_binary,
    group_maltsev_op,
    is_idempotent,
    load_algebra,
    majority_op,
    preserves_binary,
    preserves_unary,
    validate_gmm,
    validate_maltsev,
)
from maltsev_csp.oracle import cyclic_group, random_maltsev_op, symmetric_group_3


def test_table_shape_checks():
    with pytest.raises(AlgebraError):
        OperationTable(2, 3, [0] * 7)
    with pytest.raises(AlgebraError):
        OperationTable(2, 3, [0] * 7 + [2])
    with pytest.raises(AlgebraError):
        OperationTable(0, 3, [])


def test_json_round_trip():
    op = affine_op(3)
    again = load_algebra(json.dumps(op.to_json()))
    assert again == op and again.digest() == op.digest()
    with pytest.raises(AlgebraError):
        load_algebra("{not json")
    with pytest.raises(AlgebraError):
        load_algebra('{"q": 2}')


def test_affine_is_maltsev():
    assert validate_maltsev(affine_op(3))


def test_majority_fails_maltsev_at_first_triple():
    v = validate_maltsev(majority_op(2))
    assert not v
    assert v.witness == (0, 1, 1)


def test_group_ops_are_maltsev():
    assert validate_maltsev(group_maltsev_op(cyclic_group(4)))
    assert validate_maltsev(group_maltsev_op(symmetric_group_3()))


def test_maltsev_needs_arity_three():
    with pytest.raises(ArityMismatch):
        validate_maltsev(OperationTable(2, 4, [0] * 16))


def test_gmm_minority_for_affine():
    kinds = validate_gmm(affine_op(2))
    assert kinds[(0, 1)] is PairKind.MINORITY


def test_gmm_majority():
    assert validate_gmm(majority_op(2))[(0, 1)] is PairKind.MAJORITY


def test_gmm_reflexive_pairs_are_minority():
    kinds = validate_gmm(majority_op(3))
    assert all(kinds[(a, a)] is PairKind.MINORITY for a in range(3))


def test_not_gmm_names_pair():
    # op(0,1,1) = 0 (Mal'tsev-like) but op(1,1,0) = 1 (majority-like)
    def f(x, y, z):
        if (x, y, z) == (0, 1, 1):
            return 0
        if (x, y, z) == (1, 1, 0):
            return 1
        return (x + y + z) % 2

    with pytest.raises(NotGMM) as info:
        validate_gmm(OperationTable.from_function(2, 3, f))
    assert info.value.pair == (0, 1)


def test_idempotence():
    assert is_idempotent(affine_op(5))
    assert not is_idempotent(OperationTable(2, 3, [0] * 8))


def test_preserves_binary_examples():
    mu = affine_op(2)
    assert preserves_binary(mu, {(0, 0), (1, 1)})
    assert preserves_binary(mu, {(0, 1)})
    rel = {(0, 0), (0, 1), (1, 1)}
    assert not preserves_binary(mu, rel)
    args, image = binary_violation(mu, rel)
    assert image == (1, 0)
    assert mu(*(p[0] for p in args)) == 1 and mu(*(p[1] for p in args)) == 0
    assert binary_violation(mu, rel)[0] == ((0, 0), (0, 1), (1, 1))


def test_preserves_unary():
    assert preserves_unary(affine_op(3), {0, 1, 2})
    assert not preserves_unary(affine_op(3), {0, 1})
    assert preserves_unary(majority_op(3), {0, 2})


def test_apply_pointwise_examples():
    mu = affine_op(3)
    assert apply_pointwise(mu, [(1, 2), (0, 1), (2, 0)]) == (0, 1)
    h1, h3 = (2, 0, 1), (1, 1, 0)
    assert apply_pointwise(mu, [h1, h1, h3]) == h3
    assert apply_pointwise(mu, [h1, h1, h1]) == h1
    with pytest.raises(LengthMismatch):
        apply_pointwise(mu, [(0,), (0, 1), (1, 1)])
    with pytest.raises(ArityMismatch):
        apply_pointwise(mu, [(0,), (0,)])
    assert apply_pointwise(mu, [(), (), ()]) == ()


def test_apply_rows_matches_pointwise():
    mu = affine_op(3)
    rows = np.array([[1, 2], [0, 1], [2, 0]])
    assert tuple(apply_rows(mu, list(rows))) == (0, 1)


@st.composite
def maltsev_and_maps(draw):
    q = draw(st.integers(1, 4))
    n = draw(st.integers(0, 6))
    seed = draw(st.integers(0, 2**32))
    op = random_maltsev_op(q, random.Random(seed))
    maps = [tuple(draw(st.lists(st.integers(0, q - 1), min_size=n, max_size=n))) for _ in range(2)]
    return op, maps


@given(maltsev_and_maps())
def test_maltsev_identities_on_maps(case):
    op, (h1, h2) = case
    assert validate_maltsev(op)
    assert apply_pointwise(op, [h1, h2, h2]) == h1
    assert apply_pointwise(op, [h2, h2, h1]) == h1


@given(st.integers(1, 3), st.integers(0, 2**32))
def test_maltsev_ops_are_all_minority(q, seed):
    op = random_maltsev_op(q, random.Random(seed))
    assert is_idempotent(op)
    assert all(kind is PairKind.MINORITY for kind in validate_gmm(op).values())


@given(st.integers(1, 3), st.integers(3, 4), st.integers(0, 2**32))
@settings(max_examples=40)
def test_full_square_always_preserved(q, arity, seed):
    rng = random.Random(seed)
    op = OperationTable(q, arity, [rng.randrange(q) for _ in range(q**arity)])
    assert preserves_binary(op, set(product(range(q), repeat=2)))


@given(st.integers(2, 4), st.integers(0, 2**32), st.sets(st.tuples(st.integers(0, 3), st.integers(0, 3)), max_size=6))
@settings(max_examples=60)
def test_invariant_relations_are_their_own_closure(q, seed, pairs):
    op = random_maltsev_op(q, random.Random(seed))
    rel = {(a % q, b % q) for a, b in pairs}
    closed = closure_binary(op, rel)
    assert preserves_binary(op, closed)
    assert closure_binary(op, closed) == closed
    if preserves_binary(op, rel):
        assert closed == rel


@given(st.integers(2, 3), st.integers(0, 2**32))
def test_random_gmm_tables_classify_as_built(q, seed):
    rng = random.Random(seed)
    kinds = {(a, b): rng.choice(["majority", "minority"]) for a in range(q) for b in range(a + 1, q)}
    op = random_gmm_op(q, rng, 3, kinds)
    got = validate_gmm(op)
    for (a, b), kind in kinds.items():
        assert got[(a, b)].value == kind
        assert classify_pair(op, a, b).value == kind


def test_gmm_requires_idempotence():
    table = list(majority_op(2).flat)
    table[-1] = 0  # op(1,1,1) = 0
    with pytest.raises(NotGMM) as info:
        validate_gmm(OperationTable(2, 3, table))
    # the first pair touching the non-idempotent value
    assert info.value.pair == (0, 1)
