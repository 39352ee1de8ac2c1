import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from esverify import (
    ModelError,
    PairLaw,
    ProductModel,
    build_builtin,
    build_function,
    parse_function,
    parse_model,
    serialize_model,
)
from esverify.acceptance import random_arbitrary_model, random_circulation_model


def test_parse_symmetric_pair_flags():
    doc = {"pairs": [{"values": [-1, 1], "joint": [[0.25, 0.25], [0.25, 0.25]]}]}
    pair = parse_model(json.dumps(doc)).pairs[0]
    assert pair.exchangeable and pair.identically_distributed


def test_parse_shift_pair_flags():
    joint = [[0, 1 / 3, 0], [0, 0, 1 / 3], [1 / 3, 0, 0]]
    pair = parse_model({"pairs": [{"values": [0, 1, 2], "joint": joint}]}).pairs[0]
    assert not pair.exchangeable
    assert pair.identically_distributed


def test_unbalanced_pair_is_accepted_but_flagged():
    pair = parse_model({"pairs": [{"values": [0, 1], "joint": [[0, 1], [0, 0]]}]}).pairs[0]
    assert not pair.identically_distributed
    assert not pair.exchangeable


def test_values_are_sorted_with_joint():
    pair = PairLaw.from_joint([1, -1], [[0.1, 0.2], [0.3, 0.4]])
    assert pair.values == (-1.0, 1.0)
    np.testing.assert_array_equal(pair.joint, [[0.4, 0.3], [0.2, 0.1]])


def test_small_mass_deviation_is_renormalized():
    pair = PairLaw.from_joint([0, 1], [[0.5 + 5e-10, 0], [0, 0.5]])
    assert pair.joint.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize(
    "doc, match",
    [
        ("{not json", "malformed"),
        ({"pairs": "x"}, "pairs"),
        ({"pairs": [{"values": [0, 1], "joint": [[0.5, -0.1], [0.1, 0.5]]}]}, "nonnegative"),
        ({"pairs": [{"values": [0, 1], "joint": [[0.5, 0.1], [0.1, 0.5]]}]}, "deviation"),
        ({"pairs": [{"values": [0, 0], "joint": [[0.5, 0], [0, 0.5]]}]}, "duplicate"),
        ({"pairs": [{"values": [0, 1], "joint": [[1.0]]}]}, "2x2"),
        ({"pairs": []}, "at least one"),
    ],
)
def test_parse_errors(doc, match):
    with pytest.raises(ModelError, match=match):
        parse_model(doc)


def test_union_of_supports():
    model = parse_model(
        {"pairs": [{"x_values": [-1, 1], "y_values": [0], "joint": [[0.5], [0.5]]}]}
    )
    pair = model.pairs[0]
    assert pair.values == (-1.0, 0.0, 1.0)
    np.testing.assert_array_equal(pair.joint[:, 1], [0.5, 0, 0.5])


def test_builtin_rademacher_flip():
    model = build_builtin("rademacher_flip", 2)
    assert model.n == 2
    for pair in model.pairs:
        assert pair.values == (-1.0, 1.0)
        np.testing.assert_array_equal(pair.joint, [[0, 0.5], [0.5, 0]])
        assert pair.exchangeable


def test_builtin_cyclic_shift():
    pair = build_builtin("cyclic_shift", 1, 3).pairs[0]
    expected = np.zeros((3, 3))
    expected[0, 1] = expected[1, 2] = expected[2, 0] = 1 / 3
    np.testing.assert_allclose(pair.joint, expected)


def test_builtin_three_point():
    model = build_builtin("three_point_different_law", 3)
    assert model.n == 3
    for pair in model.pairs:
        assert pair.values == (-1.0, 0.0, 1.0)
        assert pair.joint[0, 1] == 0.5 and pair.joint[2, 1] == 0.5
        assert not pair.exchangeable and not pair.identically_distributed


def test_builtin_independent_copy_is_rank_one():
    pair = build_builtin("independent_copy", 2, [0.2, 0.3, 0.5]).pairs[0]
    assert np.linalg.matrix_rank(pair.joint) == 1
    assert pair.exchangeable


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_shift_flags(m):
    for pair in build_builtin("cyclic_shift", 2, m).pairs:
        assert pair.identically_distributed and not pair.exchangeable


@pytest.mark.parametrize(
    "name, params",
    [("nope", (1,)), ("cyclic_shift", (2, 0)), ("rademacher_flip", (0,)),
     ("independent_copy", (2, [0.5, 0.6])), ("cyclic_shift", (2,))],
)
def test_builtin_errors(name, params):
    with pytest.raises(ModelError):
        build_builtin(name, *params)


def test_parity_dictator_table():
    f = build_function("parity", build_builtin("rademacher_flip", 2), [1])
    np.testing.assert_array_equal(f.values, [-1, -1, 1, 1])


def test_sin_sum_entry():
    model = build_builtin("cyclic_shift", 2, 3)
    f = build_function("sin_sum", model)
    assert f.values[1 * 3 + 2] == pytest.approx(math.sin(3))


def test_character_table():
    model = build_builtin("cyclic_shift", 2, 3)
    f = build_function("character", model, [1, 0])
    assert f.scalar_kind == "complex"
    table = f.values.reshape(3, 3)
    for a in range(3):
        np.testing.assert_allclose(table[a], np.exp(2j * np.pi * a / 3))


def test_product_sign_and_linear():
    model = build_builtin("three_point_different_law", 2)
    ps = build_function("product_sign", model).values.reshape(3, 3)
    assert ps[2, 0] == 2.0 and ps[0, 1] == -1.0
    lin = build_function("linear", model, [2, 3]).values.reshape(3, 3)
    assert lin[2, 0] == -1.0


def test_parse_function_table_and_complex():
    model = build_builtin("rademacher_flip", 1)
    assert parse_function({"table": [1, 2]}, model).scalar_kind == "real"
    f = parse_function({"table": [[1, 2], [0, -1]]}, model)
    np.testing.assert_array_equal(f.values, [1 + 2j, -1j])


@pytest.mark.parametrize(
    "doc",
    [
        {"table": [1, 2, 3]},
        {"builtin": "linear", "params": [1]},
        {"builtin": "character", "params": [2, 0]},
        {"builtin": "whatever"},
        {"table": [1, float("nan"), 0, 0]},
    ],
)
def test_parse_function_errors(doc):
    with pytest.raises(ModelError):
        parse_function(doc, build_builtin("rademacher_flip", 2))


def test_function_roundtrip():
    model = build_builtin("cyclic_shift", 2, 3)
    f = build_function("character", model, [1, 2])
    g = parse_function(json.dumps(f.to_dict()), model)
    np.testing.assert_array_equal(f.values, g.values)


def test_hand_set_flags_must_be_consistent():
    pair = build_builtin("cyclic_shift", 1, 3).pairs[0]
    with pytest.raises(ModelError):
        PairLaw(pair.values, pair.joint, exchangeable=True, identically_distributed=False)


def test_immutable():
    pair = build_builtin("rademacher_flip", 1).pairs[0]
    with pytest.raises(ValueError):
        pair.joint[0, 0] = 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_serialize_roundtrip(seed, balanced):
    rng = np.random.default_rng(seed)
    model = random_circulation_model(rng) if balanced else random_arbitrary_model(rng)
    again = parse_model(serialize_model(model))
    assert again.sizes == model.sizes
    for p, q in zip(model.pairs, again.pairs):
        assert p.values == q.values
        np.testing.assert_array_equal(p.joint, q.joint)
        assert p.exchangeable == q.exchangeable
        assert p.identically_distributed == q.identically_distributed


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_flags_match_matrix_checks(seed):
    rng = np.random.default_rng(seed)
    for pair in random_arbitrary_model(rng).pairs + random_circulation_model(rng).pairs:
        j = pair.joint
        assert pair.exchangeable == bool(np.all(np.abs(j - j.T) <= 1e-12))
        assert pair.identically_distributed == bool(
            np.all(np.abs(j.sum(0) - j.sum(1)) <= 1e-12)
        )
