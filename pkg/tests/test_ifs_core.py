import json
import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssfourier.errors import (
    EmptyWordError,
    ExplosionError,
    RatioRangeError,
    SingletonError,
    TooFewMapsError,
    WeightRangeError,
    WeightSumError,
)
from ssfourier.ifs_core import (
    attractor_hull,
    compose,
    enumerate_stopping_words,
    load_spec,
    moments,
    normalize_to_unit,
    parse_spec,
    StoppingWordSet,
    stopping_count_bounds,
    validate_ifs,
)

from .conftest import random_spec


def test_cantor_is_valid_and_normalized(cantor):
    assert len(cantor) == 2
    assert cantor.normalized


@pytest.mark.parametrize(
    "raw, err",
    [
        ([(0.5, 0.0, 0.5), (0.5, 0.0, 0.5)], SingletonError),
        ([(0.5, 0.0, 0.6), (1 / 3, 2 / 3, 0.6)], WeightSumError),
        ([(0.5, 0.0, 1.0)], TooFewMapsError),
        ([(1.0, 0.0, 0.5), (0.5, 0.5, 0.5)], RatioRangeError),
        ([(0.0, 0.0, 0.5), (0.5, 0.5, 0.5)], RatioRangeError),
        ([(0.5, 0.0, 0.0), (0.5, 0.5, 1.0)], WeightRangeError),
    ],
)
def test_validation_errors(raw, err):
    with pytest.raises(err) as info:
        validate_ifs(raw)
    assert info.value.to_dict()["error"] == err.__name__


def test_validation_errors_are_value_errors():
    with pytest.raises(ValueError):
        validate_ifs([(0.5, 0.0, 0.6), (1 / 3, 2 / 3, 0.6)])


def test_normalize_identity_on_cantor(cantor):
    assert normalize_to_unit(cantor) is cantor


def test_normalize_hull_zero_to_ten():
    spec = validate_ifs([(0.5, 0.0, 0.5), (0.5, 5.0, 0.5)])
    assert attractor_hull(spec) == pytest.approx((0.0, 10.0), abs=1e-13)
    unit = normalize_to_unit(spec)
    assert unit.translations == pytest.approx([0.0, 0.5], abs=1e-15)
    assert unit.ratios.tolist() == spec.ratios.tolist()
    assert unit.weights.tolist() == spec.weights.tolist()


def test_normalize_symmetric_hull():
    spec = validate_ifs([(1 / 3, -1.0, 0.5), (1 / 3, 1.0, 0.5)])
    assert attractor_hull(spec) == pytest.approx((-1.5, 1.5), abs=1e-14)
    assert normalize_to_unit(spec).translations == pytest.approx([0.0, 2 / 3], abs=1e-15)


def test_normalized_hull_is_unit():
    rng = np.random.default_rng(3)
    for _ in range(10):
        spec = random_spec(rng)
        # move it somewhere else first
        moved = validate_ifs([(m.ratio, 7.0 * m.translation - 3.0 * (1 - m.ratio), m.weight) for m in spec.maps])
        lo, hi = attractor_hull(normalize_to_unit(moved))
        assert lo == pytest.approx(0.0, abs=1e-12)
        assert hi == pytest.approx(1.0, abs=1e-12)


def test_compose_examples(cantor):
    w01 = compose(cantor, [0, 1])
    assert (w01.ratio, w01.translation, w01.weight) == pytest.approx((1 / 9, 2 / 9, 1 / 4), abs=1e-16)
    w11 = compose(cantor, [1, 1])
    assert (w11.ratio, w11.translation, w11.weight) == pytest.approx((1 / 9, 8 / 9, 1 / 4), abs=1e-16)
    one = compose(cantor, [1])
    assert (one.ratio, one.translation, one.weight) == (cantor.maps[1].ratio, cantor.maps[1].translation, 0.5)


def test_compose_errors(cantor):
    with pytest.raises(EmptyWordError):
        compose(cantor, [])
    with pytest.raises(IndexError):
        compose(cantor, [0, 2])


@given(
    st.lists(st.integers(0, 2), min_size=1, max_size=12),
    st.lists(st.integers(0, 2), min_size=1, max_size=12),
)
def test_compose_homomorphism(u, v):
    spec = validate_ifs([(0.5, 0.0, 0.3), (1 / 3, 0.6, 0.3), (0.2, 0.3, 0.4)])
    uv = compose(spec, u + v)
    chained = compose(spec, u).then(compose(spec, v))
    assert uv.ratio == pytest.approx(chained.ratio, rel=1e-14)
    assert uv.translation == pytest.approx(chained.translation, abs=1e-14)
    assert uv.weight == pytest.approx(chained.weight, rel=1e-14)
    x = 0.37
    assert uv(x) == pytest.approx(compose(spec, u)(compose(spec, v)(x)), abs=1e-14)


def test_stopping_words_equal_halves():
    spec = validate_ifs([(0.5, 0.0, 0.5), (0.5, 0.5, 0.5)])
    W = enumerate_stopping_words(spec, 1.5)
    assert W.words == list(product(range(2), repeat=3))
    assert np.all(W.weights == 1 / 8)


def test_stopping_words_single_letters(half_third):
    W = enumerate_stopping_words(half_third, math.log(2.0))
    assert W.words == [(0,), (1,)]


def exhaustive_stopping(spec, t):
    """Breadth-first oracle in exact rationals for ratios 1/2, 1/3."""
    thr = math.exp(-t)
    fr = [Fraction(1, 2), Fraction(1, 3)]
    out, frontier = [], [((), Fraction(1), Fraction(1))]
    while frontier:
        nxt = []
        for w, r, p in frontier:
            for j in range(2):
                rr, pp = r * fr[j], p / 2
                (out if rr <= thr else nxt).append((w + (j,), rr, pp))
        frontier = nxt
    return sorted(out)


def test_stopping_words_mixed_lengths_exact(half_third):
    W = enumerate_stopping_words(half_third, 5.0)
    oracle = exhaustive_stopping(half_third, 5.0)
    assert W.words == [w for w, _, _ in oracle]
    assert sum(p for _, _, p in oracle) == 1
    assert W.total_weight() == 1.0
    assert len(set(W.lengths().tolist())) > 1
    assert W.is_prefix_free()


@pytest.mark.parametrize("t", [0.5, 2.0, 5.0, 9.0])
def test_stopping_invariants_random(t):
    rng = np.random.default_rng(int(t * 10))
    for _ in range(5):
        spec = random_spec(rng)
        W = enumerate_stopping_words(spec, t)
        assert abs(W.total_weight() - 1.0) <= 1e-12
        thr = math.exp(-t)
        assert np.all(W.ratios <= thr)
        assert np.all(W.ratios > spec.r_min * thr)
        assert W.is_prefix_free()
        lo, hi = stopping_count_bounds(spec, t)
        assert lo * (1 - 1e-9) <= len(W) <= hi * (1 + 1e-9)
        # each stored composite matches compose()
        for i in range(0, len(W), max(1, len(W) // 7)):
            c = compose(spec, W.word(i))
            assert (W.ratios[i], W.translations[i], W.weights[i]) == pytest.approx(
                (c.ratio, c.translation, c.weight), rel=1e-13, abs=1e-15)


def test_explosion_error(half_third):
    with pytest.raises(ExplosionError) as info:
        enumerate_stopping_words(half_third, 40.0, cap=10_000)
    assert info.value.details["estimated_count"] > 10_000
    with pytest.raises(ExplosionError):
        enumerate_stopping_words(half_third, 12.0, cap=50)


def test_moments(cantor, uniform):
    assert moments(cantor, 0)[0] == 1.0
    assert moments(cantor, 1)[1] == pytest.approx(0.5, abs=1e-15)
    m = moments(uniform, 5)
    assert m == pytest.approx([1 / (k + 1) for k in range(6)], abs=1e-14)


def test_moments_bounded_for_normalized():
    rng = np.random.default_rng(11)
    for _ in range(10):
        m = moments(random_spec(rng), 30)
        assert np.all(m >= 0) and np.all(m <= 1 + 1e-12)
        assert np.all(np.diff(m) <= 1e-12)


def test_spec_files(tmp_path, cantor):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cantor.to_dict()))
    assert load_spec(path).maps == cantor.maps
    bad = tmp_path / "bad.json"
    bad.write_text('{"maps": [')
    with pytest.raises(json.JSONDecodeError):
        load_spec(bad)
    with pytest.raises(ValueError):
        parse_spec({"maps": [{"r": 0.5}]})
    shifted = parse_spec({"maps": [{"r": 0.5, "b": 0, "p": 0.5}, {"r": 0.5, "b": 5, "p": 0.5}]}, normalize=True)
    assert shifted.normalized


def _word_set(words):
    lens = [len(w) for w in words]
    offsets = np.concatenate([[0], np.cumsum(lens)]).astype(np.int64)
    letters = np.array([j for w in words for j in w], dtype=np.uint16)
    z = np.zeros(len(words))
    return StoppingWordSet(0.5, z, z, z, letters, offsets)


@pytest.mark.parametrize("words, expected", [
    ([(0,), (0, 1), (1,)], False),
    ([(1,), (0, 1), (0,)], False),  # unsorted input with a prefix
    ([(1, 0), (0, 1), (0, 0)], True),
    ([(0, 1), (0, 1)], False),
    ([(0, 0, 1), (0, 1), (1,)], True),
])
def test_prefix_free_check(words, expected):
    assert _word_set(words).is_prefix_free() is expected
