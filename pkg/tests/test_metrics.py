# -*- coding: utf-8 -*-
'''
Testing Hungarian matching and the clustering scores
'''

import itertools

import numpy as np
import pytest

from cgcn.globals import ContractError
from cgcn.metrics import (
    UNMATCHED,
    Contingency,
    accuracy,
    ari,
    evaluate,
    hungarian_match,
    macro_f1,
    nmi,
    remap,
)


def _cont(counts):
    counts = np.array(counts)
    return Contingency(counts, np.arange(counts.shape[0]),
                       np.arange(counts.shape[1]))


def _brute_force_accuracy(true, pred):
    classes = sorted(set(true) | set(pred))
    best = 0
    for perm in itertools.permutations(classes):
        mapping = dict(zip(classes, perm))
        best = max(best, sum(mapping[p] == t for t, p in zip(true, pred)))
    return best / len(true)


def test_hungarian_examples():
    mapping, matched = hungarian_match(_cont(np.diag([3, 2, 4])))
    assert mapping == {0: 0, 1: 1, 2: 2}
    assert matched == 9

    mapping, _ = hungarian_match(_cont([[0, 3], [2, 0]]))
    assert mapping == {0: 1, 1: 0}

    mapping, matched = hungarian_match(
        _cont([[5, 1, 0], [0, 4, 2], [1, 0, 6]]))
    assert mapping == {0: 0, 1: 1, 2: 2}
    assert matched == 15


def test_hungarian_more_clusters_than_classes():
    cont = Contingency.from_labels([0, 0, 1, 1, 1], [2, 2, 0, 0, 1])
    mapping, matched = hungarian_match(cont)
    assert mapping == {2: 0, 0: 1}
    assert matched == 4
    remapped = remap([2, 2, 0, 0, 1], mapping)
    assert list(remapped) == [0, 0, 1, 1, UNMATCHED]


def test_accuracy_examples():
    assert accuracy([0, 1, 2, 0], [0, 1, 2, 0]) == 1.0
    assert accuracy([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert accuracy([0, 0, 1, 1], [0, 1, 0, 1]) == 0.5


def test_accuracy_matches_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(1, 7))
        true = list(rng.integers(0, 3, n))
        pred = list(rng.integers(0, 3, n))
        assert accuracy(true, pred) == pytest.approx(
            _brute_force_accuracy(true, pred))


def test_nmi_examples():
    assert nmi([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0)
    assert nmi([0, 0, 1, 1], [0, 0, 0, 0]) == 0.0
    assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-12)


def test_ari_examples():
    assert ari([0, 1, 1, 2], [0, 1, 1, 2]) == 1.0
    assert ari([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(-0.5)
    assert ari([0, 0, 0], [1, 1, 1]) == 1.0


def test_macro_f1_examples():
    assert macro_f1([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0
    assert macro_f1([0, 0, 1, 1], [0, 0, 0, 1]) == pytest.approx(11 / 15)
    # class 2 has no cluster mapped to it
    assert macro_f1([0, 1, 2], [0, 1, 1]) == pytest.approx(5 / 9)


def test_scores_are_permutation_invariant():
    rng = np.random.default_rng(0)
    true = rng.integers(0, 4, 40)
    pred = rng.integers(0, 4, 40)
    perm = rng.permutation(4)
    base = evaluate(true, pred)
    permuted = evaluate(true, perm[pred])
    for name in ("acc", "nmi", "ari", "f1"):
        assert permuted[name] == pytest.approx(base[name])


def test_tied_matchings_give_the_same_f1():
    true = [0, 2, 0, 2, 2]
    pred = np.array([2, 1, 1, 2, 0])
    renamed = np.array([2, 0, 1])[pred]
    assert macro_f1(true, renamed) == pytest.approx(macro_f1(true, pred))

    rng = np.random.default_rng(5)
    for _ in range(500):
        n = int(rng.integers(2, 9))
        true = rng.integers(0, 3, n)
        pred = rng.integers(0, 3, n)
        base = evaluate(true, pred)
        permuted = evaluate(true, rng.permutation(3)[pred])
        for name in ("acc", "nmi", "ari", "f1"):
            assert permuted[name] == pytest.approx(base[name], abs=1e-12)


def test_random_labelings_have_low_ari():
    scores = [
        ari(rng.integers(0, 3, 1000), rng.integers(0, 3, 1000))
        for rng in map(np.random.default_rng, range(50))
    ]
    assert abs(np.mean(scores)) <= 0.02


def test_score_ranges():
    rng = np.random.default_rng(9)
    for _ in range(50):
        true = rng.integers(0, 3, 12)
        pred = rng.integers(0, 4, 12)
        scores = evaluate(true, pred)
        assert 0.0 <= scores["acc"] <= 1.0
        assert 0.0 <= scores["nmi"] <= 1.0 + 1e-12
        assert 0.0 <= scores["f1"] <= 1.0
        assert -1.0 <= scores["ari"] <= 1.0


def test_label_contract():
    with pytest.raises(ContractError):
        accuracy([0, 1], [0])
    with pytest.raises(ContractError):
        evaluate([], [])
