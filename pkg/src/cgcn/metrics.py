# -*- coding: utf-8 -*-
"""
Clustering quality against ground truth: Hungarian-matched accuracy, NMI,
ARI and macro F1.
"""
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import (
    adjusted_rand_score,
    f1_score,
    normalized_mutual_info_score,
)
from sklearn.metrics.cluster import contingency_matrix

from cgcn.globals import ContractError

UNMATCHED = -1


@dataclass(frozen=True)
class Contingency:
    """
    Counts of nodes per (true class, predicted cluster).

    Parameters
    ----------
    counts: np.ndarray
        k_true x k_pred integer matrix.
    true_classes: np.ndarray
        Label value of every row.
    pred_classes: np.ndarray
        Label value of every column.
    """
    counts: np.ndarray
    true_classes: np.ndarray
    pred_classes: np.ndarray

    @classmethod
    def from_labels(cls, true_labels: Sequence[int],
                    pred_labels: Sequence[int]) -> "Contingency":
        true_labels, pred_labels = _check_labels(true_labels, pred_labels)
        return cls(contingency_matrix(true_labels, pred_labels),
                   np.unique(true_labels), np.unique(pred_labels))

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def row_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def _check_labels(true_labels, pred_labels) -> Tuple[np.ndarray, np.ndarray]:
    true_labels = np.asarray(true_labels, dtype=int).ravel()
    pred_labels = np.asarray(pred_labels, dtype=int).ravel()
    if true_labels.size != pred_labels.size:
        raise ContractError(f"Got {true_labels.size} true and "
                            f"{pred_labels.size} predicted labels")
    if true_labels.size == 0:
        raise ContractError("Cannot score an empty labeling")
    return true_labels, pred_labels


def hungarian_match(cont: Contingency) -> Tuple[Dict[int, int], int]:
    """
    Assignment of predicted clusters to true classes with the largest total
    overlap. The count matrix is zero padded to a square before solving.
    Among assignments with equal overlap the one with the largest sum of
    pair F1 scores wins, so the scores do not depend on the cluster ids.

    Returns
    -------
    mapping: dict
        Predicted label -> true label. Clusters left over when there are more
        clusters than classes are not in the mapping.
    matched: int
        Number of nodes on the matched pairs.
    """
    k_true, k_pred = cont.counts.shape
    size = max(k_true, k_pred)
    padded = np.zeros((size, size), dtype=int)
    padded[:k_true, :k_pred] = cont.counts
    # pair F1 sums stay below n + 1, so they only break ties in the overlap
    pair_f1 = np.zeros((size, size))
    pair_f1[:k_true, :k_pred] = 2.0 * cont.counts / (
        cont.row_marginals[:, None] + cont.col_marginals[None, :])
    rows, cols = linear_sum_assignment(-(padded * (cont.n + 1.0) + pair_f1))

    mapping = {}
    matched = 0
    for r, c in zip(rows, cols):
        if r < k_true and c < k_pred:
            mapping[int(cont.pred_classes[c])] = int(cont.true_classes[r])
            matched += int(padded[r, c])
    return mapping, matched


def remap(pred_labels: Sequence[int], mapping: Dict[int, int]) -> np.ndarray:
    return np.array([mapping.get(int(p), UNMATCHED) for p in pred_labels],
                    dtype=int)


def accuracy(true_labels, pred_labels) -> float:
    cont = Contingency.from_labels(true_labels, pred_labels)
    _, matched = hungarian_match(cont)
    return matched / cont.n


def nmi(true_labels, pred_labels) -> float:
    """
    Mutual information normalized by the arithmetic mean of both entropies.
    Defined as 0 when either labeling has a single cluster.
    """
    true_labels, pred_labels = _check_labels(true_labels, pred_labels)
    if np.unique(true_labels).size < 2 or np.unique(pred_labels).size < 2:
        return 0.0
    return float(
        normalized_mutual_info_score(true_labels, pred_labels,
                                     average_method="arithmetic"))


def ari(true_labels, pred_labels) -> float:
    true_labels, pred_labels = _check_labels(true_labels, pred_labels)
    return float(adjusted_rand_score(true_labels, pred_labels))


def macro_f1(true_labels, pred_labels) -> float:
    """
    Unweighted mean F1 over the true classes after Hungarian remapping of
    the predicted clusters. A class no cluster maps to scores 0.
    """
    cont = Contingency.from_labels(true_labels, pred_labels)
    mapping, _ = hungarian_match(cont)
    true_labels = np.asarray(true_labels, dtype=int).ravel()
    return float(
        f1_score(true_labels,
                 remap(pred_labels, mapping),
                 labels=cont.true_classes,
                 average="macro",
                 zero_division=0))


def evaluate(true_labels, pred_labels) -> Dict[str, float]:
    """All four scores, keyed 'acc', 'nmi', 'ari' and 'f1'."""
    return {
        "acc": accuracy(true_labels, pred_labels),
        "nmi": nmi(true_labels, pred_labels),
        "ari": ari(true_labels, pred_labels),
        "f1": macro_f1(true_labels, pred_labels),
    }
