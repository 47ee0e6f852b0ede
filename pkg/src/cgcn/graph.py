# -*- coding: utf-8 -*-
"""
Attributed graph datasets: reading and writing the three-file format,
normalized adjacency and a stochastic block model generator.
"""
import hashlib
import logging
import os
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from sklearn.preprocessing import StandardScaler, normalize

from cgcn.autodiff import Tensor
from cgcn.globals import (
    ConfigurationError,
    DatasetFormatError,
    DatasetValidationError,
    FEATURES_FNAME,
    EDGES_FNAME,
    DS_LABELS_FNAME,
    LOGGER_NAME,
)

logger = logging.getLogger(LOGGER_NAME)


@dataclass(frozen=True)
class GraphDataset:
    """
    Node features, undirected edges and (optionally) ground truth labels.

    Parameters
    ----------
    features: Tensor
        N x D node features.
    edges: tuple
        Unordered node index pairs (u, v) with u < v, no self loops.
    k: int
        Number of clusters.
    labels: tuple, optional (default: None)
        Ground truth cluster id of every node, in [0, k).
    name: str, optional (default: 'dataset')
        Name used in summaries.
    """
    features: Tensor
    edges: Tuple[Tuple[int, int], ...]
    k: int
    labels: Optional[Tuple[int, ...]] = None
    name: str = "dataset"

    def __post_init__(self):
        n = self.features.rows
        if self.k < 1:
            raise DatasetValidationError(f"Cluster count must be >= 1, "
                                         f"got {self.k}")
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise DatasetValidationError(
                    f"Edge ({u}, {v}) out of range for {n} nodes")
            if u == v:
                raise DatasetValidationError(
                    f"Self loop ({u}, {v}) stored; self loops are added "
                    f"during normalization")
        if self.labels is not None:
            if len(self.labels) != n:
                raise DatasetValidationError(
                    f"Got {len(self.labels)} labels for {n} nodes")
            bad = [lab for lab in self.labels if not 0 <= lab < self.k]
            if bad:
                raise DatasetValidationError(
                    f"Label {bad[0]} out of range [0, {self.k})")

    @property
    def n_nodes(self) -> int:
        return self.features.rows

    @property
    def n_features(self) -> int:
        return self.features.cols

    def adjacency(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency matrix without self loops."""
        a = np.zeros((self.n_nodes, self.n_nodes))
        if self.edges:
            idx = np.array(self.edges)
            a[idx[:, 0], idx[:, 1]] = 1.0
            a[idx[:, 1], idx[:, 0]] = 1.0
        return a

    def labels_array(self) -> Optional[np.ndarray]:
        if self.labels is None:
            return None
        return np.asarray(self.labels, dtype=int)


@dataclass(frozen=True)
class NormalizedAdjacency:
    a_tilde: Tensor
    a_tilde_sq: Tensor

    @property
    def n_nodes(self) -> int:
        return self.a_tilde.rows


def _dedup_edges(pairs: Sequence[Tuple[int, int]]) -> Tuple[Tuple[int, int],
                                                            ...]:
    seen = set()
    self_loops = 0
    for u, v in pairs:
        if u == v:
            self_loops += 1
            continue
        seen.add((min(u, v), max(u, v)))
    duplicates = len(pairs) - self_loops - len(seen)
    if duplicates:
        logger.info(f"Dropped {duplicates} duplicate or reversed edges")
    if self_loops:
        logger.info(f"Dropped {self_loops} self loops")
    return tuple(sorted(seen))


def _read_lines(path):
    with open(path, "r") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if line:
                yield lineno, line


def read_features(path) -> np.ndarray:
    rows = []
    for lineno, line in _read_lines(path):
        try:
            row = [float(v) for v in line.split(",")]
        except ValueError:
            raise DatasetFormatError(path, lineno,
                                     f"cannot parse reals from '{line}'")
        if rows and len(row) != len(rows[0]):
            raise DatasetFormatError(
                path, lineno,
                f"expected {len(rows[0])} columns, got {len(row)}")
        if not all(np.isfinite(row)):
            raise DatasetFormatError(path, lineno, "non-finite value")
        rows.append(row)
    if not rows:
        raise DatasetFormatError(path, 0, "no feature rows found")
    return np.array(rows, dtype=np.float64)


def read_edges(path, n_nodes: int) -> Tuple[Tuple[int, int], ...]:
    pairs = []
    for lineno, line in _read_lines(path):
        parts = line.split(",")
        try:
            if len(parts) != 2:
                raise ValueError
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise DatasetFormatError(path, lineno,
                                     f"expected 'u,v' got '{line}'")
        if not (0 <= u < n_nodes and 0 <= v < n_nodes):
            raise DatasetValidationError(
                f"{path}, line {lineno}: edge ({u}, {v}) out of range for "
                f"{n_nodes} nodes")
        pairs.append((u, v))
    return _dedup_edges(pairs)


def read_labels(path) -> Tuple[int, ...]:
    labels = []
    for lineno, line in _read_lines(path):
        try:
            labels.append(int(line))
        except ValueError:
            raise DatasetFormatError(path, lineno,
                                     f"expected an integer, got '{line}'")
    return tuple(labels)


def load_dataset(features_path,
                 edges_path,
                 labels_path=None,
                 k: Optional[int] = None,
                 name: str = None) -> GraphDataset:
    """
    Read a dataset stored in the three-file text format.

    Parameters
    ----------
    features_path: str
        Comma separated reals, one node per line.
    edges_path: str
        One 'u,v' pair of 0-based node indices per line. Duplicates and
        reversed pairs are dropped.
    labels_path: str, optional (default: None)
        One integer label per line.
    k: int, optional (default: None)
        Number of clusters. If None, inferred from the labels.
    name: str, optional
        Dataset name, defaults to the features file's directory name.

    Returns
    -------
    dataset: GraphDataset
        Validated dataset.
    """
    features = read_features(features_path)
    edges = read_edges(edges_path, features.shape[0])
    labels = read_labels(labels_path) if labels_path else None

    if k is None or k == 0:
        if labels is None:
            raise ConfigurationError(
                "Cluster count k is required when no labels are given")
        k = max(labels) + 1

    if name is None:
        name = os.path.basename(
            os.path.dirname(os.path.abspath(features_path)))

    return GraphDataset(Tensor(features), edges, int(k), labels, name)


def save_dataset(ds: GraphDataset, out_dir) -> Dict[str, str]:
    """
    Write a dataset in the three-file format that :func:`load_dataset`
    reads. Reals are written with 17 significant digits so reading the files
    back yields identical values.

    Returns
    -------
    paths: dict
        'features', 'edges' and (if labels exist) 'labels' file paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "features": os.path.join(out_dir, FEATURES_FNAME),
        "edges": os.path.join(out_dir, EDGES_FNAME),
    }
    np.savetxt(paths["features"], ds.features.data, fmt="%.17g",
               delimiter=",")
    np.savetxt(paths["edges"], np.array(ds.edges, dtype=int).reshape(-1, 2),
               fmt="%d", delimiter=",")
    if ds.labels is not None:
        paths["labels"] = os.path.join(out_dir, DS_LABELS_FNAME)
        np.savetxt(paths["labels"], ds.labels_array(), fmt="%d")
    return paths


def describe(ds: GraphDataset) -> Dict[str, int]:
    return {
        "nodes": ds.n_nodes,
        "edges": len(ds.edges),
        "clusters": ds.k,
        "features": ds.n_features,
    }


def fingerprint(ds: GraphDataset) -> str:
    """SHA-256 over features, edges and labels; equal datasets match."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(ds.features.data, dtype="<f8").tobytes())
    h.update(np.array(ds.edges, dtype="<i8").reshape(-1, 2).tobytes())
    if ds.labels is not None:
        h.update(np.asarray(ds.labels, dtype="<i8").tobytes())
    return h.hexdigest()


def preprocess_features(ds: GraphDataset,
                        standardize: bool = False,
                        row_normalize: bool = False) -> GraphDataset:
    """
    Optionally z-score every feature and/or scale every node's features to
    unit L2 norm. Returns the dataset unchanged when both flags are off.
    """
    if not (standardize or row_normalize):
        return ds
    x = ds.features.numpy()
    if standardize:
        x = StandardScaler().fit_transform(x)
    if row_normalize:
        x = normalize(x, norm="l2")
    return replace(ds, features=Tensor(x))


def normalize_adjacency(ds: GraphDataset) -> NormalizedAdjacency:
    """
    Symmetric normalization with self loops, D^-1/2 (A + I) D^-1/2, where D
    is the degree matrix of A + I. The square is precomputed for the second
    order neighbourhood.
    """
    a = ds.adjacency() + np.eye(ds.n_nodes)
    d_inv_sqrt = 1.0 / np.sqrt(a.sum(axis=1))
    a_tilde = d_inv_sqrt[:, None] * a * d_inv_sqrt[None, :]
    a_tilde = 0.5 * (a_tilde + a_tilde.T)
    return NormalizedAdjacency(Tensor(a_tilde), Tensor(a_tilde @ a_tilde))


def generate_sbm(k: int,
                 nodes_per_cluster: int,
                 p_in: float,
                 p_out: float,
                 d: int,
                 sep: float,
                 seed: int = 0,
                 name: str = "sbm") -> GraphDataset:
    """
    Stochastic block model with Gaussian node features.

    Parameters
    ----------
    k: int
        Number of blocks (clusters).
    nodes_per_cluster: int
        Nodes in every block; node ids are assigned block by block.
    p_in: float
        Edge probability inside a block.
    p_out: float
        Edge probability between blocks, 0 <= p_out <= p_in <= 1.
    d: int
        Feature dimension, at least k.
    sep: float
        Length of the cluster mean vectors (scaled unit vectors).
    seed: int, optional (default: 0)
        Seed for edges and features.

    Returns
    -------
    dataset: GraphDataset
        Synthetic dataset with ground truth labels.
    """
    if not 0.0 <= p_out <= p_in <= 1.0:
        raise ConfigurationError(
            f"Need 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}")
    if sep < 0:
        raise ConfigurationError(f"sep must be >= 0, got {sep}")
    if k < 1 or nodes_per_cluster < 1:
        raise ConfigurationError("k and nodes_per_cluster must be >= 1")
    if d < k:
        raise ConfigurationError(
            f"Feature dimension d={d} must be >= k={k} so that every "
            f"cluster gets its own mean direction")

    probs = np.full((k, k), p_out)
    np.fill_diagonal(probs, p_in)
    graph = nx.stochastic_block_model([nodes_per_cluster] * k,
                                      probs.tolist(), seed=seed)
    edges = tuple(sorted((min(u, v), max(u, v)) for u, v in graph.edges()))

    labels = np.repeat(np.arange(k), nodes_per_cluster)
    rng = np.random.default_rng(seed)
    means = sep * np.eye(k, d)
    features = means[labels] + rng.standard_normal((labels.size, d))

    return GraphDataset(Tensor(features), edges, k,
                        tuple(int(v) for v in labels), name)
