# -*- coding: utf-8 -*-
"""
Self-supervised clustering head: K-means center initialization, Student-t
soft assignments, the sharpened target distribution and the triplet KL loss.
"""
import logging
from dataclasses import dataclass, replace
from typing import Dict, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from cgcn.autodiff import (
    Tensor,
    log,
    matmul,
    mul,
    power,
    row_sum,
    sum_all,
    transpose,
)
from cgcn.globals import (
    ConfigurationError,
    ContractError,
    DimensionError,
    EPS,
    LOGGER_NAME,
)

logger = logging.getLogger(LOGGER_NAME)

ROW_SUM_TOL = 1e-6


@dataclass(frozen=True)
class ClusterCenters:
    """
    Learnable cluster centers and the Student-t degrees of freedom.

    Parameters
    ----------
    centers: Tensor
        K x d' centers.
    v: float, optional (default: 1.0)
        Degrees of freedom, > 0.
    """
    centers: Tensor
    v: float = 1.0

    def __post_init__(self):
        if self.v <= 0:
            raise ConfigurationError(f"Degrees of freedom must be > 0, "
                                     f"got {self.v}")

    @property
    def k(self) -> int:
        return self.centers.rows

    def named_tensors(self, prefix: str = "centers") -> Dict[str, Tensor]:
        return {prefix: self.centers}

    def replace_tensors(self, named: Dict[str, Tensor],
                        prefix: str = "centers") -> "ClusterCenters":
        return replace(self, centers=named.get(prefix, self.centers))


@dataclass(frozen=True)
class Distributions:
    q_fused: Tensor
    q_ae: Tensor
    q_gae: Tensor
    p: Tensor


@dataclass(frozen=True)
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    inertia: float
    n_iter: int


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator):
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    closest = cdist(x, x[chosen], "sqeuclidean").ravel()
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            # all remaining points coincide with a chosen center
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        closest = np.minimum(
            closest,
            cdist(x, x[idx:idx + 1], "sqeuclidean").ravel())
    return x[chosen].copy()


def _lloyd(x: np.ndarray, centers: np.ndarray, tol: float, max_iter: int):
    k = centers.shape[0]
    for it in range(1, max_iter + 1):
        dist = cdist(x, centers, "sqeuclidean")
        labels = dist.argmin(axis=1)
        new = centers.copy()
        spread = dist.min(axis=1)
        for j in range(k):
            members = labels == j
            if members.any():
                new[j] = x[members].mean(axis=0)
            else:
                far = int(spread.argmax())
                # one empty cluster per point
                spread[far] = -np.inf
                logger.warning(f"K-means cluster {j} is empty, re-seeding "
                               f"with point {far}")
                new[j] = x[far]
        shift = np.sqrt(((new - centers)**2).sum(axis=1)).max()
        centers = new
        if shift < tol:
            break
    dist = cdist(x, centers, "sqeuclidean")
    labels = dist.argmin(axis=1)
    inertia = float(dist[np.arange(x.shape[0]), labels].sum())
    return centers, labels, inertia, it


def kmeans(x,
           k: int,
           seed: int = 0,
           n_init: int = 10,
           tol: float = 1e-6,
           max_iter: int = 300) -> KMeansResult:
    """
    K-means with k-means++ seeding and Lloyd iterations.

    Parameters
    ----------
    x: Tensor or np.ndarray
        N x d points.
    k: int
        Number of clusters, 1 <= k <= N.
    seed: int, optional (default: 0)
        Seed of the initialization; equal seeds give equal results.
    n_init: int, optional (default: 10)
        Number of seedings, the result with the lowest inertia is kept.
    tol: float, optional (default: 1e-6)
        Stop once no center moves further than this.
    max_iter: int, optional (default: 300)
        Maximum number of Lloyd iterations per seeding.

    Returns
    -------
    result: KMeansResult
        Centers (k x d), labels (N), inertia and iterations of the best run.
    """
    x = x.numpy() if isinstance(x, Tensor) else np.asarray(x, dtype=float)
    n = x.shape[0]
    if k < 1 or n < k:
        raise ConfigurationError(
            f"K-means needs 1 <= k <= N, got k={k} for N={n} points")

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        centers, labels, inertia, n_iter = _lloyd(
            x, _kmeans_pp(x, k, rng), tol, max_iter)
        if best is None or inertia < best.inertia:
            best = KMeansResult(centers, labels, inertia, n_iter)
    logger.debug(f"K-means: inertia {best.inertia:.6g} after "
                 f"{best.n_iter} iterations")
    return best


def soft_assign(z: Tensor, cc: ClusterCenters) -> Tensor:
    """
    Student-t kernel between embeddings and centers,
    q_ij ~ (1 + |z_i - u_j|^2 / v) ^ -((v + 1) / 2), normalized per row.
    """
    if z.cols != cc.centers.cols:
        raise DimensionError.from_shapes("soft_assign", z.shape,
                                         cc.centers.shape)
    u = cc.centers
    z_sq = row_sum(mul(z, z))
    u_sq = transpose(row_sum(mul(u, u)))
    dist = z_sq + u_sq - 2.0 * matmul(z, transpose(u))
    kernel = power(1.0 + dist / cc.v, -(cc.v + 1.0) / 2.0)
    return kernel / row_sum(kernel)


def _check_row_stochastic(name: str, q: Tensor):
    if not np.allclose(q.data.sum(axis=1), 1.0, atol=ROW_SUM_TOL):
        raise ContractError(f"{name} is not row-stochastic")


def target_distribution(q: Tensor) -> Tensor:
    """
    Sharpened target p_ij = (q_ij^2 / f_j) / sum_j' (q_ij'^2 / f_j') with
    cluster frequencies f_j = sum_i q_ij. Returned detached from any tape.
    """
    _check_row_stochastic("q", q)
    weight = q.data**2 / np.maximum(q.data.sum(axis=0), EPS)
    return Tensor(weight / weight.sum(axis=1, keepdims=True))


def kl_triplet_loss(p: Tensor, q_fused: Tensor, q_ae: Tensor,
                    q_gae: Tensor) -> Tensor:
    """
    KL divergence of the averaged soft assignments from the target,
    sum_ij p_ij log(p_ij / ((q_ij + q'_ij + q''_ij) / 3)).
    """
    for name, q in (("q_fused", q_fused), ("q_ae", q_ae), ("q_gae", q_gae)):
        if q.shape != p.shape:
            raise ContractError(f"{name} has shape {q.shape}, target "
                                f"distribution has {p.shape}")
        _check_row_stochastic(name, q)
    _check_row_stochastic("p", p)

    target = p.detach()
    entropy_term = float(
        np.sum(target.data * np.log(np.maximum(target.data, EPS))))
    mixture = (q_fused + q_ae + q_gae) / 3.0
    return entropy_term - sum_all(mul(target, log(mixture, floor=EPS)))


def distributions(z_final: Tensor, z_ae: Tensor, z_gae: Tensor,
                  cc: ClusterCenters, p: Tensor = None) -> Distributions:
    """Q, Q', Q'' from one shared center set; P from Q unless passed."""
    q_fused = soft_assign(z_final, cc)
    if p is None:
        p = target_distribution(q_fused)
    return Distributions(q_fused, soft_assign(z_ae, cc),
                         soft_assign(z_gae, cc), p)


def hard_labels(q: Tensor) -> Tuple[int, ...]:
    return tuple(int(v) for v in q.data.argmax(axis=1))
