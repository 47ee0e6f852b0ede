# -*- coding: utf-8 -*-
"""
Loss terms: feature reconstruction of the autoencoder, feature and adjacency
reconstruction of the graph autoencoder, embedding alignment, and the
weighted total.
"""
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Tuple

from cgcn.autodiff import Tensor, frobenius_sq, matmul
from cgcn.globals import ConfigurationError, DimensionError
from cgcn.graph import NormalizedAdjacency

PHASES = ("pretrain", "train")


@dataclass(frozen=True)
class LossWeights:
    """
    Parameters
    ----------
    gamma: float
        Weight of the adjacency reconstruction inside the GAE loss.
    lambda_kl: float
        Weight of the triplet KL term.
    alpha: float
        Weight of the GAE/AE latent alignment.
    beta: float
        Weight of the fused/AE latent alignment.
    """
    gamma: float = 0.1
    lambda_kl: float = 10.0
    alpha: float = 0.5
    beta: float = 0.5

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ConfigurationError(
                    f"Loss weight {name} must be >= 0, got {value}")


@dataclass(frozen=True)
class LossParts:
    """Unweighted loss tensors of one forward pass."""
    l_ae: Tensor
    l_f: Tensor
    l_s: Tensor
    l_pre: Tensor
    l_train: Tensor
    l_kl: Tensor


@dataclass(frozen=True)
class LossBreakdown:
    l_ae: float
    l_f: float
    l_s: float
    l_igae: float
    l_pre: float
    l_train: float
    l_c: float
    l_kl: float
    total: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def _zero() -> Tensor:
    return Tensor(0.0)


def _scale(n: int, mean: bool) -> float:
    return 1.0 / n if mean else 1.0


def loss_ae(recon: Tensor, x: Tensor, mean: bool = False) -> Tensor:
    """Sum of squared reconstruction errors; divided by N*D if `mean`."""
    if recon.shape != x.shape:
        raise DimensionError.from_shapes("loss_ae", recon.shape, x.shape)
    return frobenius_sq(recon, x) * _scale(x.rows * x.cols, mean)


def loss_igae(recon_feat: Tensor,
              recon_adj: Tensor,
              x: Tensor,
              adj: NormalizedAdjacency,
              gamma: float,
              mean: bool = False) -> Tuple[Tensor, Tensor, Tensor]:
    """
    Graph autoencoder loss.

    Returns
    -------
    l_f, l_s, l_igae: Tensor
        l_f = |A~X - recon_feat|^2 / 2N, l_s = |A~ - recon_adj|^2 / 2N and
        l_igae = l_f + gamma * l_s. With `mean`, both squared norms are
        divided by their element count instead of 2N.
    """
    n = x.rows
    if adj.n_nodes != n:
        raise DimensionError.from_shapes("loss_igae", adj.a_tilde.shape,
                                         x.shape)
    ax = matmul(adj.a_tilde, x)
    if recon_feat.shape != ax.shape:
        raise DimensionError.from_shapes("loss_igae", recon_feat.shape,
                                         ax.shape)
    if recon_adj.shape != adj.a_tilde.shape:
        raise DimensionError.from_shapes("loss_igae", recon_adj.shape,
                                         adj.a_tilde.shape)
    if mean:
        l_f = frobenius_sq(ax, recon_feat) * (1.0 / (n * x.cols))
        l_s = frobenius_sq(adj.a_tilde, recon_adj) * (1.0 / (n * n))
    else:
        l_f = frobenius_sq(ax, recon_feat) * (1.0 / (2.0 * n))
        l_s = frobenius_sq(adj.a_tilde, recon_adj) * (1.0 / (2.0 * n))
    return l_f, l_s, l_f + gamma * l_s


def loss_contrastive(z_gae_lat: Tensor,
                     z_ae_lat: Tensor,
                     z_final: Optional[Tensor],
                     alpha: float,
                     beta: float,
                     phase: str,
                     mean: bool = False) -> Tuple[Tensor, Tensor, Tensor]:
    """
    Alignment of latent embeddings, without negative pairs.

    l_pre = |z_gae_lat - z_ae_lat|^2, l_train = |z_final - z_ae_lat|^2 (zero
    in the pretrain phase or when `z_final` is None) and
    l_c = alpha * l_pre + beta * l_train.
    """
    if phase not in PHASES:
        raise ConfigurationError(f"Unknown phase '{phase}', expected one of "
                                 f"{PHASES}")
    if z_gae_lat.shape != z_ae_lat.shape:
        raise DimensionError.from_shapes("loss_contrastive", z_gae_lat.shape,
                                         z_ae_lat.shape)
    scale = _scale(z_ae_lat.rows * z_ae_lat.cols, mean)
    l_pre = frobenius_sq(z_gae_lat, z_ae_lat) * scale
    if phase == "pretrain" or z_final is None:
        l_train = _zero()
    else:
        if z_final.shape != z_ae_lat.shape:
            raise DimensionError.from_shapes("loss_contrastive",
                                             z_final.shape, z_ae_lat.shape)
        l_train = frobenius_sq(z_final, z_ae_lat) * scale
    return l_pre, l_train, alpha * l_pre + beta * l_train


def total_loss(parts: LossParts,
               weights: LossWeights) -> Tuple[Tensor, LossBreakdown]:
    """
    L = L_ae + L_igae + L_c + lambda * L_kl.

    Returns
    -------
    total: Tensor
        1x1 tensor to run backward on.
    breakdown: LossBreakdown
        Every term as a float, for logging.
    """
    l_igae = parts.l_f + weights.gamma * parts.l_s
    l_c = weights.alpha * parts.l_pre + weights.beta * parts.l_train
    total = parts.l_ae + l_igae + l_c + weights.lambda_kl * parts.l_kl
    breakdown = LossBreakdown(
        l_ae=parts.l_ae.item(),
        l_f=parts.l_f.item(),
        l_s=parts.l_s.item(),
        l_igae=l_igae.item(),
        l_pre=parts.l_pre.item(),
        l_train=parts.l_train.item(),
        l_c=l_c.item(),
        l_kl=parts.l_kl.item(),
        total=total.item(),
    )
    return total, breakdown


def zero_parts(**parts: Tensor) -> LossParts:
    """LossParts with every term not passed set to 0."""
    names = ("l_ae", "l_f", "l_s", "l_pre", "l_train", "l_kl")
    unknown = set(parts) - set(names)
    if unknown:
        raise ConfigurationError(f"Unknown loss terms {sorted(unknown)}")
    return LossParts(**{name: parts.get(name, _zero()) for name in names})
