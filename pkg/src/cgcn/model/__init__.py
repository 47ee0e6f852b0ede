from cgcn.model.encoders import (AEParams, GAEParams, AEOutput, GAEOutput,
                                 init_ae, init_gae, ae_forward, gae_forward)
from cgcn.model.fusion import (FusionParams, FusionOutput, fuse,
                               effective_coefficients)
from cgcn.model.clustering import (ClusterCenters, Distributions, KMeansResult,
                                   kmeans, soft_assign, target_distribution,
                                   kl_triplet_loss)
from cgcn.model.objectives import (LossWeights, LossParts, LossBreakdown,
                                   loss_ae, loss_igae, loss_contrastive,
                                   total_loss)
from cgcn.model.state import ModelState

__all__ = [
    "AEParams", "GAEParams", "AEOutput", "GAEOutput", "init_ae", "init_gae",
    "ae_forward", "gae_forward", "FusionParams", "FusionOutput", "fuse",
    "effective_coefficients", "ClusterCenters", "Distributions",
    "KMeansResult", "kmeans", "soft_assign", "target_distribution",
    "kl_triplet_loss", "LossWeights", "LossParts", "LossBreakdown",
    "loss_ae", "loss_igae", "loss_contrastive", "total_loss", "ModelState"
]
