# -*- coding: utf-8 -*-
"""
All learnable parameters of one model, addressable by name.
"""
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Optional

from cgcn.autodiff import Tensor
from cgcn.model.clustering import ClusterCenters
from cgcn.model.encoders import AEParams, GAEParams
from cgcn.model.fusion import FusionParams


@dataclass(frozen=True)
class ModelState:
    """
    Parameters
    ----------
    ae: AEParams
        Attribute autoencoder.
    gae: GAEParams
        Graph autoencoder.
    fusion: FusionParams
        Fusion scalars.
    centers: ClusterCenters, optional (default: None)
        Set once K-means has initialized the clustering head.
    frozen: frozenset, optional
        Names of tensors that the optimizer must not update.
    """
    ae: AEParams
    gae: GAEParams
    fusion: FusionParams
    centers: Optional[ClusterCenters] = None
    frozen: FrozenSet[str] = field(default_factory=frozenset)

    def named_tensors(self) -> Dict[str, Tensor]:
        named = {}
        named.update(self.ae.named_tensors("ae"))
        named.update(self.gae.named_tensors("gae"))
        named.update(self.fusion.named_tensors("fusion"))
        if self.centers is not None:
            named.update(self.centers.named_tensors("centers"))
        return named

    def trainable(self, prefixes=None) -> Dict[str, Tensor]:
        """Named tensors that are not frozen, optionally by name prefix."""
        return {
            name: t
            for name, t in self.named_tensors().items()
            if name not in self.frozen and (prefixes is None or any(
                name.startswith(p) for p in prefixes))
        }

    def replace_tensors(self, named: Dict[str, Tensor]) -> "ModelState":
        centers = self.centers
        if centers is not None:
            centers = centers.replace_tensors(named, "centers")
        return replace(self,
                       ae=self.ae.replace_tensors(named, "ae"),
                       gae=self.gae.replace_tensors(named, "gae"),
                       fusion=self.fusion.replace_tensors(named, "fusion"),
                       centers=centers)
