# -*- coding: utf-8 -*-
"""
Fusion of the attribute and structure embeddings into the final embedding:
convex blend, first/second order neighbourhood aggregation, self-correlation
recombination and a scaled skip connection.
"""
from dataclasses import dataclass, replace
from typing import Dict, Tuple

from scipy.special import expit

from cgcn.autodiff import Tensor, matmul, row_softmax, sigmoid, transpose
from cgcn.globals import ContractError
from cgcn.graph import NormalizedAdjacency

INIT_LAMBDA1 = 0.5
INIT_LAMBDA2 = 0.5
INIT_LAMBDA_B = 0.1


@dataclass(frozen=True)
class FusionParams:
    """
    Learnable fusion scalars, all 1x1 tensors. The blend weight is stored
    unconstrained and squashed by a sigmoid.
    """
    delta_raw: Tensor
    lambda1: Tensor
    lambda2: Tensor
    lambda_b: Tensor

    @classmethod
    def initial(cls, multi_order: bool = True) -> "FusionParams":
        return cls(
            Tensor(0.0, requires_grad=True),
            Tensor(INIT_LAMBDA1, requires_grad=True),
            Tensor(INIT_LAMBDA2 if multi_order else 0.0, requires_grad=True),
            Tensor(INIT_LAMBDA_B, requires_grad=True),
        )

    def named_tensors(self, prefix: str = "fusion") -> Dict[str, Tensor]:
        return {
            f"{prefix}.delta_raw": self.delta_raw,
            f"{prefix}.lambda1": self.lambda1,
            f"{prefix}.lambda2": self.lambda2,
            f"{prefix}.lambda_b": self.lambda_b,
        }

    def replace_tensors(self, named: Dict[str, Tensor],
                        prefix: str = "fusion") -> "FusionParams":
        return replace(
            self, **{
                name: named.get(f"{prefix}.{name}", getattr(self, name))
                for name in ("delta_raw", "lambda1", "lambda2", "lambda_b")
            })


@dataclass(frozen=True)
class FusionOutput:
    z_i: Tensor
    z1: Tensor
    z2: Tensor
    z_l: Tensor
    s: Tensor
    z_g: Tensor
    z_final: Tensor


def effective_coefficients(
        params: FusionParams) -> Tuple[float, float, float, float]:
    """(delta, lambda1, lambda2, lambda_b) after reparameterization."""
    return (float(expit(params.delta_raw.item())), params.lambda1.item(),
            params.lambda2.item(), params.lambda_b.item())


def fuse(params: FusionParams, z_ae: Tensor, z_gae: Tensor,
         adj: NormalizedAdjacency) -> FusionOutput:
    if z_ae.shape != z_gae.shape:
        raise ContractError(f"Embeddings differ in shape: {z_ae.shape} and "
                            f"{z_gae.shape}")
    if adj.n_nodes != z_ae.rows:
        raise ContractError(f"Adjacency has {adj.n_nodes} nodes, embeddings "
                            f"have {z_ae.rows}")

    delta = sigmoid(params.delta_raw)
    z_i = delta * z_ae + (1.0 - delta) * z_gae
    z1 = matmul(adj.a_tilde, z_i)
    z2 = matmul(adj.a_tilde_sq, z_i)
    z_l = params.lambda1 * z1 + params.lambda2 * z2
    s = row_softmax(matmul(z_l, transpose(z_l)))
    z_g = matmul(s, z_l)
    z_final = params.lambda_b * z_g + z_l
    return FusionOutput(z_i, z1, z2, z_l, s, z_g, z_final)
