# -*- coding: utf-8 -*-
"""
Attribute autoencoder (dense layers) and graph autoencoder (graph
convolution layers). Both expose their latent embedding and reconstructions.
"""
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from cgcn.autodiff import Tensor, activation, add, matmul, transpose
from cgcn.globals import ACTIVATIONS, ConfigurationError
from cgcn.graph import NormalizedAdjacency


@dataclass(frozen=True)
class Layer:
    weight: Tensor
    bias: Optional[Tensor]
    activation: str

    @property
    def in_dim(self) -> int:
        return self.weight.rows

    @property
    def out_dim(self) -> int:
        return self.weight.cols


@dataclass(frozen=True)
class _LayerStack:
    encoder: Tuple[Layer, ...]
    decoder: Tuple[Layer, ...]

    @property
    def in_dim(self) -> int:
        return self.encoder[0].in_dim

    @property
    def latent_dim(self) -> int:
        return self.encoder[-1].out_dim

    def named_tensors(self, prefix: str) -> Dict[str, Tensor]:
        named = {}
        for part in ("encoder", "decoder"):
            for i, layer in enumerate(getattr(self, part)):
                named[f"{prefix}.{part}.{i}.weight"] = layer.weight
                if layer.bias is not None:
                    named[f"{prefix}.{part}.{i}.bias"] = layer.bias
        return named

    def replace_tensors(self, named: Dict[str, Tensor], prefix: str):
        """New parameter set with tensors looked up by name, if present."""
        parts = {}
        for part in ("encoder", "decoder"):
            layers = []
            for i, layer in enumerate(getattr(self, part)):
                key = f"{prefix}.{part}.{i}"
                weight = named.get(f"{key}.weight", layer.weight)
                bias = named.get(f"{key}.bias", layer.bias)
                if weight.shape != layer.weight.shape:
                    raise ConfigurationError(
                        f"{key}.weight has shape {weight.shape}, "
                        f"expected {layer.weight.shape}")
                layers.append(replace(layer, weight=weight, bias=bias))
            parts[part] = tuple(layers)
        return replace(self, **parts)


@dataclass(frozen=True)
class AEParams(_LayerStack):
    """Dense encoder D -> ... -> d' and decoder d' -> ... -> D."""


@dataclass(frozen=True)
class GAEParams(_LayerStack):
    """Graph convolution encoder D -> ... -> d' and decoder d' -> ... -> D,
    weights only."""


@dataclass(frozen=True)
class AEOutput:
    latent: Tensor
    recon_features: Tensor


@dataclass(frozen=True)
class GAEOutput:
    latent: Tensor
    recon_features: Tensor
    recon_adjacency: Tensor


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, (fan_in, fan_out)),
                  requires_grad=True)


def _stack(dims: Sequence[int], act: str, rng, bias: bool):
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        last = i == len(dims) - 2
        layers.append(
            Layer(_xavier(rng, fan_in, fan_out),
                  Tensor(np.zeros((1, fan_out)), requires_grad=True)
                  if bias else None, "linear" if last else act))
    return tuple(layers)


def _check_activation(act: str):
    if act not in ACTIVATIONS:
        raise ConfigurationError(
            f"Unknown activation '{act}', expected one of {ACTIVATIONS}")


def init_ae(in_dim: int,
            hidden: Sequence[int],
            latent_dim: int,
            act: str = "relu",
            rng: np.random.Generator = None) -> AEParams:
    """
    Xavier-uniform weights and zero biases. Hidden layers use `act`, the last
    encoder and last decoder layers are linear.
    """
    _check_activation(act)
    rng = rng or np.random.default_rng(0)
    dims = [in_dim, *hidden, latent_dim]
    return AEParams(_stack(dims, act, rng, bias=True),
                    _stack(dims[::-1], act, rng, bias=True))


def init_gae(in_dim: int,
             hidden: Sequence[int],
             latent_dim: int,
             act: str = "relu",
             rng: np.random.Generator = None) -> GAEParams:
    _check_activation(act)
    rng = rng or np.random.default_rng(0)
    dims = [in_dim, *hidden, latent_dim]
    return GAEParams(_stack(dims, act, rng, bias=False),
                     _stack(dims[::-1], act, rng, bias=False))


def _dense(layers: Sequence[Layer], h: Tensor) -> Tensor:
    for layer in layers:
        h = matmul(h, layer.weight)
        if layer.bias is not None:
            h = add(h, layer.bias)
        h = activation(h, layer.activation)
    return h


def _graph_conv(layers: Sequence[Layer], h: Tensor, a_tilde: Tensor):
    for layer in layers:
        h = activation(matmul(a_tilde, matmul(h, layer.weight)),
                       layer.activation)
    return h


def ae_forward(params: AEParams, x: Tensor) -> AEOutput:
    if x.cols != params.in_dim:
        raise ConfigurationError(
            f"AE expects {params.in_dim} input features, got {x.cols}")
    latent = _dense(params.encoder, x)
    return AEOutput(latent, _dense(params.decoder, latent))


def gae_forward(params: GAEParams, x: Tensor,
                adj: NormalizedAdjacency) -> GAEOutput:
    """
    Graph autoencoder forward pass. Every layer computes act(A~ Z W); the
    reconstructed adjacency is the inner product of the latent embedding.
    """
    if x.cols != params.in_dim:
        raise ConfigurationError(
            f"GAE expects {params.in_dim} input features, got {x.cols}")
    if adj.n_nodes != x.rows:
        raise ConfigurationError(
            f"Adjacency has {adj.n_nodes} nodes, features have {x.rows}")
    latent = _graph_conv(params.encoder, x, adj.a_tilde)
    recon = _graph_conv(params.decoder, latent, adj.a_tilde)
    return GAEOutput(latent, recon, matmul(latent, transpose(latent)))
