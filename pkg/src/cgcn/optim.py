# -*- coding: utf-8 -*-
"""
Adaptive moment estimation over named tensors.
"""
from typing import Dict

import numpy as np

from cgcn.autodiff import Tensor
from cgcn.globals import ConfigurationError

OPTIMIZERS = ("adam", )


class Adam:
    """
    Adam with bias corrected first and second moments. Tensors are immutable,
    so :meth:`step` returns updated leaves instead of modifying them.

    Parameters
    ----------
    lr: float, optional (default: 1e-3)
        Learning rate, >= 0. A rate of 0 leaves all parameters unchanged.
    beta1: float, optional (default: 0.9)
        Decay of the first moment.
    beta2: float, optional (default: 0.999)
        Decay of the second moment.
    eps: float, optional (default: 1e-8)
        Added to the root of the second moment.
    """

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr < 0:
            raise ConfigurationError(f"Learning rate must be >= 0, got {lr}")
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ConfigurationError("Adam decay rates must be in [0, 1)")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def step(self, params: Dict[str, Tensor],
             grads: Dict[str, np.ndarray]) -> Dict[str, Tensor]:
        """
        One update of every tensor in `params`. Tensors without an entry in
        `grads` are returned unchanged.

        Returns
        -------
        updated: dict
            Name -> new leaf tensor with ``requires_grad=True``.
        """
        self.t += 1
        updated = {}
        for name, param in params.items():
            grad = grads.get(name)
            if grad is None:
                updated[name] = param
                continue
            m = self.m.get(name, np.zeros(param.shape))
            v = self.v.get(name, np.zeros(param.shape))
            m = self.beta1 * m + (1 - self.beta1) * grad
            v = self.beta2 * v + (1 - self.beta2) * grad * grad
            self.m[name], self.v[name] = m, v

            m_hat = m / (1 - self.beta1**self.t)
            v_hat = v / (1 - self.beta2**self.t)
            updated[name] = Tensor(
                param.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps),
                requires_grad=True)
        return updated


def make_optimizer(kind: str, lr: float) -> Adam:
    if kind not in OPTIMIZERS:
        raise ConfigurationError(f"Unknown optimizer '{kind}', expected one "
                                 f"of {OPTIMIZERS}")
    return Adam(lr=lr)
