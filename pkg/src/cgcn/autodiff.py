# -*- coding: utf-8 -*-
# The MIT License (MIT)
#
# Copyright (c) 2024, cgcn developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
"""
Dense 2-D tensors with define-by-run reverse mode differentiation.

All values are stored as read-only float64 numpy arrays. Operations on tensors
that require gradients are recorded on the active :class:`Tape`, which is
opened with a ``with`` block around the forward pass::

    w = Tensor(np.eye(2), requires_grad=True)
    with Tape() as tape:
        loss = frobenius_sq(matmul(w, x), y)
    grads = tape.backward(loss)   # node id -> Tensor
    grads[w.node]
"""
import itertools
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit, softmax

from cgcn.globals import (
    ACTIVATIONS,
    ConfigurationError,
    ContractError,
    DimensionError,
    NonFiniteError,
    EPS,
)

_node_ids = itertools.count()
_active_tape: ContextVar = ContextVar("cgcn_active_tape", default=None)

Operand = Union["Tensor", float, int]
BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


def _as_matrix(data) -> np.ndarray:
    arr = np.array(data, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise DimensionError(
            f"Tensors are 2-D, got data with {arr.ndim} dimensions")
    arr.setflags(write=False)
    return arr


class Tensor:
    """
    Immutable dense matrix, optionally tracked for differentiation.

    Parameters
    ----------
    data: array_like
        Values. Scalars become 1x1 and 1-D input becomes a row vector.
    requires_grad: bool, optional (default: False)
        Mark the tensor as a leaf that gradients are computed for.
    """

    __slots__ = ("data", "requires_grad", "node", "tape")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_matrix(data)
        if not np.all(np.isfinite(self.data)):
            raise NonFiniteError("Tensor")
        self.requires_grad = bool(requires_grad)
        self.node = next(_node_ids)
        self.tape = None

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool, tape) -> "Tensor":
        out = cls.__new__(cls)
        out.data = arr
        out.requires_grad = requires_grad
        out.node = next(_node_ids)
        out.tape = tape
        return out

    @classmethod
    def eye(cls, n: int, requires_grad=False) -> "Tensor":
        return cls(np.eye(n), requires_grad=requires_grad)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def values(self) -> List[float]:
        """Values in row-major order."""
        return self.data.ravel().tolist()

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def item(self) -> float:
        if self.shape != (1, 1):
            raise ContractError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def numpy(self) -> np.ndarray:
        return np.array(self.data)

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data, False, None)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __add__(self, other: Operand) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: Operand) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: Operand) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: Operand) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: Operand) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: Operand) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: Operand) -> "Tensor":
        return div(self, other)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


@dataclass(frozen=True)
class TapeRecord:
    op: str
    inputs: Tuple[int, ...]
    needs_grad: Tuple[bool, ...]
    output: int
    backward: BackwardFn


class Tape:
    """
    Ordered record of the operations of one forward pass.

    Records are appended while the tape is active, so every record's inputs
    precede it. A fresh tape is opened for every forward pass.
    """

    def __init__(self):
        self.records: List[TapeRecord] = []
        self._produced = set()
        self._leaves: Dict[int, Tuple[int, int]] = {}
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc):
        _active_tape.reset(self._token)
        self._token = None
        return False

    def __len__(self):
        return len(self.records)

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor,
               backward: BackwardFn):
        for t in inputs:
            if (t.requires_grad and t.node not in self._produced
                    and t.node not in self._leaves):
                self._leaves[t.node] = t.shape
        self.records.append(
            TapeRecord(op, tuple(t.node for t in inputs),
                       tuple(t.requires_grad for t in inputs), output.node,
                       backward))
        self._produced.add(output.node)

    def backward(self, loss: Tensor) -> Dict[int, Tensor]:
        """
        Replay the tape in reverse from a scalar loss.

        Parameters
        ----------
        loss: Tensor
            1x1 tensor produced on this tape.

        Returns
        -------
        grads: dict
            Gradient of the loss for every leaf with ``requires_grad`` that was
            used on this tape, keyed by node id. Leaves the loss does not
            depend on get zeros.
        """
        if loss.shape != (1, 1):
            raise ContractError(
                f"backward needs a 1x1 loss, got shape {loss.shape}")
        if loss.tape is not self or loss.node not in self._produced:
            raise ContractError("The loss was not recorded on this tape")

        grads = {loss.node: np.ones((1, 1))}
        for rec in reversed(self.records):
            g = grads.pop(rec.output, None)
            if g is None:
                continue
            for node, needed, g_in in zip(rec.inputs, rec.needs_grad,
                                          rec.backward(g)):
                if not needed or g_in is None:
                    continue
                if node in grads:
                    grads[node] = grads[node] + g_in
                else:
                    grads[node] = g_in

        return {
            node: Tensor(grads[node]) if node in grads else
            Tensor(np.zeros(shape))
            for node, shape in self._leaves.items()
        }

    def gradient(self, loss: Tensor,
                 wrt: Sequence[Tensor]) -> List[np.ndarray]:
        """Gradients of ``loss`` for the passed leaves, zeros if unused."""
        grads = self.backward(loss)
        return [
            grads[t.node].numpy() if t.node in grads else np.zeros(t.shape)
            for t in wrt
        ]


def backward(loss: Tensor) -> Dict[int, Tensor]:
    """Gradient map of a scalar loss, see :meth:`Tape.backward`."""
    if loss.tape is None:
        raise ContractError("The loss is not recorded on any tape. Run the "
                            "forward pass inside `with Tape():`.")
    return loss.tape.backward(loss)


def _lift(x: Operand) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def _result(op: str, out: np.ndarray, inputs: Sequence[Tensor],
            backward_fn: BackwardFn) -> Tensor:
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(op)
    out.setflags(write=False)
    requires_grad = any(t.requires_grad for t in inputs)
    tape = _active_tape.get() if requires_grad else None
    res = Tensor._wrap(out, requires_grad, tape)
    if tape is not None:
        tape.record(op, inputs, res, backward_fn)
    return res


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> Tuple[int, int]:
    shape = []
    for da, db in zip(a.shape, b.shape):
        if da == db or db == 1:
            shape.append(da)
        elif da == 1:
            shape.append(db)
        else:
            raise DimensionError.from_shapes(op, a.shape, b.shape)
    return tuple(shape)


def _unbroadcast(g: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    for axis in (0, 1):
        if shape[axis] == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _same_shape(op: str, a: Tensor, b: Tensor):
    if a.shape != b.shape:
        raise DimensionError.from_shapes(op, a.shape, b.shape)


def add(a: Operand, b: Operand) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_shape("add", a, b)
    return _result("add", a.data + b.data, (a, b),
                   lambda g: (_unbroadcast(g, a.shape),
                              _unbroadcast(g, b.shape)))


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_shape("sub", a, b)
    return _result("sub", a.data - b.data, (a, b),
                   lambda g: (_unbroadcast(g, a.shape),
                              _unbroadcast(-g, b.shape)))


def mul(a: Operand, b: Operand) -> Tensor:
    """Elementwise product, scalars and row/column vectors broadcast."""
    a, b = _lift(a), _lift(b)
    _broadcast_shape("mul", a, b)
    return _result("mul", a.data * b.data, (a, b),
                   lambda g: (_unbroadcast(g * b.data, a.shape),
                              _unbroadcast(g * a.data, b.shape)))


def div(a: Operand, b: Operand) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_shape("div", a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data
    return _result(
        "div", out, (a, b),
        lambda g: (_unbroadcast(g / b.data, a.shape),
                   _unbroadcast(-g * a.data / (b.data * b.data), b.shape)))


def neg(a: Tensor) -> Tensor:
    return _result("neg", -a.data, (a, ), lambda g: (-g, ))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product.

    Raises
    ------
    DimensionError
        If ``a.cols != b.rows``.
    """
    if a.cols != b.rows:
        raise DimensionError.from_shapes("matmul", a.shape, b.shape)
    return _result("matmul", a.data @ b.data, (a, b),
                   lambda g: (g @ b.data.T, a.data.T @ g))


def transpose(a: Tensor) -> Tensor:
    return _result("transpose", np.array(a.data.T), (a, ), lambda g: (g.T, ))


def activation(a: Tensor, kind: str) -> Tensor:
    """
    Elementwise nonlinearity.

    Parameters
    ----------
    a: Tensor
        Input.
    kind: str
        One of 'relu', 'tanh', 'sigmoid' or 'linear'.
    """
    if kind == "relu":
        mask = a.data > 0
        return _result("relu", a.data * mask, (a, ), lambda g: (g * mask, ))
    elif kind == "tanh":
        out = np.tanh(a.data)
        return _result("tanh", out, (a, ), lambda g: (g * (1.0 - out**2), ))
    elif kind == "sigmoid":
        out = expit(a.data)
        return _result("sigmoid", out, (a, ),
                       lambda g: (g * out * (1.0 - out), ))
    elif kind == "linear":
        return _result("linear", np.array(a.data), (a, ), lambda g: (g, ))
    else:
        raise ConfigurationError(
            f"Unknown activation '{kind}', expected one of {ACTIVATIONS}")


def sigmoid(a: Tensor) -> Tensor:
    return activation(a, "sigmoid")


def row_softmax(a: Tensor) -> Tensor:
    """Softmax of every row, computed with the row maximum subtracted."""
    out = softmax(a.data, axis=1)

    def _back(g):
        return (out * (g - np.sum(g * out, axis=1, keepdims=True)), )

    return _result("row_softmax", out, (a, ), _back)


def frobenius_sq(a: Tensor, b: Tensor) -> Tensor:
    """Sum of squared elementwise differences as a 1x1 tensor."""
    _same_shape("frobenius_sq", a, b)
    diff = a.data - b.data
    out = np.array([[np.sum(diff * diff)]])
    return _result("frobenius_sq", out, (a, b),
                   lambda g: (2.0 * g[0, 0] * diff, -2.0 * g[0, 0] * diff))


def sum_all(a: Tensor) -> Tensor:
    out = np.array([[np.sum(a.data)]])
    return _result("sum_all", out, (a, ),
                   lambda g: (np.full(a.shape, g[0, 0]), ))


def row_sum(a: Tensor) -> Tensor:
    """Sum over columns, giving a column vector."""
    out = np.sum(a.data, axis=1, keepdims=True)
    return _result("row_sum", out, (a, ),
                   lambda g: (np.broadcast_to(g, a.shape).copy(), ))


def log(a: Tensor, floor: float = EPS) -> Tensor:
    """Natural logarithm of ``max(a, floor)``."""
    clipped = np.maximum(a.data, floor)
    active = a.data > floor
    return _result("log", np.log(clipped), (a, ),
                   lambda g: (g * active / clipped, ))


def power(a: Tensor, exponent: float) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.power(a.data, exponent)
    return _result(
        "power", out, (a, ),
        lambda g: (g * exponent * np.power(a.data, exponent - 1.0), ))


def check_gradients(fn: Callable[..., Tensor],
                    inputs: Sequence,
                    eps: float = 1e-5,
                    floor: float = 1e-3) -> float:
    """
    Compare analytic gradients against central finite differences.

    Parameters
    ----------
    fn: Callable
        Maps tensors (one per entry in `inputs`) to a 1x1 tensor.
    inputs: list
        Arrays at which the gradient is checked.
    eps: float, optional (default: 1e-5)
        Finite difference step.
    floor: float, optional (default: 1e-3)
        Smallest denominator of the error. Components with magnitude above
        `floor` are compared by relative error; below it the absolute error
        is scaled by `floor`.

    Returns
    -------
    max_rel_err: float
        Largest |analytic - numeric| / max(|analytic|, |numeric|, floor).
    """
    arrays = [_as_matrix(x) for x in inputs]
    leaves = [Tensor(x, requires_grad=True) for x in arrays]
    with Tape() as tape:
        loss = fn(*leaves)
    analytic = tape.gradient(loss, leaves)

    worst = 0.0
    for i, x in enumerate(arrays):
        for idx in np.ndindex(x.shape):
            shifted = []
            for sign in (1.0, -1.0):
                moved = np.array(x)
                moved[idx] += sign * eps
                args = [Tensor(moved) if j == i else Tensor(arrays[j])
                        for j in range(len(arrays))]
                shifted.append(fn(*args).item())
            numeric = (shifted[0] - shifted[1]) / (2.0 * eps)
            a = analytic[i][idx]
            err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, err)
    return worst
