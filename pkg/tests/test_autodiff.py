# -*- coding: utf-8 -*-
'''
Testing tensors, the tape and the differentiable operations
'''

import numpy as np
import numpy.testing as nptest
import pytest

from cgcn.autodiff import (
    Tape,
    Tensor,
    activation,
    add,
    backward,
    check_gradients,
    div,
    frobenius_sq,
    log,
    matmul,
    mul,
    power,
    row_softmax,
    row_sum,
    sub,
    sum_all,
    transpose,
)
from cgcn.globals import (
    ConfigurationError,
    ContractError,
    DimensionError,
    NonFiniteError,
)

TOL = 1e-4


def test_tensor_shapes():
    assert Tensor(3.0).shape == (1, 1)
    assert Tensor([1.0, 2.0]).shape == (1, 2)
    t = Tensor([[1, 2, 3], [4, 5, 6]])
    assert (t.rows, t.cols) == (2, 3)
    assert t.values == [1, 2, 3, 4, 5, 6]
    assert t.T.shape == (3, 2)
    with pytest.raises(DimensionError):
        Tensor(np.zeros((2, 2, 2)))


def test_tensor_is_immutable():
    t = Tensor(np.eye(2))
    with pytest.raises(ValueError):
        t.data[0, 0] = 5.0
    copy = t.numpy()
    copy[0, 0] = 5.0
    assert t.data[0, 0] == 1.0


def test_non_finite_rejected():
    with pytest.raises(NonFiniteError):
        Tensor([np.nan])
    with pytest.raises(NonFiniteError):
        div(Tensor(1.0), Tensor(0.0))


def test_matmul_examples():
    a = Tensor([[1, 2], [3, 4]])
    nptest.assert_array_equal(matmul(a, Tensor.eye(2)).data, a.data)
    with pytest.raises(DimensionError) as e:
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    assert "(2, 3)" in str(e.value)


def test_matmul_swaps_columns():
    a = Tensor([[1, 2], [3, 4]])
    swap = Tensor([[0, 1], [1, 0]])
    nptest.assert_array_equal(matmul(a, swap).data, [[2, 1], [4, 3]])


def test_matmul_is_associative(rng):
    for _ in range(100):
        a, b, c = (Tensor(rng.standard_normal((4, 4))) for _ in range(3))
        diff = matmul(matmul(a, b), c).data - matmul(a, matmul(b, c)).data
        assert np.linalg.norm(diff) < 1e-9


def test_broadcasting():
    a = Tensor(np.ones((3, 2)))
    nptest.assert_array_equal(add(a, Tensor([[1.0, 2.0]])).data,
                              [[2, 3]] * 3)
    nptest.assert_array_equal(mul(a, Tensor([[2.0], [3.0], [4.0]])).data,
                              [[2, 2], [3, 3], [4, 4]])
    nptest.assert_array_equal((2.0 * a).data, np.full((3, 2), 2.0))
    with pytest.raises(DimensionError):
        add(a, Tensor(np.ones((2, 3))))


def test_backward_simple_product():
    x = Tensor([[3.0]], requires_grad=True)
    y = Tensor([[4.0]], requires_grad=True)
    with Tape() as tape:
        z = x * y + x
    grads = tape.backward(z)
    assert grads[x.node].item() == 5.0
    assert grads[y.node].item() == 3.0


def test_backward_accumulates_shared_inputs():
    x = Tensor([[2.0]], requires_grad=True)
    with Tape():
        z = x * x * x
    assert backward(z)[x.node].item() == pytest.approx(12.0)


def test_unused_leaf_gets_zero_gradient():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    unused = Tensor(np.ones((1, 3)), requires_grad=True)
    with Tape() as tape:
        _ = unused * 2.0
        loss = sum_all(x)
    grads = tape.backward(loss)
    nptest.assert_array_equal(grads[unused.node].data, np.zeros((1, 3)))
    nptest.assert_array_equal(grads[x.node].data, np.ones((2, 2)))


def test_backward_contract_errors():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    with Tape() as tape:
        y = x * 2.0
    with pytest.raises(ContractError):
        tape.backward(y)
    with pytest.raises(ContractError):
        backward(sum_all(x))
    with Tape() as other:
        pass
    with Tape():
        loss = sum_all(x)
    with pytest.raises(ContractError):
        other.backward(loss)


def test_no_recording_without_grad():
    with Tape() as tape:
        matmul(Tensor(np.ones((2, 2))), Tensor(np.ones((2, 2))))
    assert len(tape) == 0


def test_row_softmax_rows_sum_to_one(rng):
    for _ in range(1000):
        s = row_softmax(Tensor(rng.normal(0, 5, (4, 6))))
        nptest.assert_allclose(s.data.sum(axis=1), 1.0, atol=1e-9)
    big = row_softmax(Tensor([[1000.0, 1000.0]]))
    nptest.assert_allclose(big.data, [[0.5, 0.5]])


def test_row_softmax_example():
    s = row_softmax(Tensor([[0.0, np.log(3.0)]]))
    nptest.assert_allclose(s.data, [[0.25, 0.75]], atol=1e-12)


def test_row_softmax_shift_invariant(rng):
    a = rng.standard_normal((3, 4))
    shifted = a + rng.standard_normal((3, 1))
    nptest.assert_allclose(row_softmax(Tensor(a)).data,
                           row_softmax(Tensor(shifted)).data, atol=1e-12)


def test_activations():
    a = Tensor([[-1.0, 0.0, 2.0]])
    nptest.assert_array_equal(activation(a, "relu").data, [[0, 0, 2]])
    nptest.assert_array_equal(activation(a, "linear").data, a.data)
    nptest.assert_allclose(activation(a, "sigmoid").data[0, 1], 0.5)
    nptest.assert_allclose(activation(a, "tanh").data, np.tanh(a.data))
    with pytest.raises(ConfigurationError):
        activation(a, "gelu")


def test_frobenius_sq_examples():
    x = Tensor(np.zeros((2, 2)))
    assert frobenius_sq(x + 1.0, x).item() == 4.0
    with pytest.raises(DimensionError):
        frobenius_sq(x, Tensor(np.zeros((2, 3))))


def test_item_needs_scalar():
    with pytest.raises(ContractError):
        Tensor(np.ones((2, 1))).item()


GRADIENT_CASES = [
    (lambda a, b: sum_all(add(a, b)), [(3, 2), (1, 2)]),
    (lambda a, b: sum_all(mul(sub(a, b), a)), [(3, 2), (3, 1)]),
    (lambda a, b: sum_all(div(a, add(mul(b, b), 1.0))), [(2, 3), (2, 3)]),
    (lambda a, b: frobenius_sq(matmul(a, b), Tensor(np.ones((2, 2)))),
     [(2, 3), (3, 2)]),
    (lambda a: sum_all(mul(row_softmax(a), Tensor(np.arange(12.).reshape(
        3, 4)))), [(3, 4)]),
    (lambda a: sum_all(activation(a, "tanh")), [(2, 3)]),
    (lambda a: sum_all(activation(a, "sigmoid")), [(2, 3)]),
    (lambda a: sum_all(row_sum(mul(a, a))), [(3, 3)]),
    (lambda a: sum_all(transpose(matmul(a, transpose(a)))), [(3, 2)]),
    (lambda a: sum_all(log(add(mul(a, a), 1.0))), [(2, 2)]),
    (lambda a: sum_all(power(add(mul(a, a), 1.0), -1.0)), [(2, 2)]),
]


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("fn, shapes", GRADIENT_CASES)
def test_gradients_match_finite_differences(seed, fn, shapes):
    rng = np.random.default_rng(seed)
    inputs = [rng.standard_normal(s) for s in shapes]
    assert check_gradients(fn, inputs) < TOL


def test_relu_gradient_away_from_kink(rng):
    x = rng.standard_normal((3, 3))
    x[np.abs(x) < 0.1] = 0.5
    assert check_gradients(lambda a: sum_all(activation(a, "relu")),
                           [x]) < TOL


def test_backward_is_deterministic(rng):
    a = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
    b = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
    grads = []
    for _ in range(2):
        with Tape() as tape:
            loss = sum_all(mul(row_softmax(matmul(a, b)),
                               activation(matmul(a, b), "tanh")))
        grads.append(tape.gradient(loss, [a, b]))
    for first, second in zip(*grads):
        nptest.assert_array_equal(first, second)


def test_check_gradients_flags_small_wrong_gradients():
    # analytic gradient 1e-3 everywhere, true gradient 2e-3
    def fn(a):
        return sum_all(mul(a, a.detach())) * 1e-3

    assert check_gradients(fn, [np.ones((2, 2))]) > 0.1
