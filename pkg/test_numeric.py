"""Test the dense numeric kernel: layers, parameter store, Adam and the gradient checker."""
import math

import numpy as np
import pytest
import scipy.sparse as sp

from concept_meta.errors import ConfigurationError, DimensionError
from concept_meta.numeric import (
    AdamState,
    ParamStore,
    adam_step,
    affine,
    affine_backward,
    clip_grad_norm,
    finite_diff_check,
    logistic_loss_with_logit,
    relative_error,
    relu,
    relu_backward,
    residual_add,
    residual_add_backward,
    softmax,
    softmax_backward,
    squared_loss,
)


def naive_affine(x, W, b):
    out = np.zeros((x.shape[0], W.shape[1]))
    for r in range(x.shape[0]):
        for c in range(W.shape[1]):
            total = b[c]
            for k in range(x.shape[1]):
                total += x[r, k] * W[k, c]
            out[r, c] = total
    return out


def test_affine_identity_and_zero_input():
    assert affine(np.array([[1.0, 2.0]]), np.eye(2), np.zeros(2)).tolist() == [[1.0, 2.0]]
    W = np.random.default_rng(0).normal(size=(2, 2))
    assert affine(np.zeros((1, 2)), W, np.array([3.0, -1.0])).tolist() == [[3.0, -1.0]]


def test_affine_matches_triple_loop():
    rng = np.random.default_rng(1)
    for rows, n_in, n_out in [(4, 3, 2), (16, 16, 16), (1, 7, 5)]:
        x = rng.normal(size=(rows, n_in))
        W = rng.normal(size=(n_in, n_out))
        b = rng.normal(size=n_out)
        np.testing.assert_allclose(affine(x, W, b), naive_affine(x, W, b), rtol=0, atol=1e-12)


def test_affine_accepts_sparse_input():
    rng = np.random.default_rng(2)
    dense = rng.normal(size=(5, 6)) * (rng.random((5, 6)) < 0.3)
    W = rng.normal(size=(6, 3))
    b = rng.normal(size=3)
    np.testing.assert_allclose(affine(sp.csr_matrix(dense), W, b), affine(dense, W, b), atol=1e-12)

    dy = rng.normal(size=(5, 3))
    _, dW_sparse, _ = affine_backward(dy, sp.csr_matrix(dense), W, need_dx=False)
    _, dW_dense, _ = affine_backward(dy, dense, W)
    np.testing.assert_allclose(dW_sparse, dW_dense, atol=1e-12)


def test_affine_shape_mismatch_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(1, 3\) vs \(2, 2\)"):
        affine(np.ones((1, 3)), np.ones((2, 2)), np.zeros(2))


def test_relu_and_subgradient():
    x = np.array([-1.0, 0.0, 2.0])
    assert relu(x).tolist() == [0.0, 0.0, 2.0]
    assert relu_backward(np.array([5.0, 5.0, 5.0]), x).tolist() == [0.0, 0.0, 5.0]


def test_residual_add():
    assert residual_add(np.array([1.0, 2.0]), np.array([0.0, 0.0])).tolist() == [1.0, 2.0]
    assert residual_add(np.array([1.0, 2.0]), np.array([-1.0, -2.0])).tolist() == [0.0, 0.0]
    dy = np.array([0.5, -1.0])
    left, right = residual_add_backward(dy)
    assert left is dy and right is dy
    with pytest.raises(DimensionError):
        residual_add(np.ones(2), np.ones(3))


def test_softmax_simplex_and_stability():
    assert softmax(np.array([0.0, 0.0])).tolist() == [0.5, 0.5]
    big = softmax(np.array([1000.0, 0.0]))
    assert np.all(np.isfinite(big))
    assert big[0] == pytest.approx(1.0) and big[1] == pytest.approx(0.0, abs=1e-300)

    v = np.random.default_rng(3).normal(size=(10, 5)) * 10
    y = softmax(v)
    assert np.all((y > 0) & (y < 1))
    np.testing.assert_allclose(y.sum(axis=1), 1.0, atol=1e-9)
    assert np.array_equal(y.argmax(axis=1), v.argmax(axis=1))


def test_logistic_loss_values():
    loss, grad = logistic_loss_with_logit(0.0, 1.0)
    assert loss == pytest.approx(math.log(2.0), abs=1e-12)
    assert grad == pytest.approx(-0.5)

    loss, grad = logistic_loss_with_logit(50.0, 1.0)
    assert 0.0 <= loss < 1e-20
    assert grad == pytest.approx(0.0, abs=1e-20)

    loss, _ = logistic_loss_with_logit(-1000.0, 1.0)
    assert loss == pytest.approx(1000.0)


def test_squared_loss_values():
    assert squared_loss(2.5, 2.5) == (0.0, 0.0)
    assert squared_loss(1.0, 0.0) == (1.0, 2.0)


def _layer_store(**arrays) -> ParamStore:
    store = ParamStore()
    for name, value in arrays.items():
        store.add(name, value)
    return store


def test_affine_gradient_matches_finite_differences():
    rng = np.random.default_rng(4)
    store = _layer_store(x=rng.normal(size=(4, 3)), W=rng.normal(size=(3, 2)), b=rng.normal(size=2))
    weights = rng.normal(size=(4, 2))

    def loss_fn(p: ParamStore) -> float:
        y = affine(p["x"], p["W"], p["b"])
        dx, dW, db = affine_backward(weights, p["x"], p["W"])
        p.accumulate("x", dx)
        p.accumulate("W", dW)
        p.accumulate("b", db)
        return float(np.sum(weights * y))

    assert finite_diff_check(loss_fn, store).max_relative_error <= 1e-6


def test_softmax_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    store = _layer_store(v=rng.normal(size=5))
    weights = rng.normal(size=5)

    def loss_fn(p: ParamStore) -> float:
        y = softmax(p["v"])
        p.accumulate("v", softmax_backward(weights, y))
        return float(np.sum(weights * y))

    assert finite_diff_check(loss_fn, store).max_relative_error <= 1e-6


def test_logistic_and_squared_gradients_match_finite_differences():
    rng = np.random.default_rng(6)
    labels = rng.integers(0, 2, size=6).astype(float)
    targets = rng.normal(size=6)
    store = _layer_store(z=rng.normal(size=6) * 3, p=rng.normal(size=6))

    def loss_fn(params: ParamStore) -> float:
        log_loss, dz = logistic_loss_with_logit(params["z"], labels)
        sq_loss, dp = squared_loss(params["p"], targets)
        params.accumulate("z", dz)
        params.accumulate("p", dp)
        return float(log_loss.sum() + sq_loss.sum())

    assert finite_diff_check(loss_fn, store).max_relative_error <= 1e-6


def test_param_store_bookkeeping():
    store = ParamStore()
    store.add("a.W", np.ones((2, 3)))
    store.add("a.b", np.zeros(3))
    store.add("c.W", np.ones((3, 1)))
    assert len(store) == 3
    assert store.num_parameters() == 6 + 3 + 3
    assert store.names("a.") == ["a.W", "a.b"]
    assert store.grad("a.W").shape == (2, 3)

    with pytest.raises(ConfigurationError):
        store.add("a.W", np.ones(1))
    with pytest.raises(DimensionError):
        store["a.b"] = np.zeros(4)

    clone = store.copy()
    clone["a.b"] = np.full(3, 7.0)
    assert store["a.b"].tolist() == [0.0, 0.0, 0.0]

    state = clone.state_dict()
    store.load_state_dict(state)
    assert store["a.b"].tolist() == [7.0, 7.0, 7.0]
    with pytest.raises(ConfigurationError):
        store.load_state_dict({"a.W": np.ones((2, 3))})


def test_adam_zero_gradient_leaves_parameters():
    store = _layer_store(w=np.array([1.0, -2.0]))
    adam_step(store, AdamState.for_params(store), lr=0.1)
    assert store["w"].tolist() == [1.0, -2.0]
    assert store.step == 1


def test_adam_first_step_moves_by_learning_rate():
    store = _layer_store(w=np.array([1.0]))
    store.accumulate("w", np.array([0.3]))
    adam_step(store, AdamState.for_params(store), lr=0.01)
    assert store["w"][0] == pytest.approx(0.99, abs=1e-9)
    assert store.grad("w")[0] == 0.0


def test_adam_matches_hand_recurrence_on_quadratic():
    lr, beta1, beta2, eps = 0.1, 0.9, 0.999, 1e-8
    store = _layer_store(w=np.array([2.0]))
    state = AdamState.for_params(store, beta1, beta2, eps)

    w, m, v = 2.0, 0.0, 0.0
    for t in range(1, 4):
        g = 2.0 * w
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        w -= lr * (m / (1 - beta1**t)) / (math.sqrt(v / (1 - beta2**t)) + eps)

        store.accumulate("w", 2.0 * store["w"])
        adam_step(store, state, lr)

    assert store["w"][0] == pytest.approx(w, abs=1e-12)
    assert state.t == 3


def test_adam_is_deterministic():
    def run() -> np.ndarray:
        rng = np.random.default_rng(7)
        store = _layer_store(w=rng.normal(size=(3, 3)))
        state = AdamState.for_params(store)
        for _ in range(5):
            store.accumulate("w", rng.normal(size=(3, 3)))
            adam_step(store, state, 0.01)
        return store["w"]

    assert np.array_equal(run(), run())


def test_clip_grad_norm():
    store = _layer_store(a=np.zeros(1), b=np.zeros(1))
    store.accumulate("a", np.array([3.0]))
    store.accumulate("b", np.array([4.0]))
    assert clip_grad_norm(store, 1.0) == pytest.approx(5.0)
    assert store.grad("a")[0] == pytest.approx(0.6)
    assert store.grad("b")[0] == pytest.approx(0.8)
    assert clip_grad_norm(store, 10.0) == pytest.approx(1.0)
    assert store.grad("b")[0] == pytest.approx(0.8)


def test_finite_diff_check_accepts_correct_and_rejects_wrong_gradient():
    def quadratic(scale: float):
        def loss_fn(p: ParamStore) -> float:
            p.accumulate("w", scale * p["w"])
            return float(np.sum(p["w"] ** 2))

        return loss_fn

    store = _layer_store(w=np.array([0.5, -1.5, 2.0]))
    good = finite_diff_check(quadratic(2.0), store)
    assert good.passed(1e-6)
    assert good.checked == 3 and good.excluded == 0

    bad = finite_diff_check(quadratic(3.0), store)
    assert not bad.passed(1e-4)
    assert bad.worst_parameter == "w"
    assert store["w"].tolist() == [0.5, -1.5, 2.0]


def test_finite_diff_check_linear_loss_is_exact():
    c = np.array([1.0, -2.0, 0.5])

    def loss_fn(p: ParamStore) -> float:
        p.accumulate("w", c)
        return float(c @ p["w"])

    assert finite_diff_check(loss_fn, _layer_store(w=np.array([0.1, 0.2, 0.3]))).max_relative_error <= 1e-10


def test_finite_diff_check_skips_relu_kinks():
    store = _layer_store(w=np.array([0.0, 1.0, -1.0]))

    def loss_fn(p: ParamStore) -> float:
        p.accumulate("w", relu_backward(np.ones(3), p["w"]))
        return float(relu(p["w"]).sum())

    report = finite_diff_check(loss_fn, store, activation_probe=lambda p: p["w"].copy())
    assert report.excluded == 1
    assert report.checked == 2
    assert report.passed()


def test_finite_diff_check_samples_coordinates():
    store = _layer_store(w=np.arange(20.0))

    def loss_fn(p: ParamStore) -> float:
        p.accumulate("w", 2.0 * p["w"])
        return float(np.sum(p["w"] ** 2))

    assert finite_diff_check(loss_fn, store, num_samples=5).checked == 5


def test_relative_error_floor():
    assert relative_error(1.0, 1.0) == 0.0
    assert relative_error(2.0, 1.0) == pytest.approx(0.5)
    assert relative_error(1e-7, 0.0) == pytest.approx(1.0)
    assert relative_error(1e-7, 0.0, floor=1e-5) == pytest.approx(1e-2)
    assert relative_error(1e-9, 0.0) == pytest.approx(0.1)


def test_finite_diff_check_floor_is_a_parameter():
    def loss_fn(p: ParamStore) -> float:
        p.accumulate("w", np.full(2, 1e-7))
        return 0.0

    store = _layer_store(w=np.array([0.3, -0.4]))
    assert finite_diff_check(loss_fn, store).max_relative_error == pytest.approx(1.0)
    assert finite_diff_check(loss_fn, store, floor=1e-5).max_relative_error == pytest.approx(1e-2)
