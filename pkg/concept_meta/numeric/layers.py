"""Forward and backward rules for the layer kinds the networks are built from.

Every function works on float64 numpy arrays with a leading batch axis.
Backward functions take the upstream gradient first and return gradients
in the order the forward function takes its inputs.
"""
import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
from scipy.special import expit

from concept_meta.errors import DimensionError

Matrix = npt.NDArray[np.float64]


def _shape(x) -> tuple[int, ...]:
    return tuple(x.shape)


def affine(x: Matrix | sp.spmatrix, W: Matrix, b: Matrix) -> Matrix:
    """
    Compute y = xW + b with b broadcast over rows.

    Args:
        x: Input batch [batch x in], dense or scipy sparse
        W: Weights [in x out]
        b: Bias row vector [out]

    Returns:
        Output batch [batch x out]

    Raises:
        DimensionError: If the shapes do not line up
    """
    if x.ndim != 2 or W.ndim != 2:
        raise DimensionError("affine expects 2-D input and weights", _shape(x), _shape(W))
    if x.shape[1] != W.shape[0]:
        raise DimensionError("affine input/weight mismatch", _shape(x), _shape(W))
    if b.reshape(-1).shape[0] != W.shape[1]:
        raise DimensionError("affine bias/weight mismatch", _shape(b), _shape(W))

    y = x @ W
    if sp.issparse(y):
        y = y.toarray()
    return np.asarray(y, dtype=np.float64) + b.reshape(1, -1)


def affine_backward(
    dy: Matrix, x: Matrix | sp.spmatrix, W: Matrix, need_dx: bool = True
) -> tuple[Matrix | None, Matrix, Matrix]:
    """Return (dx, dW, db) for y = xW + b; dx is None when need_dx is False."""
    if dy.shape != (x.shape[0], W.shape[1]):
        raise DimensionError("affine upstream gradient mismatch", _shape(dy), (x.shape[0], W.shape[1]))

    dW = x.T @ dy
    if sp.issparse(dW):
        dW = dW.toarray()
    dW = np.asarray(dW, dtype=np.float64)
    db = dy.sum(axis=0)
    dx = dy @ W.T if need_dx else None
    return dx, dW, db


def relu(x: Matrix) -> Matrix:
    """Elementwise max(x, 0)."""
    return np.maximum(x, 0.0)


def relu_backward(dy: Matrix, x: Matrix) -> Matrix:
    """Pass the upstream gradient where x > 0; the subgradient at 0 is 0."""
    if dy.shape != x.shape:
        raise DimensionError("relu gradient mismatch", _shape(dy), _shape(x))
    return np.where(x > 0.0, dy, 0.0)


def residual_add(x: Matrix, f_out: Matrix) -> Matrix:
    """Skip connection x + f(x)."""
    if x.shape != f_out.shape:
        raise DimensionError("residual branches differ in shape", _shape(x), _shape(f_out))
    return x + f_out


def residual_add_backward(dy: Matrix) -> tuple[Matrix, Matrix]:
    """Both branches receive the full upstream gradient."""
    return dy, dy


def softmax(v: Matrix) -> Matrix:
    """Softmax over the last axis, shifted by the row maximum."""
    shifted = v - np.max(v, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def softmax_backward(dy: Matrix, y: Matrix) -> Matrix:
    """Vector-Jacobian product of softmax given its output y."""
    if dy.shape != y.shape:
        raise DimensionError("softmax gradient mismatch", _shape(dy), _shape(y))
    return y * (dy - np.sum(dy * y, axis=-1, keepdims=True))


def logistic_loss_with_logit(logit, label):
    """
    Binary cross-entropy on a logit, in log-sum-exp form.

    Args:
        logit: Real logit(s) z
        label: Label(s) y in {0, 1}

    Returns:
        Tuple of (loss, dloss/dlogit), scalars or arrays matching the input
    """
    z = np.asarray(logit, dtype=np.float64)
    y = np.asarray(label, dtype=np.float64)
    # -[y log s(z) + (1-y) log(1-s(z))] = log(1 + e^z) - y z
    loss = np.logaddexp(0.0, z) - y * z
    grad = expit(z) - y
    if loss.ndim == 0:
        return float(loss), float(grad)
    return loss, grad


def squared_loss(pred, target):
    """Return ((pred - target)^2, 2 (pred - target))."""
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    diff = p - t
    loss = diff * diff
    grad = 2.0 * diff
    if loss.ndim == 0:
        return float(loss), float(grad)
    return loss, grad


def he_normal(rng: np.random.Generator, fan_in: int, fan_out: int) -> Matrix:
    """He-scaled normal weights, std sqrt(2 / fan_in)."""
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
