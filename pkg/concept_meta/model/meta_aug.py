"""The MetaAug network: shared experts mixed per task by softmax gates, one head per task.

For task i and pad-masked input x:

    v = sum_j softmax(Gate_i(x))_j * Expert_j(x)
    logit = Task_i(v)

Experts are a linear projection to the expert width followed by residual
blocks z <- z + relu(zW + b). Gates and heads have one relu hidden layer.
"""
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

from concept_meta.errors import ConfigurationError, DimensionError, StaleCacheError
from concept_meta.model.configs import MetaAugConfig
from concept_meta.model.costs import param_count
from concept_meta.numeric import (
    Matrix,
    ParamStore,
    affine,
    affine_backward,
    he_normal,
    relu,
    relu_backward,
    residual_add,
    softmax,
    softmax_backward,
)

logger = logging.getLogger(__name__)


def expert_prefix(j: int) -> str:
    return f"expert{j}"


def gate_prefix(i: int) -> str:
    return f"gate{i}"


def head_prefix(i: int) -> str:
    return f"head{i}"


def add_affine(store: ParamStore, rng: np.random.Generator, name: str, n_in: int, n_out: int) -> None:
    """Register name.W (He-normal) and name.b (zeros)."""
    store.add(f"{name}.W", he_normal(rng, n_in, n_out))
    store.add(f"{name}.b", np.zeros(n_out))


# -- experts (shared with ExpertLearner) ------------------------------------------------


@dataclass
class ExpertCache:
    inputs: Matrix | sp.spmatrix
    hidden: list[Matrix] = field(default_factory=list)  # h_0 .. h_depth
    pre: list[Matrix] = field(default_factory=list)  # a_1 .. a_depth


def expert_forward(store: ParamStore, prefix: str, depth: int, x) -> tuple[Matrix, ExpertCache]:
    """Projection then `depth` residual relu blocks."""
    h = affine(x, store[f"{prefix}.proj.W"], store[f"{prefix}.proj.b"])
    cache = ExpertCache(x, [h])
    for k in range(depth):
        a = affine(h, store[f"{prefix}.block{k}.W"], store[f"{prefix}.block{k}.b"])
        h = residual_add(h, relu(a))
        cache.pre.append(a)
        cache.hidden.append(h)
    return h, cache


def expert_backward(store: ParamStore, prefix: str, depth: int, cache: ExpertCache, dh: Matrix) -> None:
    """Accumulate expert parameter gradients from the gradient at its output."""
    for k in reversed(range(depth)):
        da = relu_backward(dh, cache.pre[k])
        dh_block, dW, db = affine_backward(da, cache.hidden[k], store[f"{prefix}.block{k}.W"])
        store.accumulate(f"{prefix}.block{k}.W", dW)
        store.accumulate(f"{prefix}.block{k}.b", db)
        dh = dh + dh_block
    _, dW, db = affine_backward(dh, cache.inputs, store[f"{prefix}.proj.W"], need_dx=False)
    store.accumulate(f"{prefix}.proj.W", dW)
    store.accumulate(f"{prefix}.proj.b", db)


def init_expert(store: ParamStore, rng: np.random.Generator, prefix: str, input_dim: int, width: int, depth: int) -> None:
    add_affine(store, rng, f"{prefix}.proj", input_dim, width)
    for k in range(depth):
        add_affine(store, rng, f"{prefix}.block{k}", width, width)


# -- parameters ---------------------------------------------------------------------------


class MetaAugParams:
    """
    All expert, gate and head parameters (the meta-parameter) of one network.

    `task_ids`, `loss_kinds` and `meta_digest` are filled in once the network
    is bound to a meta-dataset; head i belongs to task_ids[i].
    """

    kind = "meta_aug"

    def __init__(
        self,
        config: MetaAugConfig,
        store: ParamStore,
        task_ids: Sequence[str] = (),
        loss_kinds: Sequence[str] = (),
        meta_digest: str = "",
    ):
        self.config = config
        self.store = store
        self.task_ids = tuple(task_ids)
        self.loss_kinds = tuple(loss_kinds)
        self.meta_digest = meta_digest

    @property
    def num_tasks(self) -> int:
        return self.config.num_tasks

    @property
    def input_dim(self) -> int:
        return self.config.input_dim

    def bind(self, task_ids: Sequence[str], loss_kinds: Sequence[str], meta_digest: str) -> "MetaAugParams":
        """Record which task owns each head and the vocabulary hash of the inputs."""
        if len(task_ids) != self.num_tasks:
            raise ConfigurationError(f"{len(task_ids)} task ids for {self.num_tasks} heads")
        self.task_ids = tuple(task_ids)
        self.loss_kinds = tuple(str(getattr(k, "value", k)) for k in loss_kinds)
        self.meta_digest = meta_digest
        return self

    def head_index(self, task_id: str) -> int:
        try:
            return self.task_ids.index(task_id)
        except ValueError:
            raise ConfigurationError(f"Model has no head for task {task_id!r}") from None

    def copy(self) -> "MetaAugParams":
        return MetaAugParams(self.config, self.store.copy(), self.task_ids, self.loss_kinds, self.meta_digest)

    def forward_batch(self, X, tasks: npt.ArrayLike):
        return forward_batch(self, X, tasks)

    def backward(self, cache: "ForwardCache", dlogits: Matrix) -> None:
        backward(self, cache, dlogits)

    def preactivations(self, cache: "ForwardCache") -> Matrix:
        return preactivations(cache)


def init(config: MetaAugConfig) -> MetaAugParams:
    """
    He-normal weights, zero biases, deterministic in config.seed.

    Returns:
        Fresh parameters whose count matches param_count(config)
    """
    rng = np.random.default_rng(config.seed)
    store = ParamStore()
    for j in range(config.num_experts):
        init_expert(store, rng, expert_prefix(j), config.input_dim, config.expert_width, config.expert_depth)
    for i in range(config.num_tasks):
        add_affine(store, rng, f"{gate_prefix(i)}.hidden", config.input_dim, config.gate_hidden)
        add_affine(store, rng, f"{gate_prefix(i)}.out", config.gate_hidden, config.num_experts)
        add_affine(store, rng, f"{head_prefix(i)}.hidden", config.expert_width, config.head_hidden)
        add_affine(store, rng, f"{head_prefix(i)}.out", config.head_hidden, 1)

    expected = param_count(config)
    assert store.num_parameters() == expected, (store.num_parameters(), expected)
    logger.debug("Initialized MetaAug with %d parameters", expected)
    return MetaAugParams(config, store)


# -- forward / backward -------------------------------------------------------------------


@dataclass
class _GroupCache:
    rows: npt.NDArray[np.int64]
    gate_pre: Matrix
    gate_hidden: Matrix
    weights: Matrix  # softmax output [n x E]
    combined: Matrix  # v [n x W]
    head_pre: Matrix
    head_hidden: Matrix


@dataclass
class ForwardCache:
    """Intermediates of one forward_batch call, valid for one parameter version."""

    step: int
    inputs: Matrix | sp.spmatrix
    tasks: npt.NDArray[np.int64]
    experts: list[ExpertCache]
    expert_outputs: list[Matrix]
    groups: dict[int, _GroupCache]


def _check_inputs(params: MetaAugParams, X, tasks: npt.NDArray[np.int64]) -> None:
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise DimensionError("MetaAug input does not match |C_meta|", tuple(X.shape), (X.shape[0], params.input_dim))
    if tasks.shape != (X.shape[0],):
        raise DimensionError("One task index per row expected", tuple(tasks.shape), (X.shape[0],))
    if tasks.size and (tasks.min() < 0 or tasks.max() >= params.num_tasks):
        raise ConfigurationError(f"Task index out of range for {params.num_tasks} tasks")


def forward_batch(params: MetaAugParams, X, tasks: npt.ArrayLike) -> tuple[Matrix, ForwardCache]:
    """
    Forward a batch whose rows may belong to different tasks.

    Experts run once over the whole batch; each task's gate and head run on
    that task's rows.

    Args:
        params: Network parameters
        X: Pad-masked inputs [batch x |C_meta|]
        tasks: Head index of every row

    Returns:
        Tuple of (logits [batch], cache)

    Raises:
        DimensionError: On input shape mismatch
        ConfigurationError: On a task index out of range
    """
    store = params.store
    config = params.config
    tasks = np.asarray(tasks, dtype=np.int64).reshape(-1)
    _check_inputs(params, X, tasks)

    experts = []
    outputs = []
    for j in range(config.num_experts):
        out, cache = expert_forward(store, expert_prefix(j), config.expert_depth, X)
        experts.append(cache)
        outputs.append(out)
    stacked = np.stack(outputs, axis=1)  # [batch x E x W]

    logits = np.zeros(tasks.shape[0], dtype=np.float64)
    groups: dict[int, _GroupCache] = {}
    for i in np.unique(tasks):
        i = int(i)
        rows = np.flatnonzero(tasks == i)
        gate, head = gate_prefix(i), head_prefix(i)
        x_i = X[rows]
        gate_pre = affine(x_i, store[f"{gate}.hidden.W"], store[f"{gate}.hidden.b"])
        gate_hidden = relu(gate_pre)
        weights = softmax(affine(gate_hidden, store[f"{gate}.out.W"], store[f"{gate}.out.b"]))
        combined = np.einsum("ne,new->nw", weights, stacked[rows])
        head_pre = affine(combined, store[f"{head}.hidden.W"], store[f"{head}.hidden.b"])
        head_hidden = relu(head_pre)
        logits[rows] = affine(head_hidden, store[f"{head}.out.W"], store[f"{head}.out.b"])[:, 0]
        groups[i] = _GroupCache(rows, gate_pre, gate_hidden, weights, combined, head_pre, head_hidden)

    return logits, ForwardCache(store.step, X, tasks, experts, outputs, groups)


def forward(params: MetaAugParams, x, task: int) -> tuple[float, ForwardCache]:
    """Forward one pad-masked instance through head `task`."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    logits, cache = forward_batch(params, x, [task])
    return float(logits[0]), cache


def backward(params: MetaAugParams, cache: ForwardCache, dlogits) -> None:
    """
    Accumulate d(loss)/d(params) given d(loss)/d(logit) per row.

    Only the gates and heads of tasks present in the batch receive gradient.

    Raises:
        StaleCacheError: If the parameters changed since the forward pass
    """
    store = params.store
    config = params.config
    if cache.step != store.step:
        raise StaleCacheError(f"Cache from step {cache.step} used at step {store.step}")
    dlogits = np.asarray(dlogits, dtype=np.float64).reshape(-1)
    if dlogits.shape != cache.tasks.shape:
        raise DimensionError("One logit gradient per row expected", dlogits.shape, cache.tasks.shape)

    d_outputs = [np.zeros_like(out) for out in cache.expert_outputs]
    for i, group in cache.groups.items():
        gate, head = gate_prefix(i), head_prefix(i)
        rows = group.rows
        dy = dlogits[rows].reshape(-1, 1)

        d_head_hidden, dW, db = affine_backward(dy, group.head_hidden, store[f"{head}.out.W"])
        store.accumulate(f"{head}.out.W", dW)
        store.accumulate(f"{head}.out.b", db)
        d_head_pre = relu_backward(d_head_hidden, group.head_pre)
        d_combined, dW, db = affine_backward(d_head_pre, group.combined, store[f"{head}.hidden.W"])
        store.accumulate(f"{head}.hidden.W", dW)
        store.accumulate(f"{head}.hidden.b", db)

        d_weights = np.empty_like(group.weights)
        for j in range(config.num_experts):
            d_weights[:, j] = np.sum(d_combined * cache.expert_outputs[j][rows], axis=1)
            d_outputs[j][rows] += group.weights[:, j : j + 1] * d_combined

        d_gate_logits = softmax_backward(d_weights, group.weights)
        d_gate_hidden, dW, db = affine_backward(d_gate_logits, group.gate_hidden, store[f"{gate}.out.W"])
        store.accumulate(f"{gate}.out.W", dW)
        store.accumulate(f"{gate}.out.b", db)
        d_gate_pre = relu_backward(d_gate_hidden, group.gate_pre)
        _, dW, db = affine_backward(d_gate_pre, cache.inputs[rows], store[f"{gate}.hidden.W"], need_dx=False)
        store.accumulate(f"{gate}.hidden.W", dW)
        store.accumulate(f"{gate}.hidden.b", db)

    for j in range(config.num_experts):
        expert_backward(store, expert_prefix(j), config.expert_depth, cache.experts[j], d_outputs[j])


def preactivations(cache: ForwardCache) -> Matrix:
    """Every relu pre-activation of a forward pass, flattened in a fixed order."""
    parts = [a.ravel() for expert in cache.experts for a in expert.pre]
    for i in sorted(cache.groups):
        parts.append(cache.groups[i].gate_pre.ravel())
        parts.append(cache.groups[i].head_pre.ravel())
    return np.concatenate(parts) if parts else np.zeros(0)


def predict_logits(params: MetaAugParams, X, task: int) -> Matrix:
    """Logits of head `task` for every row of X."""
    tasks = np.full(X.shape[0], task, dtype=np.int64)
    logits, _ = forward_batch(params, X, tasks)
    return logits
