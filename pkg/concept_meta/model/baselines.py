"""Baseline networks: a plain MLP, or a shared MLP trunk with one linear head per task."""
import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from concept_meta.errors import ConfigurationError, DimensionError, StaleCacheError
from concept_meta.model.configs import BaselineConfig
from concept_meta.model.costs import baseline_param_count
from concept_meta.model.meta_aug import add_affine, head_prefix
from concept_meta.numeric import Matrix, ParamStore, affine, affine_backward, relu, relu_backward

logger = logging.getLogger(__name__)


def trunk_layer(l: int) -> str:
    return f"trunk.layer{l}"


class BaselineParams:
    """Trunk layers trunk.layer{l} and per-task linear heads head{i}."""

    kind = "baseline"

    def __init__(
        self,
        config: BaselineConfig,
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

    def bind(self, task_ids: Sequence[str], loss_kinds: Sequence[str], meta_digest: str) -> "BaselineParams":
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

    def copy(self) -> "BaselineParams":
        return BaselineParams(self.config, self.store.copy(), self.task_ids, self.loss_kinds, self.meta_digest)

    def forward_batch(self, X, tasks: npt.ArrayLike):
        return forward_baseline(self, X, tasks)

    def backward(self, cache: "BaselineCache", dlogits: Matrix) -> None:
        backward_baseline(self, cache, dlogits)

    def preactivations(self, cache: "BaselineCache") -> Matrix:
        parts = [a.ravel() for a in cache.pre]
        return np.concatenate(parts) if parts else np.zeros(0)


def init_baseline(config: BaselineConfig) -> BaselineParams:
    """He-normal weights and zero biases, deterministic in config.seed."""
    rng = np.random.default_rng(config.seed)
    store = ParamStore()
    widths = (config.input_dim, *config.hidden_widths)
    for l, (n_in, n_out) in enumerate(zip(widths[:-1], widths[1:])):
        add_affine(store, rng, trunk_layer(l), n_in, n_out)
    for i in range(config.num_tasks):
        add_affine(store, rng, head_prefix(i), widths[-1], 1)
    assert store.num_parameters() == baseline_param_count(config)
    return BaselineParams(config, store)


@dataclass
class BaselineCache:
    step: int
    tasks: npt.NDArray[np.int64]
    hidden: list  # trunk inputs, layer by layer, then the trunk output
    pre: list[Matrix]


def forward_baseline(params: BaselineParams, X, tasks: npt.ArrayLike) -> tuple[Matrix, BaselineCache]:
    """
    Trunk of relu layers, then the head of each row's task.

    Raises:
        DimensionError: On input shape mismatch
        ConfigurationError: On a task index out of range
    """
    store = params.store
    tasks = np.asarray(tasks, dtype=np.int64).reshape(-1)
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise DimensionError("Baseline input width mismatch", tuple(X.shape), (X.shape[0], params.input_dim))
    if tasks.shape != (X.shape[0],):
        raise DimensionError("One task index per row expected", tuple(tasks.shape), (X.shape[0],))
    if tasks.size and (tasks.min() < 0 or tasks.max() >= params.num_tasks):
        raise ConfigurationError(f"Task index out of range for {params.num_tasks} tasks")

    h = X
    hidden = [h]
    pre = []
    for l in range(len(params.config.hidden_widths)):
        a = affine(h, store[f"{trunk_layer(l)}.W"], store[f"{trunk_layer(l)}.b"])
        h = relu(a)
        pre.append(a)
        hidden.append(h)

    logits = np.zeros(tasks.shape[0], dtype=np.float64)
    for i in np.unique(tasks):
        rows = np.flatnonzero(tasks == i)
        head = head_prefix(int(i))
        logits[rows] = affine(h[rows], store[f"{head}.W"], store[f"{head}.b"])[:, 0]
    return logits, BaselineCache(store.step, tasks, hidden, pre)


def backward_baseline(params: BaselineParams, cache: BaselineCache, dlogits) -> None:
    """Accumulate gradients; heads of absent tasks are untouched."""
    store = params.store
    if cache.step != store.step:
        raise StaleCacheError(f"Cache from step {cache.step} used at step {store.step}")
    dlogits = np.asarray(dlogits, dtype=np.float64).reshape(-1)
    trunk_out = cache.hidden[-1]
    depth = len(cache.pre)

    dh = np.zeros((trunk_out.shape[0], trunk_out.shape[1]), dtype=np.float64)
    for i in np.unique(cache.tasks):
        rows = np.flatnonzero(cache.tasks == i)
        head = head_prefix(int(i))
        d_rows, dW, db = affine_backward(
            dlogits[rows].reshape(-1, 1), trunk_out[rows], store[f"{head}.W"], need_dx=depth > 0
        )
        store.accumulate(f"{head}.W", dW)
        store.accumulate(f"{head}.b", db)
        if depth:
            dh[rows] += d_rows

    for l in reversed(range(depth)):
        da = relu_backward(dh, cache.pre[l])
        dh, dW, db = affine_backward(da, cache.hidden[l], store[f"{trunk_layer(l)}.W"], need_dx=l > 0)
        store.accumulate(f"{trunk_layer(l)}.W", dW)
        store.accumulate(f"{trunk_layer(l)}.b", db)
