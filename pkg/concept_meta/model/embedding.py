"""Embedding single-task learners into one MetaAug network.

Each learner becomes an expert (its input rows for masked concepts zeroed),
its gate puts a logit margin of GATE_MARGIN on it, and its head is the
identity on the learner's output (a coordinate, or a linear readout for
learners rewritten from MLPs), realized with a relu pair:
v = relu(v) - relu(-v).
"""
import logging
from collections.abc import Sequence

import numpy as np

from concept_meta.concepts import TaskSchema, Vocabulary, keep_mask
from concept_meta.errors import ConfigurationError, DimensionError
from concept_meta.model.baselines import BaselineParams, trunk_layer
from concept_meta.model.configs import MetaAugConfig
from concept_meta.model.costs import gate_param_count, head_param_count
from concept_meta.model.meta_aug import (
    MetaAugParams,
    expert_forward,
    expert_prefix,
    gate_prefix,
    head_prefix,
    init,
    init_expert,
)
from concept_meta.numeric import Matrix, ParamStore

logger = logging.getLogger(__name__)

GATE_MARGIN = 50.0


class ExpertLearner:
    """
    Single-task learner with the expert architecture: a linear projection
    then residual relu blocks. Its prediction is output coordinate
    `output_index`; the multi-task form reads coordinate i for task i.
    A learner built from an MLP reads a linear readout of its outputs instead.
    """

    def __init__(self, input_dim: int, width: int, depth: int, seed: int = 0, output_index: int = 0):
        if min(input_dim, width, depth) < 1:
            raise ConfigurationError("ExpertLearner dimensions must be >= 1")
        if not 0 <= output_index < width:
            raise ConfigurationError(f"output_index {output_index} outside width {width}")
        self.input_dim = input_dim
        self.width = width
        self.depth = depth
        self.output_index = output_index
        self.readout: Matrix | None = None
        self.readout_bias = 0.0
        self.store = ParamStore()
        init_expert(self.store, np.random.default_rng(seed), "learner", input_dim, width, depth)

    @classmethod
    def from_baseline(cls, mlp: BaselineParams) -> "ExpertLearner":
        """
        Rewrite a one-head relu MLP as an expert with the same logit.

        The projection writes the first layer's pre-activation into slot A.
        Block 0 copies relu(A) into slot R1, block k writes layer k+1 from
        R_k into R_{k+1}, and the readout is the MLP head over R_L. Slots
        are disjoint and every other block column is zero, so each residual
        add only fills its own slot. Without hidden layers the projection is
        the logit and a single zero block is added.

        Raises:
            ConfigurationError: If the MLP has more than one head
        """
        if mlp.num_tasks != 1:
            raise ConfigurationError(f"Only one-head MLPs embed as a single learner, got {mlp.num_tasks} heads")
        source = mlp.store
        widths = mlp.config.hidden_widths
        head_W, head_b = source[f"{head_prefix(0)}.W"][:, 0], float(source[f"{head_prefix(0)}.b"][0])

        if not widths:
            learner = cls(mlp.input_dim, 1, 1)
            learner.store["learner.proj.W"] = source[f"{head_prefix(0)}.W"]
            learner.store["learner.proj.b"] = source[f"{head_prefix(0)}.b"]
            learner._zero_blocks()
            return learner

        starts = np.cumsum([0, widths[0], *widths])
        slots = [slice(int(a), int(b)) for a, b in zip(starts[:-1], starts[1:])]  # A, R1 .. RL
        width = int(starts[-1])
        learner = cls(mlp.input_dim, width, len(widths))
        learner._zero_blocks()

        proj_W = np.zeros((mlp.input_dim, width))
        proj_b = np.zeros(width)
        proj_W[:, slots[0]] = source[f"{trunk_layer(0)}.W"]
        proj_b[slots[0]] = source[f"{trunk_layer(0)}.b"]
        learner.store["learner.proj.W"] = proj_W
        learner.store["learner.proj.b"] = proj_b

        copy = np.zeros((width, width))
        copy[slots[0], slots[1]] = np.eye(widths[0])
        learner.store["learner.block0.W"] = copy
        for k in range(1, len(widths)):
            W = np.zeros((width, width))
            b = np.zeros(width)
            W[slots[k], slots[k + 1]] = source[f"{trunk_layer(k)}.W"]
            b[slots[k + 1]] = source[f"{trunk_layer(k)}.b"]
            learner.store[f"learner.block{k}.W"] = W
            learner.store[f"learner.block{k}.b"] = b

        learner.readout = np.zeros(width)
        learner.readout[slots[-1]] = head_W
        learner.readout_bias = head_b
        return learner

    def _zero_blocks(self) -> None:
        for name in self.store.names("learner.block"):
            self.store[name] = np.zeros_like(self.store[name])

    def num_parameters(self) -> int:
        return self.store.num_parameters()

    def readout_vector(self) -> tuple[Matrix, float]:
        """(r, c) with prediction = outputs @ r + c."""
        if self.readout is not None:
            return self.readout, self.readout_bias
        r = np.zeros(self.width)
        r[self.output_index] = 1.0
        return r, 0.0

    def outputs(self, X) -> Matrix:
        """Full output vectors [batch x width]."""
        out, _ = expert_forward(self.store, "learner", self.depth, X)
        return out

    def predict(self, X, coordinate: int | None = None) -> Matrix:
        """Logit per row: the readout, or output coordinate `coordinate`."""
        if coordinate is not None:
            return self.outputs(X)[:, coordinate]
        if self.readout is None:
            return self.outputs(X)[:, self.output_index]
        return self.outputs(X) @ self.readout + self.readout_bias


def _copy_learner(store: ParamStore, learner: ExpertLearner, prefix: str, zero_rows: np.ndarray) -> None:
    store[f"{prefix}.proj.W"] = learner.store["learner.proj.W"] * zero_rows[:, None]
    store[f"{prefix}.proj.b"] = learner.store["learner.proj.b"]
    for k in range(learner.depth):
        store[f"{prefix}.block{k}.W"] = learner.store[f"learner.block{k}.W"]
        store[f"{prefix}.block{k}.b"] = learner.store[f"learner.block{k}.b"]


def _identity_head(store: ParamStore, task: int, readout: Matrix, bias: float, config: MetaAugConfig) -> None:
    hidden = np.zeros((config.expert_width, config.head_hidden))
    hidden[:, 0] = readout
    hidden[:, 1] = -readout
    hidden_b = np.zeros(config.head_hidden)
    hidden_b[:2] = (bias, -bias)
    out = np.zeros((config.head_hidden, 1))
    out[0, 0] = 1.0
    out[1, 0] = -1.0
    store[f"{head_prefix(task)}.hidden.W"] = hidden
    store[f"{head_prefix(task)}.hidden.b"] = hidden_b
    store[f"{head_prefix(task)}.out.W"] = out
    store[f"{head_prefix(task)}.out.b"] = np.zeros(1)


def _concentrated_gate(store: ParamStore, task: int, expert: int, config: MetaAugConfig, margin: float) -> None:
    gate = gate_prefix(task)
    store[f"{gate}.hidden.W"] = np.zeros((config.input_dim, config.gate_hidden))
    store[f"{gate}.hidden.b"] = np.zeros(config.gate_hidden)
    store[f"{gate}.out.W"] = np.zeros((config.gate_hidden, config.num_experts))
    bias = np.zeros(config.num_experts)
    bias[expert] = margin
    store[f"{gate}.out.b"] = bias


def _check_learners(learners: Sequence[ExpertLearner], input_dim: int) -> tuple[int, int]:
    if not learners:
        raise ConfigurationError("At least one learner is required")
    width, depth = learners[0].width, learners[0].depth
    for learner in learners:
        if (learner.input_dim, learner.width, learner.depth) != (input_dim, width, depth):
            raise DimensionError(
                "Learner shape is incompatible with the expert shape",
                (learner.input_dim, learner.width, learner.depth),
                (input_dim, width, depth),
            )
    return width, depth


def embed_single_task_learners(
    learners: Sequence[ExpertLearner | BaselineParams],
    schemas: Sequence[TaskSchema],
    meta_vocab: Vocabulary,
    gate_hidden: int = 1,
    head_hidden: int = 2,
    margin: float = GATE_MARGIN,
) -> MetaAugParams:
    """
    Build a MetaAug network with one expert per learner.

    Args:
        learners: K learners over pad-masked C_meta input, all the same shape;
            one-head MLPs from train_baseline are rewritten with ExpertLearner.from_baseline
        schemas: Schema of each learner's task
        meta_vocab: Meta-vocabulary
        gate_hidden: Gate hidden width (its weights are all zero)
        head_hidden: Head hidden width, at least 2 for the relu-pair identity
        margin: Gate logit margin on the owning expert

    Returns:
        Parameters whose head i reproduces learner i on task-i pad-masked input

    Raises:
        DimensionError: If learner shapes differ from each other or from |C_meta|
        ConfigurationError: If the counts disagree or head_hidden < 2
    """
    if len(learners) != len(schemas):
        raise ConfigurationError(f"{len(learners)} learners for {len(schemas)} schemas")
    if head_hidden < 2:
        raise ConfigurationError("Identity heads need head_hidden >= 2")
    learners = [ExpertLearner.from_baseline(l) if isinstance(l, BaselineParams) else l for l in learners]
    width, depth = _check_learners(learners, len(meta_vocab))

    config = MetaAugConfig(
        input_dim=len(meta_vocab),
        num_tasks=len(learners),
        num_experts=len(learners),
        expert_depth=depth,
        expert_width=width,
        gate_hidden=gate_hidden,
        head_hidden=head_hidden,
    )
    params = init(config)
    store = params.store
    for i, (learner, schema) in enumerate(zip(learners, schemas)):
        _copy_learner(store, learner, expert_prefix(i), keep_mask(meta_vocab, schema.cmask))
        _concentrated_gate(store, i, i, config, margin)
        _identity_head(store, i, *learner.readout_vector(), config)

    overhead = store.num_parameters() - sum(l.num_parameters() for l in learners)
    logger.debug("Embedded %d learners, parameter overhead %d", len(learners), overhead)
    return params.bind(
        [s.task_id for s in schemas], [s.loss_kind for s in schemas], meta_vocab.digest()
    )


def embed_multitask_learner(
    learner: ExpertLearner,
    schemas: Sequence[TaskSchema],
    meta_vocab: Vocabulary,
    gate_hidden: int = 1,
    head_hidden: int = 2,
) -> MetaAugParams:
    """
    Embed one multi-task learner (coordinate i answers task i) with a single expert.

    The expert is the learner with input rows of every task's causal mask
    zeroed, so head i matches learner coordinate i on input masked by the
    union of the masks.

    Raises:
        ConfigurationError: If the learner is narrower than the task count
    """
    if learner.width < len(schemas):
        raise ConfigurationError(f"Learner width {learner.width} is below the task count {len(schemas)}")
    if head_hidden < 2:
        raise ConfigurationError("Identity heads need head_hidden >= 2")
    _check_learners([learner], len(meta_vocab))

    config = MetaAugConfig(
        input_dim=len(meta_vocab),
        num_tasks=len(schemas),
        num_experts=1,
        expert_depth=learner.depth,
        expert_width=learner.width,
        gate_hidden=gate_hidden,
        head_hidden=head_hidden,
    )
    params = init(config)
    union = frozenset().union(*(s.cmask for s in schemas))
    _copy_learner(params.store, learner, expert_prefix(0), keep_mask(meta_vocab, union))
    for i in range(len(schemas)):
        _concentrated_gate(params.store, i, 0, config, 0.0)
        _identity_head(params.store, i, np.eye(config.expert_width)[i], 0.0, config)
    return params.bind(
        [s.task_id for s in schemas], [s.loss_kind for s in schemas], meta_vocab.digest()
    )


def embedding_overhead(config: MetaAugConfig) -> int:
    """Parameters an embedding adds on top of its learners: every gate and head."""
    return config.num_tasks * (gate_param_count(config) + head_param_count(config))
