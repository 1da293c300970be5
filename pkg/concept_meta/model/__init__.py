"""MetaAug network, baselines, learner embeddings and checkpoints."""
from .configs import BaselineConfig, BaselineKind, MetaAugConfig
from .costs import (
    backward_flop_count,
    baseline_flop_count,
    baseline_param_count,
    flop_count,
    gate_param_count,
    head_param_count,
    learner_advantage,
    param_count,
)
from .meta_aug import (
    ForwardCache,
    MetaAugParams,
    backward,
    forward,
    forward_batch,
    init,
    preactivations,
    predict_logits,
)
from .baselines import BaselineParams, backward_baseline, forward_baseline, init_baseline
from .embedding import (
    GATE_MARGIN,
    ExpertLearner,
    embed_multitask_learner,
    embed_single_task_learners,
    embedding_overhead,
)
from .checkpoint import CHECKPOINT_VERSION, Model, load_checkpoint, read_header, save_checkpoint

__all__ = [
    "BaselineConfig",
    "BaselineKind",
    "MetaAugConfig",
    "backward_flop_count",
    "baseline_flop_count",
    "baseline_param_count",
    "flop_count",
    "gate_param_count",
    "head_param_count",
    "learner_advantage",
    "param_count",
    "ForwardCache",
    "MetaAugParams",
    "backward",
    "forward",
    "forward_batch",
    "init",
    "preactivations",
    "predict_logits",
    "BaselineParams",
    "backward_baseline",
    "forward_baseline",
    "init_baseline",
    "GATE_MARGIN",
    "ExpertLearner",
    "embed_multitask_learner",
    "embed_single_task_learners",
    "embedding_overhead",
    "CHECKPOINT_VERSION",
    "Model",
    "load_checkpoint",
    "read_header",
    "save_checkpoint",
]
