"""Meta-training, online adaptation, single-task meta learning and baselines."""
from .configs import AdaptConfig, MetaTrainConfig
from .run_log import COLUMNS, LogRow, RunLog
from .loop import FitResult, fit, instance_losses, meta_loss, resolve_head_map
from .meta_train import init_for, meta_train, sized_for
from .adapt import AdaptResult, check_compatible, online_adapt
from .baseline import train_baseline
from .single_task import SingleTaskResult, meta_epoch_sweep, single_task_meta
from .verify import TINY_CONFIG, GradProblem, check_gradients, tiny_gradcheck, tiny_problem

__all__ = [
    "AdaptConfig",
    "MetaTrainConfig",
    "COLUMNS",
    "LogRow",
    "RunLog",
    "FitResult",
    "fit",
    "instance_losses",
    "meta_loss",
    "resolve_head_map",
    "init_for",
    "meta_train",
    "sized_for",
    "AdaptResult",
    "check_compatible",
    "online_adapt",
    "train_baseline",
    "SingleTaskResult",
    "meta_epoch_sweep",
    "single_task_meta",
    "TINY_CONFIG",
    "GradProblem",
    "check_gradients",
    "tiny_gradcheck",
    "tiny_problem",
]
