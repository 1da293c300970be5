"""Finite-difference verification of the training gradients on a small problem."""
import logging
from dataclasses import dataclass, replace

import numpy as np
import numpy.typing as npt

from concept_meta.model import MetaAugConfig, Model, init
from concept_meta.numeric import GradCheckReport, Matrix, ParamStore, finite_diff_check
from concept_meta.training.loop import instance_losses

logger = logging.getLogger(__name__)

TINY_CONFIG = MetaAugConfig(
    input_dim=6, num_tasks=2, num_experts=2, expert_depth=2, expert_width=8, gate_hidden=4, head_hidden=4
)

# Vanishing network gradients keep ~1e-11 of round-off in the central difference
NETWORK_ERROR_FLOOR = 1e-5


@dataclass(frozen=True)
class GradProblem:
    """A fixed batch to differentiate the summed task loss on."""

    X: Matrix
    tasks: npt.NDArray[np.int64]
    labels: Matrix
    regression: npt.NDArray[np.bool_]


def tiny_problem(config: MetaAugConfig = TINY_CONFIG, rows: int = 8, seed: int = 0) -> GradProblem:
    """Random inputs, alternating tasks, binary labels; the last task is regression when there are several."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, config.input_dim))
    tasks = np.arange(rows, dtype=np.int64) % config.num_tasks
    regression = (tasks == config.num_tasks - 1) & (config.num_tasks > 1)
    labels = np.where(regression, rng.normal(size=rows), rng.integers(0, 2, size=rows)).astype(np.float64)
    return GradProblem(X, tasks, labels, regression)


def check_gradients(
    params: Model,
    problem: GradProblem,
    h: float = 1e-5,
    num_samples: int | None = None,
    seed: int = 0,
    floor: float = NETWORK_ERROR_FLOOR,
) -> GradCheckReport:
    """
    Check every parameter's analytic gradient of the summed batch loss.

    Coordinates at a relu kink are excluded through the model's pre-activations.
    """

    def loss_fn(_: ParamStore) -> float:
        logits, cache = params.forward_batch(problem.X, problem.tasks)
        losses, grads = instance_losses(logits, problem.labels, problem.regression)
        params.backward(cache, grads)
        return float(losses.sum())

    def probe(_: ParamStore) -> Matrix:
        _, cache = params.forward_batch(problem.X, problem.tasks)
        return params.preactivations(cache)

    report = finite_diff_check(loss_fn, params.store, h, num_samples, seed, activation_probe=probe, floor=floor)
    logger.info(
        "Gradient check: max relative error %.3e over %d coordinates (%d excluded)",
        report.max_relative_error, report.checked, report.excluded,
    )
    return report


def tiny_gradcheck(seed: int = 0, h: float = 1e-5) -> GradCheckReport:
    """The built-in check: TINY_CONFIG, every coordinate."""
    params = init(replace(TINY_CONFIG, seed=seed))
    return check_gradients(params, tiny_problem(seed=seed), h=h, seed=seed)
