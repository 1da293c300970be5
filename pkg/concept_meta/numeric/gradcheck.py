"""Central finite-difference verification of analytic gradients."""
import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from concept_meta.numeric.layers import Matrix
from concept_meta.numeric.store import ParamStore

logger = logging.getLogger(__name__)

LossFn = Callable[[ParamStore], float]
ActivationProbe = Callable[[ParamStore], Matrix]

ERROR_FLOOR = 1e-8


@dataclass(frozen=True)
class GradCheckReport:
    """Outcome of a finite-difference check."""

    max_relative_error: float
    worst_parameter: str | None
    worst_index: tuple[int, ...] | None
    checked: int
    excluded: int

    def passed(self, tolerance: float = 1e-4) -> bool:
        return self.max_relative_error <= tolerance


def relative_error(analytic: float, numeric: float, floor: float = ERROR_FLOOR) -> float:
    """|a - n| / max(|a|, |n|, floor); below the floor the error is absolute, scaled by 1/floor."""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def finite_diff_check(
    loss_fn: LossFn,
    params: ParamStore,
    h: float = 1e-5,
    num_samples: int | None = None,
    seed: int = 0,
    activation_probe: ActivationProbe | None = None,
    floor: float = ERROR_FLOOR,
) -> GradCheckReport:
    """
    Compare analytic gradients with central differences.

    Args:
        loss_fn: Deterministic loss. Called on zeroed gradients, it must
            accumulate the analytic gradient into the store and return the loss
        params: Parameters to check; restored exactly afterwards
        h: Perturbation size
        num_samples: Coordinates sampled per parameter (all when None)
        seed: Seed for coordinate sampling
        activation_probe: Returns every relu pre-activation; coordinates whose
            perturbation moves a pre-activation within 10*h of zero, or across it,
            are skipped as kinks
        floor: Denominator floor of the relative error

    Returns:
        GradCheckReport with the worst relative error over checked coordinates
    """
    rng = np.random.default_rng(seed)

    params.zero_grad()
    loss_fn(params)
    analytic = {name: params.grad(name).copy() for name in params}
    params.zero_grad()

    base_probe = activation_probe(params) if activation_probe is not None else None

    worst = 0.0
    worst_name: str | None = None
    worst_index: tuple[int, ...] | None = None
    checked = 0
    excluded = 0

    for name in params:
        value = params[name]
        flat_count = value.size
        if num_samples is None or num_samples >= flat_count:
            coords = np.arange(flat_count)
        else:
            coords = rng.choice(flat_count, size=num_samples, replace=False)

        for flat in coords:
            index = np.unravel_index(int(flat), value.shape)
            original = value[index]

            value[index] = original + h
            f_plus = loss_fn(params)
            probe_plus = activation_probe(params) if base_probe is not None else None
            value[index] = original - h
            f_minus = loss_fn(params)
            probe_minus = activation_probe(params) if base_probe is not None else None
            value[index] = original
            params.zero_grad()

            if base_probe is not None:
                moved = (probe_plus != base_probe) | (probe_minus != base_probe)
                near = np.abs(base_probe) <= 10.0 * h
                crossed = (np.sign(probe_plus) != np.sign(base_probe)) | (
                    np.sign(probe_minus) != np.sign(base_probe)
                )
                if np.any(moved & near) or np.any(crossed):
                    excluded += 1
                    continue

            numeric = (f_plus - f_minus) / (2.0 * h)
            err = relative_error(float(analytic[name][index]), float(numeric), floor)
            checked += 1
            if err > worst:
                worst = err
                worst_name = name
                worst_index = tuple(int(i) for i in index)

    logger.debug("Gradient check: %d checked, %d excluded, worst %.3e", checked, excluded, worst)
    return GradCheckReport(worst, worst_name, worst_index, checked, excluded)
