"""Closed-form parameter and flop counts.

A multiply-add counts as 2 flops: an affine map on one row costs
2*in*out + out. Relu and residual additions cost one flop per element,
softmax 3 per entry, and the gated combination (2E - 1) per coordinate.
"""
from concept_meta.model.configs import BaselineConfig, MetaAugConfig


def affine_params(n_in: int, n_out: int) -> int:
    return n_in * n_out + n_out


def affine_flops(n_in: int, n_out: int) -> int:
    return 2 * n_in * n_out + n_out


def expert_param_count(input_dim: int, width: int, depth: int) -> int:
    """Input projection plus `depth` residual blocks."""
    return affine_params(input_dim, width) + depth * affine_params(width, width)


def gate_param_count(config: MetaAugConfig) -> int:
    return affine_params(config.input_dim, config.gate_hidden) + affine_params(
        config.gate_hidden, config.num_experts
    )


def head_param_count(config: MetaAugConfig) -> int:
    return affine_params(config.expert_width, config.head_hidden) + affine_params(config.head_hidden, 1)


def param_count(config: MetaAugConfig) -> int:
    """Total scalar parameters of a MetaAug network."""
    expert = expert_param_count(config.input_dim, config.expert_width, config.expert_depth)
    return config.num_experts * expert + config.num_tasks * (
        gate_param_count(config) + head_param_count(config)
    )


def expert_flop_count(input_dim: int, width: int, depth: int) -> int:
    return affine_flops(input_dim, width) + depth * (affine_flops(width, width) + 2 * width)


def flop_count(config: MetaAugConfig) -> int:
    """Flops of one forward invocation for one instance (all experts, one gate, one head)."""
    experts = config.num_experts * expert_flop_count(
        config.input_dim, config.expert_width, config.expert_depth
    )
    gate = (
        affine_flops(config.input_dim, config.gate_hidden)
        + config.gate_hidden
        + affine_flops(config.gate_hidden, config.num_experts)
        + 3 * config.num_experts
    )
    combine = (2 * config.num_experts - 1) * config.expert_width
    head = affine_flops(config.expert_width, config.head_hidden) + config.head_hidden + affine_flops(
        config.head_hidden, 1
    )
    return experts + gate + combine + head


def backward_flop_count(forward_flops: int) -> int:
    return 2 * forward_flops


def baseline_param_count(config: BaselineConfig) -> int:
    widths = (config.input_dim, *config.hidden_widths)
    trunk = sum(affine_params(a, b) for a, b in zip(widths[:-1], widths[1:]))
    return trunk + config.num_tasks * affine_params(widths[-1], 1)


def baseline_flop_count(config: BaselineConfig) -> int:
    widths = (config.input_dim, *config.hidden_widths)
    trunk = sum(affine_flops(a, b) + b for a, b in zip(widths[:-1], widths[1:]))
    return trunk + affine_flops(widths[-1], 1)


def learner_advantage(
    config: MetaAugConfig, reference_params: int, reference_flops: int
) -> tuple[float, float]:
    """
    Parameter and flop ratios of a MetaAug configuration against a reference learner.

    Args:
        config: MetaAug configuration
        reference_params: Parameter count of the reference model (or models)
        reference_flops: Forward flops of the reference

    Returns:
        Tuple of (alpha, beta) = (param ratio, flop ratio); the backward ratio
        equals beta since both sides cost twice their forward
    """
    alpha = param_count(config) / reference_params
    beta = flop_count(config) / reference_flops
    return alpha, beta
