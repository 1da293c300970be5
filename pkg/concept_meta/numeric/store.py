"""Named parameter storage with parallel gradient buffers."""
from collections.abc import Iterator

import numpy as np

from concept_meta.errors import ConfigurationError, DimensionError
from concept_meta.numeric.layers import Matrix


class ParamStore:
    """Ordered map of parameter name to float64 array, each with a gradient buffer."""

    def __init__(self):
        """Initialize an empty store."""
        self._params: dict[str, Matrix] = {}
        self._grads: dict[str, Matrix] = {}
        self.step = 0

    def add(self, name: str, value: Matrix) -> Matrix:
        """
        Register a parameter and allocate its zeroed gradient buffer.

        Args:
            name: Unique parameter name
            value: Initial value

        Returns:
            The stored array

        Raises:
            ConfigurationError: If the name is already registered
        """
        if name in self._params:
            raise ConfigurationError(f"Duplicate parameter name: {name}")
        array = np.array(value, dtype=np.float64)
        self._params[name] = array
        self._grads[name] = np.zeros_like(array)
        return array

    def __getitem__(self, name: str) -> Matrix:
        return self._params[name]

    def __setitem__(self, name: str, value: Matrix) -> None:
        current = self._params[name]
        value = np.asarray(value, dtype=np.float64)
        if value.shape != current.shape:
            raise DimensionError(f"Cannot assign {name}", value.shape, current.shape)
        current[...] = value

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def names(self, prefix: str = "") -> list[str]:
        """Parameter names in registration order, optionally filtered by prefix."""
        return [n for n in self._params if n.startswith(prefix)]

    def items(self):
        return self._params.items()

    def grad(self, name: str) -> Matrix:
        """Gradient buffer for a parameter."""
        return self._grads[name]

    def accumulate(self, name: str, gradient: Matrix) -> None:
        """Add a gradient contribution into a parameter's buffer."""
        buffer = self._grads[name]
        gradient = np.asarray(gradient, dtype=np.float64).reshape(buffer.shape)
        buffer += gradient

    def zero_grad(self) -> None:
        """Reset every gradient buffer to zero."""
        for buffer in self._grads.values():
            buffer.fill(0.0)

    def num_parameters(self) -> int:
        """Total scalar parameter count."""
        return int(sum(p.size for p in self._params.values()))

    def grad_norm(self) -> float:
        """Global L2 norm over all gradient buffers."""
        return float(np.sqrt(sum(float(np.sum(g * g)) for g in self._grads.values())))

    def copy(self) -> "ParamStore":
        """Deep copy, including gradients and the step counter."""
        clone = ParamStore()
        for name, value in self._params.items():
            clone._params[name] = value.copy()
            clone._grads[name] = self._grads[name].copy()
        clone.step = self.step
        return clone

    def state_dict(self) -> dict[str, Matrix]:
        """Copies of every parameter value keyed by name."""
        return {name: value.copy() for name, value in self._params.items()}

    def load_state_dict(self, state: dict[str, Matrix]) -> None:
        """Overwrite parameter values in place; names and shapes must match."""
        missing = set(self._params) ^ set(state)
        if missing:
            raise ConfigurationError(f"Parameter names differ: {sorted(missing)}")
        for name, value in state.items():
            self[name] = value
