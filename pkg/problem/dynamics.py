"""
Dynamics of the delayed system y'(t) = f(y(t - tau), u(t)).

Field evaluators are vectorized: z has shape (..., n), u has shape
(..., m), the result has shape (..., n).
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np
from django.core.exceptions import ValidationError


def radial_clamp(v: np.ndarray, bound: float) -> np.ndarray:
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    scale = np.minimum(1.0, bound / np.maximum(norms, np.finfo(float).tiny))
    return v * scale


def _unit_speed(z: np.ndarray, u: np.ndarray, params: dict, bound: float) -> np.ndarray:
    return np.broadcast_to(u, np.broadcast_shapes(z.shape, u.shape)).astype(float)


def _clamped_linear(z: np.ndarray, u: np.ndarray, params: dict, bound: float) -> np.ndarray:
    A = np.asarray(params['A'], dtype=float)
    B = np.asarray(params['B'], dtype=float)
    return radial_clamp(z @ A.T + u @ B.T, bound)


def _scalar_decay(z: np.ndarray, u: np.ndarray, params: dict, bound: float) -> np.ndarray:
    return radial_clamp(-z + u, bound)


FIELDS: Dict[str, Callable[[np.ndarray, np.ndarray, dict, float], np.ndarray]] = {
    'unit_speed': _unit_speed,
    'clamped_linear': _clamped_linear,
    'scalar_decay': _scalar_decay,
}

STATE_INDEPENDENT_FIELDS = ('unit_speed',)


def unit_directions(dim: int, count: int) -> np.ndarray:
    """
    Evenly spread unit vectors: {-1, +1} on the line, equal angles in the
    plane (starting at angle 0), a Fibonacci lattice on the sphere.
    """
    if dim == 1:
        return np.array([[-1.0], [1.0]])

    if dim == 2:
        angles = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(angles), np.sin(angles)])

    if dim == 3:
        i = np.arange(count) + 0.5
        polar = np.arccos(1 - 2 * i / count)
        azimuth = np.pi * (1 + 5 ** 0.5) * i
        return np.column_stack([
            np.cos(azimuth) * np.sin(polar),
            np.sin(azimuth) * np.sin(polar),
            np.cos(polar),
        ])

    raise ValueError(f"Direction grids are available for n <= 3, got n = {dim}.")


@dataclass(frozen=True, eq=False)
class DynamicsSpec:
    name: str
    dim_state: int
    dim_control: int
    bound_M: float
    lipschitz_L: float
    semiconcavity_cf: float
    controls: np.ndarray
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        controls = np.atleast_2d(np.array(self.controls, dtype=float))
        self._validate(controls)
        controls.setflags(write=False)
        object.__setattr__(self, 'controls', controls)

    def _validate(self, controls: np.ndarray) -> None:
        if self.name not in FIELDS:
            raise ValidationError(f"Unknown field evaluator '{self.name}'.")

        if self.dim_state < 1 or self.dim_control < 1:
            raise ValidationError('State and control dimensions must be positive.')

        if self.bound_M <= 0:
            raise ValidationError('bound_M must be positive.')

        if self.lipschitz_L < 0 or self.semiconcavity_cf < 0:
            raise ValidationError('lipschitz_L and semiconcavity_cf must be nonnegative.')

        if controls.shape[0] == 0 or controls.shape[1] != self.dim_control:
            raise ValidationError(
                f"Controls must be a nonempty list of points in R^{self.dim_control}."
            )

        if len(np.unique(controls, axis=0)) != len(controls):
            raise ValidationError('The control list contains duplicate entries.')

        if self.name == 'unit_speed' and self.dim_state != self.dim_control:
            raise ValidationError('unit_speed needs dim_control == dim_state.')

        if self.name == 'scalar_decay' and (self.dim_state, self.dim_control) != (1, 1):
            raise ValidationError('scalar_decay is defined for n = m = 1.')

    @classmethod
    def unit_speed(
        cls,
        dim: int,
        controls: Optional[Sequence[Sequence[float]]] = None,
        n_directions: int = 16,
        bound_M: float = 1.0
    ) -> 'DynamicsSpec':
        if controls is None:
            controls = unit_directions(dim, n_directions)
        return cls('unit_speed', dim, dim, bound_M, 0.0, 0.0, controls)

    @classmethod
    def scalar_decay(
        cls,
        controls: Sequence[float],
        bound_M: float,
        lipschitz_L: float = 1.0,
        semiconcavity_cf: float = 0.0
    ) -> 'DynamicsSpec':
        return cls(
            'scalar_decay', 1, 1, bound_M, lipschitz_L, semiconcavity_cf,
            np.asarray(controls, dtype=float).reshape(-1, 1)
        )

    @classmethod
    def clamped_linear(
        cls,
        A: Sequence[Sequence[float]],
        B: Sequence[Sequence[float]],
        controls: Sequence[Sequence[float]],
        bound_M: float,
        lipschitz_L: float,
        semiconcavity_cf: float = 0.0
    ) -> 'DynamicsSpec':
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        return cls(
            'clamped_linear', A.shape[0], B.shape[1], bound_M, lipschitz_L,
            semiconcavity_cf, controls, {'A': A.tolist(), 'B': B.tolist()}
        )

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    @property
    def state_independent(self) -> bool:
        return self.name in STATE_INDEPENDENT_FIELDS

    def evaluate(self, z: np.ndarray, u: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        u = np.asarray(u, dtype=float)
        return FIELDS[self.name](z, u, self.params, self.bound_M)

    def evaluate_indexed(self, z: np.ndarray, indices: np.ndarray) -> np.ndarray:
        return self.evaluate(z, self.controls[np.asarray(indices)])

    def evaluate_all_controls(self, z: np.ndarray) -> np.ndarray:
        """Field at a single point z for every control, shape (K, n)."""
        z = np.asarray(z, dtype=float)
        return self.evaluate(np.broadcast_to(z, (self.n_controls, self.dim_state)), self.controls)
