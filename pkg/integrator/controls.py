from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from django.core.exceptions import ValidationError

from integrator.exceptions import IntegratorConfigurationError

GRID_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ControlSignal:
    """
    Piecewise-constant control. control_indices[i] is active on
    [breakpoints[i], breakpoints[i + 1]); tail_index from the last
    breakpoint on. A constant control has breakpoints (0,) and no indices.
    """
    breakpoints: Tuple[float, ...]
    control_indices: Tuple[int, ...]
    tail_index: int

    def __post_init__(self):
        breakpoints = tuple(float(b) for b in self.breakpoints)
        indices = tuple(int(i) for i in self.control_indices)

        if not breakpoints or breakpoints[0] != 0.0:
            raise ValidationError('Control breakpoints must start at 0.')

        if any(b >= c for b, c in zip(breakpoints, breakpoints[1:])):
            raise ValidationError('Control breakpoints must be strictly increasing.')

        if len(indices) != len(breakpoints) - 1:
            raise ValidationError('Expected one control index per bounded interval.')

        if min(indices + (int(self.tail_index),)) < 0:
            raise ValidationError('Control indices must be nonnegative.')

        object.__setattr__(self, 'breakpoints', breakpoints)
        object.__setattr__(self, 'control_indices', indices)
        object.__setattr__(self, 'tail_index', int(self.tail_index))

    @classmethod
    def constant(cls, index: int) -> 'ControlSignal':
        return cls((0.0,), (), index)

    @classmethod
    def from_word(cls, word: Sequence[int], mesh: float) -> 'ControlSignal':
        """One control index per mesh cell; the last one persists."""
        if not word:
            return cls.constant(0)
        word = list(word)
        return cls(tuple(k * mesh for k in range(len(word))), tuple(word[:-1]), word[-1])

    @classmethod
    def parse(cls, spec: str) -> 'ControlSignal':
        """
        Parse "2" (constant) or "1@0,0@0.5,1@1.25" (index@start pairs,
        first start 0, last index persists).
        """
        spec = spec.strip()
        if '@' not in spec:
            try:
                return cls.constant(int(spec))
            except ValueError:
                raise ValidationError(f"Invalid control spec '{spec}'.")

        try:
            pairs = [part.split('@') for part in spec.split(',')]
            indices = [int(i) for i, _ in pairs]
            starts = [float(s) for _, s in pairs]
        except ValueError:
            raise ValidationError(f"Invalid control spec '{spec}'.")

        return cls(tuple(starts), tuple(indices[:-1]), indices[-1])

    @property
    def max_index(self) -> int:
        return max(self.control_indices + (self.tail_index,))

    def index_at(self, t: float) -> int:
        position = int(np.searchsorted(self.breakpoints, t, side='right')) - 1
        if position < len(self.control_indices):
            return self.control_indices[position]
        return self.tail_index

    def concatenate(self, other: 'ControlSignal', at: float) -> 'ControlSignal':
        """This control on [0, at), then other shifted to start at at."""
        if at <= 0:
            return other

        kept = [b for b in self.breakpoints if b < at]
        breakpoints = tuple(kept) + tuple(at + b for b in other.breakpoints)
        indices = tuple(self.index_at(b) for b in kept) + other.control_indices
        return ControlSignal(breakpoints, indices, other.tail_index)

    def check_grid(self, dt: float) -> None:
        ratios = np.asarray(self.breakpoints) / dt
        if np.any(np.abs(ratios - np.round(ratios)) > GRID_TOLERANCE * np.maximum(ratios, 1.0)):
            raise IntegratorConfigurationError(
                f"Control breakpoints {self.breakpoints} are not on the dt = {dt:.12g} grid."
            )

    def indices_on_grid(self, k_start: int, k_stop: int, dt: float) -> np.ndarray:
        """Control index for each step [t_k, t_k+1), k_start <= k < k_stop."""
        midpoints = (np.arange(k_start, k_stop) + 0.5) * dt
        positions = np.searchsorted(self.breakpoints, midpoints, side='right') - 1
        lookup = np.asarray(self.control_indices + (self.tail_index,), dtype=int)
        return lookup[np.minimum(positions, len(self.control_indices))]

