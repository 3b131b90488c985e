"""
History paths: sampled elements of C([-tau, 0]; R^n).

A path stores N + 1 samples on the uniform grid s_i = -tau + i * tau / N
and is linear between grid points, so the sup norm and the Lipschitz
constant are both exact maxima over the stored samples.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from funcspace.exceptions import ShapeError


def default_samples() -> int:
    return getattr(settings, 'MINTAU_HISTORY_SAMPLES', 64)


@dataclass(frozen=True, eq=False)
class HistoryPath:
    delay: float
    samples: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        self._validate(self.delay, samples)
        samples.setflags(write=False)
        object.__setattr__(self, 'delay', float(self.delay))
        object.__setattr__(self, 'samples', samples)

    @staticmethod
    def _validate(delay: float, samples: np.ndarray) -> None:
        if not np.isfinite(delay) or delay <= 0:
            raise ValidationError(f"Delay must be a positive real, got {delay}.")

        if samples.ndim != 2 or samples.shape[1] < 1:
            raise ValidationError(f"Samples must form an (N+1, n) array, got shape {samples.shape}.")

        if samples.shape[0] < 2:
            raise ValidationError('A history path needs at least two samples (N >= 1).')

        if not np.all(np.isfinite(samples)):
            raise ValidationError('History samples must be finite.')

    @classmethod
    def constant(
        cls,
        delay: float,
        value: Union[float, Sequence[float]],
        n_intervals: Optional[int] = None
    ) -> 'HistoryPath':
        n_intervals = n_intervals or default_samples()
        point = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(delay, np.tile(point, (n_intervals + 1, 1)))

    @classmethod
    def from_function(
        cls,
        delay: float,
        func: Callable[[float], Union[float, Sequence[float]]],
        n_intervals: Optional[int] = None
    ) -> 'HistoryPath':
        n_intervals = n_intervals or default_samples()
        grid = np.linspace(-delay, 0.0, n_intervals + 1)
        values = [np.atleast_1d(np.asarray(func(s), dtype=float)) for s in grid]
        return cls(delay, np.vstack(values))

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> 'HistoryPath':
        table = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
        grid = table[:, 0]
        return cls(-grid[0], table[:, 1:])

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def n_intervals(self) -> int:
        return self.samples.shape[0] - 1

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(-self.delay, 0.0, self.n_intervals + 1)

    @property
    def at_zero(self) -> np.ndarray:
        return self.samples[-1]

    @property
    def shape_key(self) -> tuple:
        return (self.dim, self.delay, self.n_intervals)

    def evaluate(self, s: Union[float, np.ndarray]) -> np.ndarray:
        """Value of the path at s in [-tau, 0]; vectorized over s."""
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < -self.delay * (1 + 1e-12)) or np.any(s_arr > self.delay * 1e-12):
            raise ValueError(f"Evaluation point outside [-{self.delay}, 0].")

        columns = [np.interp(s_arr, self.grid, self.samples[:, i]) for i in range(self.dim)]
        return np.stack(columns, axis=-1)

    def to_csv(self, path: Union[str, Path]) -> None:
        header = ','.join(['s'] + [f'x_{i + 1}' for i in range(self.dim)])
        table = np.column_stack([self.grid, self.samples])
        np.savetxt(path, table, delimiter=',', header=header, comments='', fmt='%.12g')


@dataclass(frozen=True)
class LipschitzClassTag:
    bound: float

    def contains(self, path: HistoryPath, tol: Optional[float] = None) -> bool:
        tol = getattr(settings, 'MINTAU_TOL_LIP', 1e-9) if tol is None else tol
        return lip_constant(path) <= self.bound * (1 + tol) + tol


def sup_norm(path: HistoryPath) -> float:
    return float(np.linalg.norm(path.samples, axis=1).max())


def lip_constant(path: HistoryPath) -> float:
    steps = np.linalg.norm(np.diff(path.samples, axis=0), axis=1)
    return float(steps.max() * path.n_intervals / path.delay)


def combine(x: HistoryPath, h: HistoryPath, a: float) -> HistoryPath:
    """Samplewise x + a * h."""
    if x.dim != h.dim or x.n_intervals != h.n_intervals or not np.isclose(x.delay, h.delay):
        raise ShapeError('History grids do not match', x.shape_key, h.shape_key)

    return HistoryPath(x.delay, x.samples + a * h.samples)


def difference(x: HistoryPath, y: HistoryPath) -> HistoryPath:
    return combine(x, y, -1.0)
