from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from django.core.exceptions import ValidationError


TARGET_KINDS = ('ball', 'union_of_balls')


@dataclass(frozen=True, eq=False)
class TargetSpec:
    """
    Compact target made of closed Euclidean balls.

    Distances and projections use the nearest ball; equidistant balls
    resolve to the lowest index.
    """
    kind: str
    centers: np.ndarray
    radii: np.ndarray
    dk_semiconcavity_c: Optional[float] = None
    dk_shell_r: Optional[float] = None

    def __post_init__(self):
        centers = np.atleast_2d(np.array(self.centers, dtype=float))
        radii = np.atleast_1d(np.array(self.radii, dtype=float))
        self._validate(self.kind, centers, radii)
        centers.setflags(write=False)
        radii.setflags(write=False)
        object.__setattr__(self, 'centers', centers)
        object.__setattr__(self, 'radii', radii)

    @staticmethod
    def _validate(kind: str, centers: np.ndarray, radii: np.ndarray) -> None:
        if kind not in TARGET_KINDS:
            raise ValidationError(f"Unknown target kind '{kind}'.")

        if centers.ndim != 2 or len(centers) != len(radii):
            raise ValidationError('Every ball needs exactly one center and one radius.')

        if kind == 'ball' and len(radii) != 1:
            raise ValidationError("A 'ball' target has exactly one ball.")

        if len(radii) == 0 or np.any(radii <= 0):
            raise ValidationError('Radii must be positive so that the target has interior.')

    @classmethod
    def ball(cls, center: Sequence[float], radius: float) -> 'TargetSpec':
        return cls('ball', np.atleast_2d(np.asarray(center, dtype=float)), [radius])

    @classmethod
    def union_of_balls(cls, centers: Sequence[Sequence[float]], radii: Sequence[float]) -> 'TargetSpec':
        return cls('union_of_balls', np.asarray(centers, dtype=float), radii)

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def _ball_gaps(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        offsets = z[..., None, :] - self.centers
        return np.linalg.norm(offsets, axis=-1) - self.radii

    def nearest_ball(self, z: np.ndarray) -> np.ndarray:
        return np.argmin(self._ball_gaps(z), axis=-1)

    def signed_distance(self, z: np.ndarray) -> np.ndarray:
        """Minimum over balls of |z - c| - r; negative in the interior."""
        return self._ball_gaps(z).min(axis=-1)

    def distance(self, z: np.ndarray) -> np.ndarray:
        return np.maximum(self.signed_distance(z), 0.0)

    def contains(self, z: np.ndarray) -> np.ndarray:
        return self.signed_distance(z) <= 0.0

    def projection(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.contains(z):
            return z.copy()

        i = int(self.nearest_ball(z))
        offset = z - self.centers[i]
        return self.centers[i] + self.radii[i] * offset / np.linalg.norm(offset)

    def outward_normal(self, z: np.ndarray) -> np.ndarray:
        """
        Unit vector (z - pi(z)) / |z - pi(z)|. On the boundary of a ball
        this is the outward normal of the nearest ball.
        """
        z = np.asarray(z, dtype=float)
        i = int(self.nearest_ball(z))
        offset = z - self.centers[i]
        norm = np.linalg.norm(offset)
        if norm == 0.0:
            raise ValueError('Outward normal is undefined at a ball center.')
        return offset / norm

    def with_dk_semiconcavity(self, constant: float, shell_r: float) -> 'TargetSpec':
        return replace(self, dk_semiconcavity_c=float(constant), dk_shell_r=float(shell_r))
