import numpy as np

from funcspace.exceptions import MintauError


class PetrovViolationError(MintauError):
    """No control points inward with margin mu at the given point."""

    def __init__(self, point: np.ndarray, value: float, mu: float):
        point = np.asarray(point, dtype=float)
        super().__init__(
            f"Petrov condition fails at z = {point.tolist()}: best inner product "
            f"{value:.12g} > -mu = {-mu:.12g}"
        )
        self.point = point
        self.value = value
        self.mu = mu
