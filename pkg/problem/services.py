"""
Sampling-based certification of the standing hypotheses on f and K.

Validation outcomes are values: a failed check returns a report with a
witness instead of raising. Only the Petrov estimate raises, because a
failed certificate leaves nothing to return.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from problem.dynamics import DynamicsSpec, unit_directions
from problem.exceptions import PetrovViolationError
from problem.targets import TargetSpec

logger = logging.getLogger(__name__)

DECLARED_TOLERANCE = 0.01
ZERO_TOLERANCE = 1e-9
MIN_PAIR_DISTANCE = 1e-6


@dataclass(frozen=True)
class ValidationReport:
    name: str
    passed: bool
    measured: Dict[str, float]
    declared: Dict[str, float]
    witness: Dict[str, list] = field(default_factory=dict)
    message: str = ''

    def as_dict(self) -> dict:
        return {
            'check': self.name,
            'passed': self.passed,
            'measured': self.measured,
            'declared': self.declared,
            'witness': self.witness,
            'message': self.message,
        }

    def __str__(self) -> str:
        verdict = 'PASS' if self.passed else 'FAIL'
        measured = ', '.join(f"{k}={v:.12g}" for k, v in self.measured.items())
        declared = ', '.join(f"{k}={v:.12g}" for k, v in self.declared.items())
        text = f"[{verdict}] {self.name}: measured {measured}; declared {declared}"
        if self.message:
            text += f" ({self.message})"
        return text


@dataclass(frozen=True, eq=False)
class PetrovCertificate:
    mu: float
    sigma: float
    shell_samples: int
    control_grid: np.ndarray
    worst_point: np.ndarray
    shell_points: np.ndarray

    def replay(self, dyn: DynamicsSpec, target: TargetSpec) -> float:
        """Largest min-over-controls inner product plus mu; never positive for a valid certificate."""
        best = HypothesisService.petrov_inner_products(dyn, target, self.shell_points).min(axis=1)
        return float(best.max() + self.mu)


def domain_bounds(domain: Sequence[Sequence[float]], dim: int) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = (np.atleast_1d(np.asarray(b, dtype=float)) for b in domain)
    if lo.shape != (dim,) or hi.shape != (dim,) or np.any(hi < lo):
        raise ValidationError(f"Domain must be a box [lo, hi] in R^{dim}.")
    return lo, hi


def check_scales(h_scales: Sequence[float]) -> np.ndarray:
    scales = np.asarray(h_scales, dtype=float)
    if scales.size == 0 or np.any(scales <= 0) or np.any(np.diff(scales) >= 0):
        raise ValidationError('h_scales must be positive and strictly decreasing.')
    return scales


def ratios_are_stable(ratios: Sequence[float], floor: float = ZERO_TOLERANCE) -> bool:
    """Ratios within a factor 2 of each other, ignoring values at the noise floor."""
    r = np.maximum(np.asarray(ratios, dtype=float), 0.0)
    if not np.all(np.isfinite(r)):
        return False
    return bool(r.max() <= 2 * r.min() + floor)


class HypothesisService:
    @staticmethod
    def validate_h1(
        dyn: DynamicsSpec,
        domain: Sequence[Sequence[float]],
        n_samples: int,
        seed: int = 0
    ) -> ValidationReport:
        if n_samples < 2:
            raise ValidationError('validate_h1 needs at least two samples.')

        lo, hi = domain_bounds(domain, dyn.dim_state)
        rng = np.random.default_rng(seed)
        points = np.vstack([lo, hi, rng.uniform(lo, hi, size=(n_samples, dyn.dim_state))])

        values = dyn.evaluate(points[:, None, :], dyn.controls[None, :, :])
        norms = np.linalg.norm(values, axis=-1)
        i_max, k_max = np.unravel_index(np.argmax(norms), norms.shape)
        max_norm = float(norms[i_max, k_max])

        # far pairs (neighbours in sampling order) and near pairs (small offsets)
        steps = rng.normal(size=points.shape)
        steps *= (1e-3 * np.maximum(hi - lo, 1e-6)) / np.linalg.norm(steps, axis=1, keepdims=True).clip(1e-12)
        partners = np.vstack([np.roll(points, -1, axis=0), points + steps])
        origins = np.vstack([points, points])
        gaps = np.linalg.norm(partners - origins, axis=1)
        keep = gaps >= MIN_PAIR_DISTANCE
        origins, partners, gaps = origins[keep], partners[keep], gaps[keep]

        f_origin = dyn.evaluate(origins[:, None, :], dyn.controls[None, :, :])
        f_partner = dyn.evaluate(partners[:, None, :], dyn.controls[None, :, :])
        slopes = np.linalg.norm(f_origin - f_partner, axis=-1) / gaps[:, None]
        j_max, _ = np.unravel_index(np.argmax(slopes), slopes.shape)
        max_slope = float(slopes.max())

        bound_ok = max_norm <= dyn.bound_M * (1 + DECLARED_TOLERANCE)
        slope_ok = max_slope <= dyn.lipschitz_L * (1 + DECLARED_TOLERANCE) + ZERO_TOLERANCE

        witness = {}
        messages = []
        if not bound_ok:
            witness['point'] = points[i_max].tolist()
            witness['control'] = dyn.controls[k_max].tolist()
            messages.append('field bound exceeded')
        if not slope_ok:
            witness['pair'] = [origins[j_max].tolist(), partners[j_max].tolist()]
            messages.append('Lipschitz constant exceeded')

        report = ValidationReport(
            name='H1',
            passed=bound_ok and slope_ok,
            measured={'max_field_norm': max_norm, 'max_slope': max_slope},
            declared={'bound_M': dyn.bound_M, 'lipschitz_L': dyn.lipschitz_L},
            witness=witness,
            message='; '.join(messages),
        )
        logger.debug(str(report))
        return report

    @staticmethod
    def validate_h3(
        dyn: DynamicsSpec,
        domain: Sequence[Sequence[float]],
        n_samples: int,
        h_scales: Sequence[float],
        seed: int = 0
    ) -> ValidationReport:
        scales = check_scales(h_scales)
        lo, hi = domain_bounds(domain, dyn.dim_state)
        rng = np.random.default_rng(seed)
        points = rng.uniform(lo, hi, size=(n_samples, dyn.dim_state))
        directions = rng.normal(size=points.shape)
        directions /= np.linalg.norm(directions, axis=1, keepdims=True).clip(1e-12)

        controls = dyn.controls[None, :, :]
        centre = dyn.evaluate(points[:, None, :], controls)

        ratio_by_scale = []
        witness_point = points[0]
        best = -1.0
        for h in scales:
            shift = (h * directions)[:, None, :]
            second = dyn.evaluate(points[:, None, :] + shift, controls) \
                + dyn.evaluate(points[:, None, :] - shift, controls) - 2 * centre
            ratios = np.linalg.norm(second, axis=-1) / h ** 2
            ratio_by_scale.append(float(ratios.max()))
            if ratios.max() > best:
                best = float(ratios.max())
                witness_point = points[np.unravel_index(np.argmax(ratios), ratios.shape)[0]]

        max_ratio = max(ratio_by_scale)
        stable = ratios_are_stable(ratio_by_scale)
        bounded = max_ratio <= dyn.semiconcavity_cf * (1 + DECLARED_TOLERANCE) + ZERO_TOLERANCE

        messages = []
        if not stable:
            messages.append('second-difference ratio unstable across scales (not semiconcave)')
        if not bounded:
            messages.append('declared semiconcavity constant exceeded')

        measured = {'max_ratio': max_ratio}
        measured.update({f'ratio_h={h:.6g}': r for h, r in zip(scales, ratio_by_scale)})
        return ValidationReport(
            name='H3',
            passed=stable and bounded,
            measured=measured,
            declared={'semiconcavity_cf': dyn.semiconcavity_cf},
            witness={} if stable and bounded else {'point': witness_point.tolist()},
            message='; '.join(messages),
        )

    @staticmethod
    def shell_points(
        target: TargetSpec,
        sigma: float,
        shell_grid: int,
        radial_layers: Optional[int] = None
    ) -> np.ndarray:
        """Radial x angular grid on the closure of K_sigma minus K, nudged off both ends."""
        layers = radial_layers or getattr(settings, 'MINTAU_PETROV_RADIAL_LAYERS', 4)
        directions = unit_directions(target.dim, shell_grid)
        offsets = sigma * np.linspace(1e-9, 1 - 1e-9, max(layers, 2))

        points = [
            center + (radius + offset) * directions
            for center, radius in zip(target.centers, target.radii)
            for offset in offsets
        ]
        points = np.vstack(points)
        distances = target.signed_distance(points)
        return points[(distances > 0) & (distances < sigma)]

    @staticmethod
    def petrov_inner_products(dyn: DynamicsSpec, target: TargetSpec, points: np.ndarray) -> np.ndarray:
        """f(z, u) . (z - pi(z)) / |z - pi(z)| for every point (rows) and control (columns)."""
        nearest = target.nearest_ball(points)
        offsets = points - target.centers[nearest]
        normals = offsets / np.linalg.norm(offsets, axis=1, keepdims=True)
        values = dyn.evaluate(points[:, None, :], dyn.controls[None, :, :])
        return np.einsum('skn,sn->sk', values, normals)

    @staticmethod
    def estimate_petrov(
        dyn: DynamicsSpec,
        target: TargetSpec,
        sigma: float,
        shell_grid: int,
        radial_layers: Optional[int] = None
    ) -> PetrovCertificate:
        if sigma <= 0:
            raise ValidationError('sigma must be positive.')

        points = HypothesisService.shell_points(target, sigma, shell_grid, radial_layers)
        if len(points) == 0:
            raise ValidationError('The Petrov shell grid is empty.')

        best = HypothesisService.petrov_inner_products(dyn, target, points).min(axis=1)
        worst = int(np.argmax(best))
        mu = -float(best[worst])

        if mu <= 0:
            logger.warning("Petrov estimate failed at %s (value %.12g)", points[worst].tolist(), -mu)
            raise PetrovViolationError(points[worst], -mu, 0.0)

        logger.debug("Petrov certificate mu=%.12g on %d shell samples", mu, len(points))
        return PetrovCertificate(
            mu=mu,
            sigma=sigma,
            shell_samples=len(points),
            control_grid=dyn.controls,
            worst_point=points[worst],
            shell_points=points,
        )

    @staticmethod
    def estimate_dk_semiconcavity(
        target: TargetSpec,
        shell_r: float,
        n_samples: int,
        h_scales: Sequence[float],
        seed: int = 0
    ) -> float:
        if shell_r <= 0:
            raise ValidationError('shell_r must be positive.')
        scales = check_scales(h_scales)

        rng = np.random.default_rng(seed)
        balls = rng.integers(len(target.radii), size=n_samples)
        directions = rng.normal(size=(n_samples, target.dim))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True).clip(1e-12)
        offsets = rng.uniform(0.0, shell_r, size=(n_samples, 1))
        first = target.centers[balls] + (target.radii[balls][:, None] + offsets) * directions

        def in_shell(z: np.ndarray) -> np.ndarray:
            sd = target.signed_distance(z)
            return (sd >= 0) & (sd < shell_r)

        constant = 0.0
        for h in scales:
            steps = rng.normal(size=first.shape)
            steps *= h / np.linalg.norm(steps, axis=1, keepdims=True).clip(1e-12)
            second = first + steps
            middle = 0.5 * (first + second)
            keep = in_shell(first) & in_shell(second) & in_shell(middle)
            keep &= np.linalg.norm(first - second, axis=1) >= MIN_PAIR_DISTANCE
            if not np.any(keep):
                continue

            numer = target.distance(first[keep]) + target.distance(second[keep]) \
                - 2 * target.distance(middle[keep])
            ratios = numer / np.sum((first[keep] - second[keep]) ** 2, axis=1)
            constant = max(constant, float(ratios.max()))

        return constant

    @staticmethod
    def calibrate_target(
        target: TargetSpec,
        shell_r: float,
        n_samples: int,
        h_scales: Sequence[float],
        seed: int = 0
    ) -> TargetSpec:
        constant = HypothesisService.estimate_dk_semiconcavity(target, shell_r, n_samples, h_scales, seed)
        return target.with_dk_semiconcavity(constant, shell_r)

    @staticmethod
    def validate_all(
        dyn: DynamicsSpec,
        domain: Sequence[Sequence[float]],
        n_samples: int,
        h_scales: Sequence[float],
        seed: int = 0
    ) -> List[ValidationReport]:
        return [
            HypothesisService.validate_h1(dyn, domain, n_samples, seed),
            HypothesisService.validate_h3(dyn, domain, n_samples, h_scales, seed),
        ]
