"""
Empirical certification of the regularity of T on benchmark problems:
dynamic programming, the distance bound, the local Lipschitz modulus
and semiconcavity (interior second differences and the boundary lemma).

Every T evaluation in one check goes through the same OraclePolicy, so
the approximation bias of the oracle is shared by the compared values.
Oracle failures skip the sample with a notice; they never fail a check.
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from funcspace.paths import HistoryPath, LipschitzClassTag, combine, difference, sup_norm
from integrator.controls import ControlSignal
from integrator.exceptions import HistoryDomainError
from integrator.services import IntegratorService, default_dt
from mintime.services import MinTimeService, OraclePolicy
from problem.dynamics import DynamicsSpec
from problem.services import ratios_are_stable
from problem.targets import TargetSpec
from regularity.exceptions import RegularityPreconditionError
from regularity.reports import CertificationReport, CertificationRow, SemiconcavityEstimate
from regularity.utils import inputs_digest, parallel_map
from steering.constants import (
    SteeringParams,
    boundary_radius,
    check_semiconcavity_delay,
    lipschitz_modulus,
    lipschitz_radius,
    semiconcavity_delay_threshold,
)

logger = logging.getLogger(__name__)

DYADIC_SCALES = (1.0, 0.5, 0.25, 0.125)
BOUNDARY_TOLERANCE = 1e-9


def _oracle(dyn: DynamicsSpec, target: TargetSpec, policy: OraclePolicy) -> Callable[[HistoryPath], Optional[float]]:
    def evaluate(x: HistoryPath) -> Optional[float]:
        result = MinTimeService.value(x, dyn, target, policy)
        return None if result is None else result.value
    return evaluate


def _log_skipped(check: str, rows: Sequence[CertificationRow]) -> None:
    for row in rows:
        if row.skipped:
            logger.warning("%s: skipped %s (%s)", check, row.sample_id, row.note)


def _scale_summary(
    ratios: Sequence[Tuple[int, float]],
    scales: Sequence[float]
) -> Tuple[List[float], List[float]]:
    """Largest ratio per scale index, for the scales that produced one."""
    used, by_scale = [], []
    for j, scale in enumerate(scales):
        values = [r for i, r in ratios if i == j]
        if values:
            used.append(scale)
            by_scale.append(float(max(values)))
    return used, by_scale


class RegularityService:
    @staticmethod
    def check_dpp(
        x0: HistoryPath,
        dyn: DynamicsSpec,
        target: TargetSpec,
        t_probes: Sequence[float],
        controls: Sequence[ControlSignal],
        policy: OraclePolicy,
        mesh_slack: Optional[float] = None,
        threads: Optional[int] = None
    ) -> CertificationReport:
        oracle = _oracle(dyn, target, policy)
        dt = policy.dt or default_dt(x0.delay)
        slack = dt if mesh_slack is None else mesh_slack
        tolerance = 2 * (policy.tol_theta + slack)

        value = oracle(x0)
        if value is None:
            raise RegularityPreconditionError('The oracle finds no hit for x0 within the horizon.')

        def evaluate(task: Tuple[int, ControlSignal, float]) -> CertificationRow:
            index, u, t = task
            sample_id = f'u{index}@t={t:.6g}'

            if t < 0 or t > value + tolerance:
                return CertificationRow.skip(sample_id, inputs_digest(x0), 'probe time beyond T(x0)')

            if t <= 0.5 * dt:
                shifted = x0
            else:
                try:
                    traj = IntegratorService.integrate(x0, u, dyn, t, dt)
                    shifted = IntegratorService.history_at(traj, t)
                except HistoryDomainError as e:
                    return CertificationRow.skip(sample_id, inputs_digest(x0), str(e))

            shifted_value = oracle(shifted)
            if shifted_value is None:
                return CertificationRow.skip(
                    sample_id, inputs_digest(shifted), 'no hit within the horizon for the shifted state'
                )

            return CertificationRow(sample_id, inputs_digest(shifted), value, t + shifted_value)

        tasks = [(i, u, float(t)) for i, u in enumerate(controls) for t in t_probes]
        rows = parallel_map(evaluate, tasks, threads)
        _log_skipped('dpp', rows)

        return CertificationReport(
            check='dpp',
            rows=rows,
            tolerance=tolerance,
            constants={'T(x0)': value, 'tol_theta': policy.tol_theta, 'mesh_slack': slack},
        )

    @staticmethod
    def check_distance_bound(
        samples: Sequence[HistoryPath],
        dyn: DynamicsSpec,
        target: TargetSpec,
        params: SteeringParams,
        policy: OraclePolicy,
        tolerance: Optional[float] = None,
        threads: Optional[int] = None
    ) -> CertificationReport:
        oracle = _oracle(dyn, target, policy)
        lipschitz_class = LipschitzClassTag(params.M_bar)
        if tolerance is None:
            tolerance = policy.tol_theta + (policy.dt or default_dt(params.tau))

        def evaluate(task: Tuple[int, HistoryPath]) -> CertificationRow:
            index, x = task
            sample_id, digest = f'x{index}', inputs_digest(x)
            distance = float(target.distance(x.at_zero))

            if not lipschitz_class.contains(x):
                return CertificationRow.skip(sample_id, digest, f'history not {params.M_bar:.6g}-Lipschitz')
            if distance >= params.delta:
                return CertificationRow.skip(sample_id, digest, f'd_K(x(0)) = {distance:.6g} not below delta')

            value = oracle(x)
            if value is None:
                return CertificationRow.skip(sample_id, digest, 'no hit within the horizon')

            return CertificationRow(sample_id, digest, value, params.C_bound * distance)

        rows = parallel_map(evaluate, list(enumerate(samples)), threads)
        _log_skipped('distance-bound', rows)

        return CertificationReport(
            check='distance-bound',
            rows=rows,
            tolerance=tolerance,
            constants={'C': params.C_bound, 'k': params.k_contraction, 'delta': params.delta},
        )

    @staticmethod
    def estimate_lipschitz(
        pairs: Sequence[Tuple[HistoryPath, HistoryPath]],
        dyn: DynamicsSpec,
        target: TargetSpec,
        params: SteeringParams,
        policy: OraclePolicy,
        tolerance: Optional[float] = None,
        threads: Optional[int] = None
    ) -> CertificationReport:
        oracle = _oracle(dyn, target, policy)
        lipschitz_class = LipschitzClassTag(params.M_bar)
        if tolerance is None:
            tolerance = 2 * policy.tol_theta + (policy.dt or default_dt(params.tau))

        def evaluate(task: Tuple[int, Tuple[HistoryPath, HistoryPath]]) -> Tuple[CertificationRow, Optional[float], float]:
            index, (x, x_other) = task
            sample_id, digest = f'pair{index}', inputs_digest(x, x_other)

            if not (lipschitz_class.contains(x) and lipschitz_class.contains(x_other)):
                return CertificationRow.skip(sample_id, digest, 'pair outside the Lipschitz class'), None, 0.0

            value, value_other = oracle(x), oracle(x_other)
            if value is None or value_other is None:
                return CertificationRow.skip(sample_id, digest, 'no hit within the horizon'), None, 0.0

            gap = sup_norm(difference(x, x_other))
            radius = lipschitz_radius(params, value)
            if gap > radius:
                return CertificationRow.skip(
                    sample_id, digest, f'|x - x~| = {gap:.6g} above the radius {radius:.6g}'
                ), None, 0.0

            modulus = lipschitz_modulus(params, max(value, value_other))
            change = abs(value - value_other)
            ratio = change / gap if gap > 0 else None
            return CertificationRow(sample_id, digest, change, modulus * gap), ratio, modulus

        results = parallel_map(evaluate, list(enumerate(pairs)), threads)
        rows = [row for row, _, _ in results]
        ratios = [ratio for _, ratio, _ in results if ratio is not None]
        moduli = [modulus for row, _, modulus in results if not row.skipped]
        _log_skipped('lipschitz', rows)

        measured = {}
        if ratios:
            measured['max_ratio'] = float(max(ratios))
        if moduli:
            measured['max_modulus'] = float(max(moduli))

        return CertificationReport(
            check='lipschitz',
            rows=rows,
            tolerance=tolerance,
            constants={'C': params.C_bound, 'L': params.L, 'tau': params.tau, 'delta': params.delta},
            measured=measured,
        )

    @staticmethod
    def estimate_semiconcavity(
        x: HistoryPath,
        h_family: Sequence[HistoryPath],
        dyn: DynamicsSpec,
        target: TargetSpec,
        policy: OraclePolicy,
        mu: Optional[float] = None,
        scales: Sequence[float] = DYADIC_SCALES,
        tolerance: Optional[float] = None,
        threads: Optional[int] = None
    ) -> SemiconcavityEstimate:
        if mu is not None:
            check_semiconcavity_delay(mu, dyn.bound_M, dyn.lipschitz_L, x.delay)

        lipschitz_class = LipschitzClassTag(dyn.bound_M)
        if target.contains(x.at_zero):
            raise RegularityPreconditionError('Semiconcavity is certified for x(0) outside the target.')
        if not lipschitz_class.contains(x):
            raise RegularityPreconditionError(f"x is not {dyn.bound_M:.6g}-Lipschitz.")

        oracle = _oracle(dyn, target, policy)
        value = oracle(x)
        if value is None:
            raise RegularityPreconditionError('The oracle finds no hit for x within the horizon.')

        tolerance = 4 * policy.tol_theta if tolerance is None else tolerance

        def evaluate(task: Tuple[int, int, HistoryPath, float]):
            i, j, h, scale = task
            sample_id = f'h{i}@{scale:.6g}'
            plus, minus = combine(x, h, scale), combine(x, h, -scale)
            digest = inputs_digest(plus, minus)
            norm = scale * sup_norm(h)

            if not (lipschitz_class.contains(plus) and lipschitz_class.contains(minus)):
                return CertificationRow.skip(sample_id, digest, 'x +- h outside the Lipschitz class'), None

            if norm == 0.0:
                return CertificationRow(sample_id, digest, 0.0, 0.0), None

            value_plus, value_minus = oracle(plus), oracle(minus)
            if value_plus is None or value_minus is None:
                return CertificationRow.skip(sample_id, digest, 'no hit within the horizon'), None

            second = value_plus + value_minus - 2 * value
            return CertificationRow(sample_id, digest, second, 0.0), (j, second / norm ** 2)

        tasks = [(i, j, h, s) for i, h in enumerate(h_family) for j, s in enumerate(scales)]
        results = parallel_map(evaluate, tasks, threads)
        rows, ratios = _bound_by_largest_scale(tasks, results)
        _log_skipped('semiconcavity', rows)

        used, ratio_by_scale = _scale_summary([r for r in ratios if r is not None], scales)
        h_norm = max((sup_norm(h) for h in h_family), default=0.0)
        floor = _noise_floor(tolerance, [s * h_norm for s in used])
        stable = ratios_are_stable(ratio_by_scale, floor) if ratio_by_scale else True
        modulus = max(max(ratio_by_scale, default=0.0), 0.0)

        constants = {'T(x)': value}
        if mu is not None:
            constants['tau_threshold'] = semiconcavity_delay_threshold(mu, dyn.bound_M, dyn.lipschitz_L)

        report = CertificationReport(
            check='semiconcavity',
            rows=rows,
            tolerance=tolerance,
            constants=constants,
            measured={'modulus': modulus, **{f'ratio@{s:.6g}': r for s, r in zip(used, ratio_by_scale)}},
            stable=stable,
        )
        return SemiconcavityEstimate(
            modulus=modulus,
            h_scales=[s * h_norm for s in used],
            ratio_by_scale=ratio_by_scale,
            stable=stable,
            report=report,
        )

    @staticmethod
    def check_boundary_lemma(
        x: HistoryPath,
        h_family: Sequence[HistoryPath],
        dyn: DynamicsSpec,
        target: TargetSpec,
        policy: OraclePolicy,
        rho: Optional[float] = None,
        params: Optional[SteeringParams] = None,
        scales: Sequence[float] = DYADIC_SCALES,
        tolerance: Optional[float] = None,
        threads: Optional[int] = None
    ) -> CertificationReport:
        z = x.at_zero
        gap = abs(float(target.signed_distance(z)))
        if gap > BOUNDARY_TOLERANCE * max(1.0, float(np.linalg.norm(z))):
            raise RegularityPreconditionError(f"x(0) is {gap:.6g} away from the target boundary.")

        lipschitz_class = LipschitzClassTag(dyn.bound_M)
        if not lipschitz_class.contains(x):
            raise RegularityPreconditionError(f"x is not {dyn.bound_M:.6g}-Lipschitz.")

        if rho is None and params is not None and target.dk_shell_r is not None:
            rho = boundary_radius(params, target.dk_shell_r)

        oracle = _oracle(dyn, target, policy)
        tolerance = 4 * policy.tol_theta if tolerance is None else tolerance

        def evaluate(task: Tuple[int, int, HistoryPath, float]):
            i, j, h, scale = task
            sample_id = f'h{i}@{scale:.6g}'
            once, twice = combine(x, h, scale), combine(x, h, 2 * scale)
            digest = inputs_digest(once, twice)
            norm = scale * sup_norm(h)

            if target.contains(once.at_zero):
                return CertificationRow.skip(sample_id, digest, '(x + h)(0) lies in the target'), None
            if not (lipschitz_class.contains(once) and lipschitz_class.contains(twice)):
                return CertificationRow.skip(sample_id, digest, 'x + h outside the Lipschitz class'), None
            if rho is not None and norm > rho:
                return CertificationRow.skip(sample_id, digest, f'|h| = {norm:.6g} above rho = {rho:.6g}'), None

            value_once, value_twice = oracle(once), oracle(twice)
            if value_once is None or value_twice is None:
                return CertificationRow.skip(sample_id, digest, 'no hit within the horizon'), None

            second = value_twice - 2 * value_once
            return CertificationRow(sample_id, digest, second, 0.0), (j, second / norm ** 2)

        tasks = [(i, j, h, s) for i, h in enumerate(h_family) for j, s in enumerate(scales)]
        results = parallel_map(evaluate, tasks, threads)
        rows, ratios = _bound_by_largest_scale(tasks, results)
        _log_skipped('boundary-lemma', rows)

        used, ratio_by_scale = _scale_summary([r for r in ratios if r is not None], scales)
        h_norm = max((sup_norm(h) for h in h_family), default=0.0)
        floor = _noise_floor(tolerance, [s * h_norm for s in used])
        stable = ratios_are_stable(ratio_by_scale, floor) if ratio_by_scale else True

        constants = {} if rho is None else {'rho': rho}
        return CertificationReport(
            check='boundary-lemma',
            rows=rows,
            tolerance=tolerance,
            constants=constants,
            measured={
                'k_emp': max(max(ratio_by_scale, default=0.0), 0.0),
                **{f'ratio@{s:.6g}': r for s, r in zip(used, ratio_by_scale)},
            },
            stable=stable,
        )


def _noise_floor(tolerance: float, magnitudes: Sequence[float]) -> float:
    positive = [m for m in magnitudes if m > 0]
    if not positive:
        return tolerance
    return tolerance / min(positive) ** 2


def _bound_by_largest_scale(tasks, results) -> Tuple[List[CertificationRow], List[Optional[Tuple[int, float]]]]:
    """
    Give every evaluated second difference its right-hand side
    2 k_h (scale |h|)^2, with k_h the positive part of the ratio of the
    same h at the largest scale that was evaluated.
    """
    reference = {}
    for (i, _, _, _), (_, ratio) in zip(tasks, results):
        if ratio is not None and i not in reference:
            reference[i] = max(ratio[1], 0.0)

    rows = []
    for (i, _, h, scale), (row, _) in zip(tasks, results):
        if not row.skipped:
            bound = 2 * reference.get(i, 0.0) * (scale * sup_norm(h)) ** 2
            row = CertificationRow(row.sample_id, row.inputs_hash, row.lhs, bound)
        rows.append(row)
    return rows, [ratio for _, ratio in results]
