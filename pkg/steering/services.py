"""
Inductive Petrov steering: from x_j, apply the most inward control
u_{x_j} (chosen at x_j(0)) for t_j = coefficient * d_K(x_j(0)) and
restart from the history segment x_{j+1} = y_{t_j}. The distances
contract geometrically, so the accumulated time is bounded by
C * d_K(x_0(0)).
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from django.conf import settings

from funcspace.paths import HistoryPath, LipschitzClassTag, lip_constant
from integrator.controls import ControlSignal
from integrator.services import IntegratorService, default_dt
from problem.dynamics import DynamicsSpec
from problem.exceptions import PetrovViolationError
from problem.services import HypothesisService
from problem.targets import TargetSpec
from steering.constants import SteeringParams
from steering.exceptions import (
    CertificationFailureError,
    MaxItersExhaustedError,
    SteeringPreconditionError,
)

logger = logging.getLogger(__name__)

PETROV_TOLERANCE = 1e-9
CONSECUTIVE_FAILURES = 3


@dataclass(frozen=True)
class SteeringStep:
    j: int
    distance: float
    step_time: float
    control_index: int
    post_distance: float
    ratio: float
    cumulative_time: float
    lip_constant: float


@dataclass
class SteeringLog:
    steps: List[SteeringStep] = field(default_factory=list)

    @property
    def total_time(self) -> float:
        return float(sum(step.step_time for step in self.steps))

    @property
    def ratios(self) -> List[float]:
        return [step.ratio for step in self.steps]

    def to_csv(self, path: Union[str, Path]) -> None:
        header = 'j,d_j,t_j,control_index,ratio,cumulative_time'
        table = np.array(
            [[s.j, s.distance, s.step_time, s.control_index, s.ratio, s.cumulative_time] for s in self.steps],
            dtype=float,
        ).reshape(-1, 6)
        np.savetxt(path, table, delimiter=',', header=header, comments='', fmt='%.12g')


class SteeringService:
    @staticmethod
    def select_petrov_control(
        dyn: DynamicsSpec,
        target: TargetSpec,
        z: np.ndarray,
        mu: float
    ) -> int:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if target.distance(z) <= 0:
            raise SteeringPreconditionError(f"z = {z.tolist()} already lies in the target.")

        values = HypothesisService.petrov_inner_products(dyn, target, z[None, :])[0]
        index = int(np.argmin(values))
        if values[index] > -mu + PETROV_TOLERANCE:
            raise PetrovViolationError(z, float(values[index]), mu)
        return index

    @staticmethod
    def steer(
        x0: HistoryPath,
        dyn: DynamicsSpec,
        target: TargetSpec,
        params: SteeringParams,
        dt: Optional[float] = None
    ) -> Tuple[ControlSignal, float, SteeringLog]:
        dt = dt or default_dt(x0.delay)
        if not LipschitzClassTag(params.M_bar).contains(x0):
            raise SteeringPreconditionError(
                f"Initial history is {lip_constant(x0):.12g}-Lipschitz, above M_bar = {params.M_bar:.12g}."
            )

        d0 = float(target.distance(x0.at_zero))
        if d0 >= params.delta:
            raise SteeringPreconditionError(
                f"d_K(x(0)) = {d0:.12g} is not below delta = {params.delta:.12g}."
            )

        factor = getattr(settings, 'MINTAU_EPS_TARGET_FACTOR', 1e-4)
        eps_target = params.eps_target if params.eps_target is not None else factor * d0
        if d0 <= eps_target:
            raise SteeringPreconditionError(
                f"d_K(x(0)) = {d0:.12g} is already within eps_target = {eps_target:.12g}."
            )

        log = SteeringLog()
        control = ControlSignal.constant(0)
        elapsed_steps = 0
        x_j = x0
        distance = d0
        cumulative = 0.0
        failures = 0
        overshoot = 0.0

        for j in range(params.max_iters):
            u_j = SteeringService.select_petrov_control(dyn, target, x_j.at_zero, params.mu)
            ideal = params.step_coefficient * distance
            n_steps = max(1, int(math.floor(ideal / dt + 1e-9)))
            step_time = n_steps * dt

            traj = IntegratorService.integrate(x_j, ControlSignal.constant(u_j), dyn, step_time, dt)
            hit = IntegratorService.hitting_time(traj, target)
            control = control.concatenate(ControlSignal.constant(u_j), elapsed_steps * dt)
            elapsed_steps += n_steps

            x_j = IntegratorService.history_at(traj, step_time)
            if hit is not None:
                logger.debug("steer j=%d entered the target at t=%.12g", j, hit)
                post = 0.0
                step_time = hit
            else:
                post = float(target.distance(x_j.at_zero))

            ratio = post / distance
            cumulative += step_time
            overshoot += max(step_time - ideal, 0.0)
            log.steps.append(SteeringStep(
                j=j,
                distance=distance,
                step_time=step_time,
                control_index=u_j,
                post_distance=post,
                ratio=ratio,
                cumulative_time=cumulative,
                lip_constant=lip_constant(x_j),
            ))
            logger.debug("steer j=%d d=%.6g t=%.6g u=%d ratio=%.6g", j, distance, step_time, u_j, ratio)

            if ratio > params.k_contraction + params.tol_ratio:
                failures += 1
                logger.warning(
                    "Contraction ratio %.6g above k + tol = %.6g at iteration %d",
                    ratio, params.k_contraction + params.tol_ratio, j,
                )
                if failures >= CONSECUTIVE_FAILURES:
                    raise CertificationFailureError(
                        f"Contraction ratio above k + tol_ratio for {failures} consecutive iterations.", log
                    )
            else:
                failures = 0

            distance = post
            if distance <= eps_target:
                break
        else:
            raise MaxItersExhaustedError(params.max_iters, log)

        total_time = log.total_time
        budget = params.C_bound * d0
        # only forced one-cell steps may run past the ideal step length
        tol_steer = 0.01 * budget + overshoot
        if total_time > budget + tol_steer:
            raise CertificationFailureError(
                f"Steering time {total_time:.12g} exceeds C * d_K(x(0)) = {budget:.12g}.", log
            )

        logger.info(
            "Steering reached distance %.3g in %d iterations, total time %.12g (bound %.12g)",
            distance, len(log.steps), total_time, budget,
        )
        return control, total_time, log
