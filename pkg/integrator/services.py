"""
Method-of-steps solver for y'(t) = f(y(t - tau), u(t)).

The step dt divides tau, so the delayed argument of every step is a
stored grid value. Within one delay window all delayed arguments are
already known, which lets a whole window advance with one vectorized
field evaluation and a cumulative sum (explicit trapezoid rule).
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from django.conf import settings
from scipy.optimize import bisect

from funcspace.paths import HistoryPath
from integrator.controls import ControlSignal
from integrator.exceptions import (
    HistoryDomainError,
    IntegratorConfigurationError,
    NumericalBlowupError,
)
from problem.dynamics import DynamicsSpec
from problem.targets import TargetSpec

GRID_TOLERANCE = 1e-6
HIT_TOLERANCE_FACTOR = 1e-8


def default_dt(delay: float) -> float:
    return delay / getattr(settings, 'MINTAU_DEFAULT_DT_DIVISOR', 256)


def delay_steps(delay: float, dt: float) -> int:
    ratio = delay / dt
    steps = int(round(ratio))
    if steps < 1 or abs(ratio - steps) > 1e-9 * ratio:
        raise IntegratorConfigurationError(
            f"tau / dt must be a positive integer, got {delay:.12g} / {dt:.12g} = {ratio:.12g}."
        )
    return steps


def grid_steps(t: float, dt: float) -> int:
    ratio = t / dt
    steps = int(round(ratio))
    if abs(ratio - steps) > GRID_TOLERANCE:
        raise HistoryDomainError(f"t = {t:.12g} is not on the dt = {dt:.12g} grid.")
    return steps


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Dense solution record. values[i] = y(-tau + i * dt); the history
    occupies the first delay_steps + 1 rows.
    """
    base_history: HistoryPath
    dt: float
    values: np.ndarray
    control: ControlSignal
    dyn: DynamicsSpec

    @property
    def delay(self) -> float:
        return self.base_history.delay

    @property
    def delay_steps(self) -> int:
        return delay_steps(self.delay, self.dt)

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1 - self.delay_steps

    @property
    def t_end(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return -self.delay + self.dt * np.arange(len(self.values))

    @property
    def forward_times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    @property
    def forward_values(self) -> np.ndarray:
        return self.values[self.delay_steps:]

    def state_at(self, t: Union[float, np.ndarray]) -> np.ndarray:
        t_arr = np.asarray(t, dtype=float)
        columns = [np.interp(t_arr, self.times, self.values[:, i]) for i in range(self.values.shape[1])]
        return np.stack(columns, axis=-1)

    def to_csv(self, path: Union[str, Path], target: TargetSpec) -> None:
        n = self.values.shape[1]
        D = self.delay_steps
        controls = np.concatenate([
            -np.ones(D, dtype=int),
            self.control.indices_on_grid(0, self.n_steps + 1, self.dt),
        ])
        table = np.column_stack([
            self.times, self.values, target.distance(self.values), controls,
        ])
        header = ','.join(['t'] + [f'y_{i + 1}' for i in range(n)] + ['d_K', 'control_index'])
        np.savetxt(path, table, delimiter=',', header=header, comments='', fmt='%.12g')


class IntegratorService:
    @staticmethod
    def advance(
        values: np.ndarray,
        k_start: int,
        step_controls: np.ndarray,
        dyn: DynamicsSpec,
        dt: float,
        D: int
    ) -> None:
        """
        Fill values[D + k_start + 1 : D + k_stop + 1] in place, one delay
        window at a time. step_controls[j] is the control index on step
        k_start + j.
        """
        k_stop = k_start + len(step_controls)
        for k0 in range(k_start, k_stop, D):
            k1 = min(k0 + D, k_stop)
            ks = np.arange(k0, k1)
            u = dyn.controls[step_controls[ks - k_start]]
            slopes = dyn.evaluate(values[ks], u) + dyn.evaluate(values[ks + 1], u)
            values[D + k0 + 1:D + k1 + 1] = values[D + k0] + np.cumsum(0.5 * dt * slopes, axis=0)

            if not np.all(np.isfinite(values[D + k0 + 1:D + k1 + 1])):
                raise NumericalBlowupError(k1 * dt)

    @staticmethod
    def initial_values(x0: HistoryPath, dt: float, n_steps: int) -> np.ndarray:
        D = delay_steps(x0.delay, dt)
        values = np.empty((D + n_steps + 1, x0.dim))
        values[:D + 1] = x0.evaluate(-x0.delay + dt * np.arange(D + 1))
        values[D] = x0.at_zero
        return values

    @staticmethod
    def integrate(
        x0: HistoryPath,
        u: ControlSignal,
        dyn: DynamicsSpec,
        t_end: float,
        dt: Optional[float] = None
    ) -> Trajectory:
        dt = dt or default_dt(x0.delay)
        if t_end <= 0:
            raise IntegratorConfigurationError('t_end must be positive.')

        if x0.dim != dyn.dim_state:
            raise IntegratorConfigurationError(
                f"History lives in R^{x0.dim} but the dynamics in R^{dyn.dim_state}."
            )

        if u.max_index >= dyn.n_controls:
            raise IntegratorConfigurationError(
                f"Control index {u.max_index} out of range for {dyn.n_controls} controls."
            )

        D = delay_steps(x0.delay, dt)
        u.check_grid(dt)
        n_steps = int(np.ceil(t_end / dt - GRID_TOLERANCE))

        values = IntegratorService.initial_values(x0, dt, n_steps)
        IntegratorService.advance(values, 0, u.indices_on_grid(0, n_steps, dt), dyn, dt, D)
        values.setflags(write=False)
        return Trajectory(x0, dt, values, u, dyn)

    @staticmethod
    def extend_values(
        values: np.ndarray,
        n_steps_done: int,
        control_index: int,
        n_new: int,
        dyn: DynamicsSpec,
        dt: float,
        D: int
    ) -> np.ndarray:
        """Copy of values continued by n_new steps of a constant control."""
        extended = np.empty((len(values) + n_new, values.shape[1]))
        extended[:len(values)] = values
        IntegratorService.advance(
            extended, n_steps_done, np.full(n_new, control_index, dtype=int), dyn, dt, D
        )
        return extended

    @staticmethod
    def history_at(traj: Trajectory, t: float) -> HistoryPath:
        """The segment s -> y(t + s), s in [-tau, 0], on the base history grid."""
        slack = GRID_TOLERANCE * traj.dt
        if t < -slack or t > traj.t_end + slack:
            raise HistoryDomainError(f"t = {t:.12g} outside [0, {traj.t_end:.12g}].")

        k = grid_steps(t, traj.dt)
        grid = traj.base_history.grid
        samples = traj.state_at(k * traj.dt + grid)
        return HistoryPath(traj.delay, samples)

    @staticmethod
    def first_crossing(
        times: np.ndarray,
        states: np.ndarray,
        target: TargetSpec,
        tol: float
    ) -> Optional[float]:
        """
        First time the piecewise-linear path through (times, states)
        enters the target, refined by bisection on the signed distance.
        """
        inside = target.signed_distance(states) <= 0
        if not np.any(inside):
            return None

        first = int(np.argmax(inside))
        if first == 0:
            return float(times[0])

        t_a, t_b = times[first - 1], times[first]
        y_a, y_b = states[first - 1], states[first]

        def gap(t: float) -> float:
            weight = (t - t_a) / (t_b - t_a)
            return float(target.signed_distance(y_a + weight * (y_b - y_a)))

        return float(bisect(gap, t_a, t_b, xtol=tol))

    @staticmethod
    def hitting_time(traj: Trajectory, target: TargetSpec, tol: Optional[float] = None) -> Optional[float]:
        tol = tol or HIT_TOLERANCE_FACTOR * traj.t_end
        return IntegratorService.first_crossing(traj.forward_times, traj.forward_values, target, tol)
