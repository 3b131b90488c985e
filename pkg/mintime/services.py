"""
Reference values of the minimum time T(x).

The search oracle is a depth-first branch-and-bound over
piecewise-constant control words, solved with pybnb. It returns an
upper bound on T that converges as the switching mesh and the control
grid refine. For state-independent dynamics the closed form over
constant controls is available as well.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pybnb
from django.conf import settings
from django.core.exceptions import ValidationError

from funcspace.paths import HistoryPath
from integrator.controls import ControlSignal
from integrator.exceptions import IntegratorConfigurationError
from integrator.services import IntegratorService, default_dt, delay_steps
from mintime.exceptions import SearchBudgetError, UnsupportedDynamicsError
from problem.dynamics import DynamicsSpec
from problem.services import HypothesisService
from problem.targets import TargetSpec
from steering.constants import SteeringParams
from steering.exceptions import CertificationFailureError, SteeringPreconditionError
from steering.services import SteeringService

logger = logging.getLogger(__name__)

METHODS = ('auto', 'analytic', 'search')
DEFAULT_TOL_THETA = 1e-6


@dataclass(frozen=True)
class MinTimeResult:
    value: float
    control: ControlSignal
    method: str
    mesh: float
    nodes_explored: int = 0

    def replay(
        self,
        x0: HistoryPath,
        dyn: DynamicsSpec,
        target: TargetSpec,
        dt: Optional[float] = None
    ) -> Optional[float]:
        """Hitting time of the stored control, integrated from scratch."""
        if target.contains(x0.at_zero):
            return 0.0

        dt = dt or default_dt(x0.delay)
        t_end = (math.floor(self.value / dt) + 2) * dt
        traj = IntegratorService.integrate(x0, self.control, dyn, t_end, dt)
        return IntegratorService.hitting_time(traj, target)

    def as_row(self, identifier: str) -> List[str]:
        return [identifier, f'{self.value:.12g}', self.method, f'{self.mesh:.12g}', str(self.nodes_explored)]


@dataclass(frozen=True)
class OraclePolicy:
    """Oracle configuration shared by every evaluation of one certification."""
    switch_mesh: float
    horizon: float
    method: str = 'auto'
    dt: Optional[float] = None
    depth_limit: Optional[int] = None
    tol_theta: float = DEFAULT_TOL_THETA
    prune: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"Unknown oracle method '{self.method}'.")

        if self.switch_mesh <= 0 or self.horizon < self.switch_mesh:
            raise ValidationError('Need switch_mesh > 0 and horizon >= switch_mesh.')

        if self.tol_theta <= 0:
            raise ValidationError('tol_theta must be positive.')

    def resolve(self, dyn: DynamicsSpec) -> str:
        if self.method != 'auto':
            return self.method
        return 'analytic' if dyn.state_independent else 'search'


def ray_ball_hit(z: np.ndarray, velocities: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """
    First t >= 0 with |z + t v - c| <= r for every velocity (rows) and
    ball (columns); inf where the ray misses.
    """
    offsets = z - centers
    a = np.sum(velocities ** 2, axis=1)[:, None]
    b = 2 * velocities @ offsets.T
    c = np.sum(offsets ** 2, axis=1)[None, :] - radii[None, :] ** 2
    disc = b ** 2 - 4 * a * c

    with np.errstate(divide='ignore', invalid='ignore'):
        root = (-b - np.sqrt(np.maximum(disc, 0.0))) / (2 * a)
    hit = np.where((a > 0) & (disc >= 0) & (root >= 0), root, np.inf)
    return np.where(c <= 0, 0.0, hit)


class ControlWordProblem(pybnb.Problem):
    """
    Minimum hitting time over control words of n_cells letters.

    A node is a word prefix with the trajectory it produces. Its bound is
    the elapsed time plus d_K / M, its objective the hit time once the
    last cell enters the target. Children follow the Petrov ordering of
    the controls, so ties go to the most inward control.
    """

    def __init__(
        self,
        x0: HistoryPath,
        dyn: DynamicsSpec,
        target: TargetSpec,
        dt: float,
        cell_steps: int,
        n_cells: int,
        prune: bool,
        tol: float
    ):
        self.dyn = dyn
        self.target = target
        self.dt = dt
        self.D = delay_steps(x0.delay, dt)
        self.cell_steps = cell_steps
        self.n_cells = n_cells
        self.prune = prune
        self.tol = tol

        self._word: Tuple[int, ...] = ()
        self._values = IntegratorService.initial_values(x0, dt, 0)
        self._hit: Optional[float] = None

    def sense(self):
        return pybnb.minimize

    def objective(self):
        return self.infeasible_objective() if self._hit is None else self._hit

    def bound(self):
        if self._hit is not None:
            return self._hit
        if not self.prune:
            return self.unbounded_objective()

        elapsed = len(self._word) * self.cell_steps * self.dt
        return elapsed + float(self.target.distance(self._values[-1])) / self.dyn.bound_M

    def save_state(self, node):
        node.state = (self._word, self._values, self._hit)

    def load_state(self, node):
        self._word, self._values, self._hit = node.state

    def child_order(self, y: np.ndarray) -> np.ndarray:
        if self.target.signed_distance(y) <= 0:
            return np.arange(self.dyn.n_controls)
        values = HypothesisService.petrov_inner_products(self.dyn, self.target, y[None, :])[0]
        return np.argsort(values, kind='stable')

    def branch(self):
        depth = len(self._word)
        if self._hit is not None or depth == self.n_cells:
            return

        start = depth * self.cell_steps
        times = self.dt * np.arange(start, start + self.cell_steps + 1)
        for k in self.child_order(self._values[-1]):
            k = int(k)
            extended = IntegratorService.extend_values(
                self._values, start, k, self.cell_steps, self.dyn, self.dt, self.D
            )
            hit = IntegratorService.first_crossing(times, extended[self.D + start:], self.target, self.tol)

            child = pybnb.Node()
            child.state = (self._word + (k,), extended, hit)
            yield child


class MinTimeService:
    @staticmethod
    def cell_steps(switch_mesh: float, dt: float) -> int:
        ratio = switch_mesh / dt
        steps = int(round(ratio))
        if steps < 1 or abs(ratio - steps) > 1e-9 * ratio:
            raise IntegratorConfigurationError(
                f"switch_mesh = {switch_mesh:.12g} is not a multiple of dt = {dt:.12g}."
            )
        return steps

    @staticmethod
    def min_time_search(
        x0: HistoryPath,
        dyn: DynamicsSpec,
        target: TargetSpec,
        switch_mesh: float,
        horizon: float,
        dt: Optional[float] = None,
        depth_limit: Optional[int] = None,
        tol_theta: float = DEFAULT_TOL_THETA,
        prune: bool = True
    ) -> Optional[MinTimeResult]:
        if switch_mesh <= 0 or horizon < switch_mesh:
            raise ValidationError('Need switch_mesh > 0 and horizon >= switch_mesh.')

        dt = dt or default_dt(x0.delay)
        depth_limit = depth_limit or getattr(settings, 'MINTAU_DEPTH_LIMIT', 16)
        cell_steps = MinTimeService.cell_steps(switch_mesh, dt)
        n_cells = int(math.ceil(horizon / switch_mesh - 1e-9))
        if n_cells > depth_limit:
            raise SearchBudgetError(n_cells, depth_limit)

        if target.contains(x0.at_zero):
            return MinTimeResult(0.0, ControlSignal.constant(0), 'search', switch_mesh, 0)

        problem = ControlWordProblem(x0, dyn, target, dt, cell_steps, n_cells, prune, 1e-3 * tol_theta)
        results = pybnb.solve(
            problem,
            comm=None,
            queue_strategy='depth',
            absolute_gap=0,
            relative_gap=None,
            log=None,
            disable_signal_handlers=True,
        )
        logger.debug(
            "Search explored %d nodes (mesh %.6g, %d cells, prune=%s), incumbent %.12g",
            results.nodes, switch_mesh, n_cells, prune, results.objective,
        )

        if results.best_node is None or not math.isfinite(results.objective):
            return None

        word, _, hit = results.best_node.state
        return MinTimeResult(
            value=hit,
            control=ControlSignal.from_word(word, switch_mesh),
            method='search',
            mesh=switch_mesh,
            nodes_explored=results.nodes,
        )

    @staticmethod
    def min_time_analytic(
        x0: HistoryPath,
        dyn: DynamicsSpec,
        target: TargetSpec
    ) -> Optional[MinTimeResult]:
        """
        Best constant control for state-independent dynamics: the state
        moves on the ray x(0) + t f(u), so T is the shortest ray-ball hit.
        The history tail and the delay do not enter.
        """
        if not dyn.state_independent:
            raise UnsupportedDynamicsError(
                f"The analytic oracle needs state-independent dynamics, got '{dyn.name}'."
            )

        z = x0.at_zero
        if target.contains(z):
            return MinTimeResult(0.0, ControlSignal.constant(0), 'analytic', 0.0, 0)

        velocities = dyn.evaluate_all_controls(z)
        hits = ray_ball_hit(z, velocities, target.centers, target.radii).min(axis=1)
        best = int(np.argmin(hits))
        if not np.isfinite(hits[best]):
            logger.debug("No constant control reaches the target from %s", z.tolist())
            return None

        return MinTimeResult(float(hits[best]), ControlSignal.constant(best), 'analytic', 0.0, 0)

    @staticmethod
    def value(
        x0: HistoryPath,
        dyn: DynamicsSpec,
        target: TargetSpec,
        policy: OraclePolicy,
        steering_params: Optional[SteeringParams] = None
    ) -> Optional[MinTimeResult]:
        method = policy.resolve(dyn)
        if method == 'analytic':
            result = MinTimeService.min_time_analytic(x0, dyn, target)
        else:
            result = MinTimeService.min_time_search(
                x0, dyn, target, policy.switch_mesh, policy.horizon,
                dt=policy.dt, depth_limit=policy.depth_limit,
                tol_theta=policy.tol_theta, prune=policy.prune,
            )

        if steering_params is None or target.contains(x0.at_zero):
            return result

        dt = policy.dt or default_dt(x0.delay)
        try:
            control, total_time, log = SteeringService.steer(x0, dyn, target, steering_params, dt)
        except SteeringPreconditionError as e:
            logger.debug("Steering cross-check skipped: %s", e)
            return result

        if result is None:
            if log.steps and log.steps[-1].post_distance == 0.0:
                return MinTimeResult(total_time, control, 'steering_bound', dt, 0)
            return None

        tol = policy.tol_theta + dt
        if result.value > total_time + tol:
            raise CertificationFailureError(
                f"Oracle value {result.value:.12g} exceeds the steering time {total_time:.12g}.", log
            )
        return result

    @staticmethod
    def results_to_csv(path: Union[str, Path], rows: Sequence[Tuple[str, Optional[MinTimeResult]]]) -> None:
        table = [
            result.as_row(identifier) if result is not None else [identifier, 'inf', 'none', '', '0']
            for identifier, result in rows
        ]
        np.savetxt(
            path, np.array(table, dtype=object).reshape(-1, 5), fmt='%s', delimiter=',',
            header='x0,T,method,mesh,nodes_explored', comments='',
        )
