import logging
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from experiments.config import ProblemConfig, load_config
from experiments.exceptions import ConfigurationError
from funcspace.exceptions import MintauError, ShapeError
from funcspace.paths import HistoryPath
from integrator.controls import ControlSignal
from integrator.exceptions import IntegratorConfigurationError
from integrator.services import IntegratorService
from mintime.services import MinTimeService
from problem.exceptions import PetrovViolationError
from problem.services import HypothesisService, PetrovCertificate
from regularity.reports import CertificationReport
from regularity.services import RegularityService
from steering.constants import SteeringParams, derive_constants
from steering.exceptions import (
    CertificationFailureError,
    DelayTooLargeError,
    MaxItersExhaustedError,
    SteeringPreconditionError,
)
from steering.services import SteeringService

logger = logging.getLogger(__name__)

COMMANDS = ('validate', 'simulate', 'steer', 'mintime', 'certify', 'report')
CHECKS = ('dpp', 'distance-bound', 'lipschitz', 'semiconcavity', 'boundary-lemma')

EXIT_OK = 0
EXIT_CERTIFICATION_FAILURE = 1
EXIT_CONFIGURATION_ERROR = 2

Outcome = Tuple[bool, str, dict]


class ExperimentService:
    @staticmethod
    def output_dir(output_dir: Optional[Union[str, Path]] = None) -> Path:
        path = Path(output_dir or getattr(settings, 'MINTAU_OUTPUT_DIR', 'output'))
        path.mkdir(parents=True, exist_ok=True)
        return path

    @staticmethod
    def constants(config: ProblemConfig) -> Tuple[PetrovCertificate, SteeringParams]:
        """Petrov certificate on the configured shell and the steering constants it yields."""
        certificate = HypothesisService.estimate_petrov(
            config.dynamics, config.target, config.petrov['sigma'],
            config.petrov['shell_grid'], config.petrov.get('radial_layers'),
        )
        try:
            params = derive_constants(
                mu=certificate.mu,
                sigma=certificate.sigma,
                M=config.dynamics.bound_M,
                M_bar=config.M_bar,
                L=config.dynamics.lipschitz_L,
                tau=config.tau,
                eps_target=config.tolerances.get('eps_target'),
                tol_ratio=config.tolerances.get('tol_ratio'),
            )
        except DelayTooLargeError as e:
            raise ConfigurationError(f"problem.tau: {e}")
        return certificate, params

    @staticmethod
    def validate(config: ProblemConfig, output_dir: Path, seed: int = 0) -> Outcome:
        dyn, target = config.dynamics, config.target
        validation = config.validation
        reports = HypothesisService.validate_all(
            dyn, validation['domain'], validation['n_samples'], validation['h_scales'], seed
        )

        lines = [str(report) for report in reports]
        try:
            certificate, params = ExperimentService.constants(config)
        except PetrovViolationError as e:
            lines.append(f"[FAIL] H4: {e}")
            ExperimentService._write_text(output_dir / 'validate.txt', lines, seed)
            return False, '\n'.join(lines), {'reports': reports, 'witness': e.point.tolist()}

        lines.append(f"[PASS] H4: mu={certificate.mu:.12g} on {certificate.shell_samples} shell samples")
        if validation.get('shell_r'):
            calibrated = HypothesisService.calibrate_target(
                target, validation['shell_r'], validation['n_samples'], validation['h_scales'], seed
            )
            lines.append(
                f"d_K semiconcavity c={calibrated.dk_semiconcavity_c:.12g} on shell r={calibrated.dk_shell_r:.12g}"
            )

        lines.extend(f"{name}={value:.12g}" for name, value in params.as_dict().items())
        ExperimentService._write_text(output_dir / 'validate.txt', lines, seed)

        passed = all(report.passed for report in reports)
        return passed, '\n'.join(lines), {'reports': reports, 'certificate': certificate, 'params': params}

    @staticmethod
    def simulate(config: ProblemConfig, output_dir: Path, history: str, control: str) -> Outcome:
        x0 = config.history(history)
        try:
            u = ControlSignal.parse(control)
        except ValidationError as e:
            raise ConfigurationError(f"--control: {'; '.join(e.messages)}")

        try:
            traj = IntegratorService.integrate(x0, u, config.dynamics, config.grids['horizon'], config.dt)
        except IntegratorConfigurationError as e:
            raise ConfigurationError(f"--control: {e}")
        path = output_dir / f'trajectory_{history}.csv'
        traj.to_csv(path, config.target)

        hit = IntegratorService.hitting_time(traj, config.target)
        hit_text = 'no hit within the horizon' if hit is None else f"hitting time {hit:.12g}"
        return True, f"Wrote {path} ({traj.n_steps} steps, {hit_text})", {'trajectory': traj, 'hit': hit}

    @staticmethod
    def steer(config: ProblemConfig, output_dir: Path, history: str) -> Outcome:
        x0 = config.history(history)
        _, params = ExperimentService.constants(config)
        path = output_dir / f'steering_{history}.csv'

        try:
            control, total_time, log = SteeringService.steer(x0, config.dynamics, config.target, params, config.dt)
        except SteeringPreconditionError as e:
            raise ConfigurationError(f"experiments.histories.{history}: {e}")
        except (CertificationFailureError, MaxItersExhaustedError) as e:
            if e.log is not None:
                e.log.to_csv(path)
            return False, f"FAIL steering: {e}", {'log': e.log}

        log.to_csv(path)
        bound = params.C_bound * float(config.target.distance(x0.at_zero))
        message = f"PASS steering: total time {total_time:.12g} <= C d_K = {bound:.12g} in {len(log.steps)} steps"
        return True, message, {'control': control, 'total_time': total_time, 'log': log, 'params': params}

    @staticmethod
    def mintime(config: ProblemConfig, output_dir: Path, history: str) -> Outcome:
        x0 = config.history(history)
        _, params = ExperimentService.constants(config)

        try:
            result = MinTimeService.value(x0, config.dynamics, config.target, config.policy(), params)
        except CertificationFailureError as e:
            return False, f"FAIL mintime: {e}", {}

        path = output_dir / f'mintime_{history}.csv'
        MinTimeService.results_to_csv(path, [(history, result)])
        if result is None:
            return False, f"No control reaches the target from '{history}' within the horizon.", {'result': None}

        message = f"T({history}) = {result.value:.12g} by {result.method} ({result.nodes_explored} nodes)"
        return True, message, {'result': result}

    @staticmethod
    def certify(config: ProblemConfig, output_dir: Path, check: str, seed: int = 0) -> Outcome:
        if check not in CHECKS:
            raise ConfigurationError(f"Unknown check '{check}' (choose from {', '.join(CHECKS)}).")

        stem = check.replace('-', '_')
        block = config.experiment(stem)
        family = None
        if check in ('semiconcavity', 'boundary-lemma'):
            family = config.family(config.experiment_field(stem, 'family'))

        try:
            report = ExperimentService._certification(config, check, block, family, seed)
        except ShapeError as e:
            raise ConfigurationError(f"experiments.{stem}: {e}")

        report = replace(report, seed=seed)
        (output_dir / f'certify_{stem}.txt').write_text(report.to_text() + '\n', encoding='utf-8')
        report.to_csv(output_dir / f'certify_{stem}.csv')
        return report.passed, report.to_text(), {'report': report}

    @staticmethod
    def _certification(
        config: ProblemConfig,
        check: str,
        block: dict,
        family: Optional[List[HistoryPath]],
        seed: int
    ) -> CertificationReport:
        dyn, target, policy = config.dynamics, config.target, config.policy()
        stem = check.replace('-', '_')

        if check == 'dpp':
            report = RegularityService.check_dpp(
                config.history(config.experiment_field(stem, 'history')), dyn, target,
                [float(t) for t in block.get('t_probes', [0.0])],
                config.controls(block.get('controls', ['0'])),
                policy,
                mesh_slack=_mesh_slack(config),
            )
        elif check == 'distance-bound':
            _, params = ExperimentService.constants(config)
            report = RegularityService.check_distance_bound(
                [config.history(name) for name in block.get('histories', [])], dyn, target, params, policy,
            )
        elif check == 'lipschitz':
            _, params = ExperimentService.constants(config)
            pairs = [(config.history(a), config.history(b)) for a, b in block.get('pairs', [])]
            report = RegularityService.estimate_lipschitz(pairs, dyn, target, params, policy)
        elif check == 'semiconcavity':
            certificate, _ = ExperimentService.constants(config)
            try:
                estimate = RegularityService.estimate_semiconcavity(
                    config.history(config.experiment_field(stem, 'history')), family, dyn, target, policy,
                    mu=certificate.mu,
                )
            except DelayTooLargeError as e:
                raise ConfigurationError(f"problem.tau: {e}")
            report = estimate.report
        else:
            _, params = ExperimentService.constants(config)
            calibrated = target
            shell_r = config.validation.get('shell_r')
            if shell_r:
                calibrated = HypothesisService.calibrate_target(
                    target, shell_r, config.validation['n_samples'], config.validation['h_scales'], seed
                )
            report = RegularityService.check_boundary_lemma(
                config.history(config.experiment_field(stem, 'history')), family, dyn, calibrated, policy,
                rho=block.get('rho'), params=params,
            )
        return report

    @staticmethod
    def report(config: ProblemConfig, output_dir: Path, seed: int = 0) -> Outcome:
        rows: List[List[str]] = []
        passed = True

        def record(item: str, outcome: Outcome) -> None:
            nonlocal passed
            ok, message, _ = outcome
            passed = passed and ok
            rows.append([item, 'pass' if ok else 'fail', message.splitlines()[0] if message else ''])

        record('validate', ExperimentService.validate(config, output_dir, seed))
        for name in config.histories:
            record(f'mintime:{name}', ExperimentService.mintime(config, output_dir, name))
            try:
                record(f'steer:{name}', ExperimentService.steer(config, output_dir, name))
            except ConfigurationError as e:
                rows.append([f'steer:{name}', 'skipped', str(e)])

        for check in CHECKS:
            if check.replace('-', '_') in config.experiments:
                record(f'certify:{check}', ExperimentService.certify(config, output_dir, check, seed))

        table = np.array(
            [[item, verdict, detail.replace(',', ';')] for item, verdict, detail in rows], dtype=object
        ).reshape(-1, 3)
        np.savetxt(
            output_dir / 'summary.csv', table, fmt='%s', delimiter=',',
            header=f"# config={config.name} seed={seed}\nitem,verdict,detail", comments='',
        )
        summary = '\n'.join(f"{item:<28} {verdict:<8} {detail}" for item, verdict, detail in rows)
        return passed, summary, {'rows': rows}

    @staticmethod
    def run(
        command: str,
        config_path: Union[str, Path],
        output_dir: Optional[Union[str, Path]] = None,
        **options
    ) -> Tuple[int, str, dict]:
        """Run one command; returns (exit status, message, payload)."""
        if command not in COMMANDS:
            return EXIT_CONFIGURATION_ERROR, f"Unknown command '{command}'.", {}

        seed = options.pop('seed', None) or 0
        try:
            config = load_config(config_path)
            directory = ExperimentService.output_dir(output_dir)
            if command == 'validate':
                outcome = ExperimentService.validate(config, directory, seed)
            elif command == 'simulate':
                outcome = ExperimentService.simulate(config, directory, options['history'], options['control'])
            elif command == 'steer':
                outcome = ExperimentService.steer(config, directory, options['history'])
            elif command == 'mintime':
                outcome = ExperimentService.mintime(config, directory, options['history'])
            elif command == 'certify':
                outcome = ExperimentService.certify(config, directory, options['check'], seed)
            else:
                outcome = ExperimentService.report(config, directory, seed)
        except (ConfigurationError, ShapeError) as e:
            return EXIT_CONFIGURATION_ERROR, str(e), {}
        except ValidationError as e:
            return EXIT_CONFIGURATION_ERROR, "; ".join(e.messages), {}
        except PetrovViolationError as e:
            return EXIT_CERTIFICATION_FAILURE, f"Petrov condition violated: {e}", {'witness': e.point.tolist()}
        except MintauError as e:
            return EXIT_CERTIFICATION_FAILURE, f"{type(e).__name__}: {e}", {}

        success, message, payload = outcome
        logger.info("%s on %s finished: %s", command, config.name, 'pass' if success else 'fail')
        return (EXIT_OK if success else EXIT_CERTIFICATION_FAILURE), message, payload

    @staticmethod
    def _write_text(path: Path, lines: List[str], seed: int) -> None:
        path.write_text('\n'.join([f"# seed={seed}"] + lines) + '\n', encoding='utf-8')


def _mesh_slack(config: ProblemConfig) -> Optional[float]:
    """Mesh slack implied by a configured tol_dpp = 2 (tol_theta + slack)."""
    tol_dpp = config.tolerances.get('tol_dpp')
    if tol_dpp is None:
        return None
    return max(tol_dpp / 2 - config.tol_theta, 0.0)
