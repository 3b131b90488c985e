"""
Problem configs: one JSON file per experiment with the blocks
problem (name, tau), dynamics, target, grids, petrov, validation,
tolerances and experiments.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

from django import forms
from django.core.exceptions import ValidationError

from experiments.exceptions import ConfigurationError
from experiments.forms import (
    DynamicsForm,
    GridsForm,
    PetrovForm,
    ProblemForm,
    TargetForm,
    TolerancesForm,
    ValidationForm,
)
from funcspace.paths import HistoryPath
from integrator.controls import ControlSignal
from mintime.services import DEFAULT_TOL_THETA, OraclePolicy
from problem.dynamics import DynamicsSpec
from problem.targets import TargetSpec


@dataclass(frozen=True)
class ProblemConfig:
    name: str
    tau: float
    dynamics: DynamicsSpec
    M_bar: float
    target: TargetSpec
    grids: dict
    petrov: dict
    validation: dict
    tolerances: dict
    histories: Dict[str, HistoryPath] = field(default_factory=dict)
    families: Dict[str, List[HistoryPath]] = field(default_factory=dict)
    experiments: dict = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return self.grids['dt']

    @property
    def tol_theta(self) -> float:
        return self.tolerances.get('tol_theta') or DEFAULT_TOL_THETA

    def policy(self, prune: bool = True) -> OraclePolicy:
        return OraclePolicy(
            switch_mesh=self.grids['switch_mesh'],
            horizon=self.grids['horizon'],
            dt=self.dt,
            tol_theta=self.tol_theta,
            prune=prune,
        )

    def history(self, name: str) -> HistoryPath:
        try:
            return self.histories[name]
        except KeyError:
            raise ConfigurationError(
                f"experiments.histories: unknown history '{name}' (known: {', '.join(sorted(self.histories))})."
            )

    def family(self, name: str) -> List[HistoryPath]:
        try:
            return self.families[name]
        except KeyError:
            raise ConfigurationError(f"experiments.families: unknown family '{name}'.")

    def experiment(self, check: str) -> dict:
        block = self.experiments.get(check)
        if not isinstance(block, dict):
            raise ConfigurationError(f"experiments.{check}: block missing from the config.")
        return block

    def experiment_field(self, check: str, key: str):
        block = self.experiment(check)
        if key not in block:
            raise ConfigurationError(f"experiments.{check}.{key}: this field is required.")
        return block[key]

    def controls(self, specs: List[str]) -> List[ControlSignal]:
        try:
            return [ControlSignal.parse(str(spec)) for spec in specs]
        except ValidationError as e:
            raise ConfigurationError(f"experiments.dpp.controls: {'; '.join(e.messages)}")


def _form_errors(block: str, form: forms.Form) -> str:
    lines = []
    for name, errors in form.errors.items():
        location = block if name == '__all__' else f'{block}.{name}'
        lines.extend(f"{location}: {error}" for error in errors)
    return '\n'.join(lines)


def _validated(block: str, form: forms.Form) -> dict:
    if not form.is_valid():
        raise ConfigurationError(_form_errors(block, form))
    return form.cleaned_data


def _parse_history(label: str, spec: dict, tau: float, n_intervals: Optional[int], dim: int) -> HistoryPath:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigurationError(f"{label}: expected {{'constant': point}} or {{'samples': rows}}.")

    try:
        if 'constant' in spec:
            path = HistoryPath.constant(tau, spec['constant'], n_intervals)
        elif 'samples' in spec:
            path = HistoryPath(tau, spec['samples'])
        else:
            raise ConfigurationError(f"{label}: unknown history form '{next(iter(spec))}'.")
    except (ValidationError, ValueError, TypeError) as e:
        messages = e.messages if isinstance(e, ValidationError) else [str(e)]
        raise ConfigurationError(f"{label}: {'; '.join(messages)}")

    if path.dim != dim:
        raise ConfigurationError(f"{label}: history lives in R^{path.dim}, the dynamics in R^{dim}.")
    return path


def parse_config(data: dict) -> ProblemConfig:
    if not isinstance(data, dict):
        raise ConfigurationError('The config must be a JSON object.')

    problem = _validated('problem', ProblemForm(data.get('problem') or {}))
    tau = problem['tau']

    dynamics = _validated('dynamics', DynamicsForm(data.get('dynamics') or {}))
    dyn = dynamics['spec']
    target = _validated('target', TargetForm(data.get('target') or {}, dim=dyn.dim_state))['spec']
    grids = _validated('grids', GridsForm(data.get('grids') or {}, tau=tau))
    petrov = _validated('petrov', PetrovForm(data.get('petrov') or {}))
    validation = _validated('validation', ValidationForm(data.get('validation') or {}, dim=dyn.dim_state))
    tolerances = _validated('tolerances', TolerancesForm(data.get('tolerances') or {}))

    experiments = data.get('experiments') or {}
    if not isinstance(experiments, dict):
        raise ConfigurationError('experiments: expected an object.')

    n_intervals = grids.get('history_samples')
    histories = {
        name: _parse_history(f'experiments.histories.{name}', spec, tau, n_intervals, dyn.dim_state)
        for name, spec in (experiments.get('histories') or {}).items()
    }
    families = {
        name: [
            _parse_history(f'experiments.families.{name}[{i}]', spec, tau, n_intervals, dyn.dim_state)
            for i, spec in enumerate(specs)
        ]
        for name, specs in (experiments.get('families') or {}).items()
    }

    return ProblemConfig(
        name=problem['name'],
        tau=tau,
        dynamics=dyn,
        M_bar=dynamics['M_bar'],
        target=target,
        grids=grids,
        petrov=petrov,
        validation=validation,
        tolerances=tolerances,
        histories=histories,
        families=families,
        experiments=experiments,
    )


def load_config(path: Union[str, Path]) -> ProblemConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigurationError(f"{path}: {e.strerror}")

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}:{e.lineno}:{e.colno}: {e.msg}")

    return parse_config(data)
