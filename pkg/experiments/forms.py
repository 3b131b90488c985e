"""
Form classes validating the blocks of a problem config.

Each block is one form; forms that need values from other blocks get
them as constructor arguments. Successful validation leaves the built
domain objects in cleaned_data.
"""

from django import forms
from django.core.exceptions import ValidationError

from integrator.exceptions import IntegratorConfigurationError
from integrator.services import default_dt, delay_steps
from mintime.services import MinTimeService
from problem.dynamics import FIELDS, DynamicsSpec, unit_directions
from problem.services import check_scales, domain_bounds
from problem.targets import TARGET_KINDS, TargetSpec


def _positive(value: float, name: str) -> float:
    if value is not None and value <= 0:
        raise ValidationError(f"{name} must be positive.")
    return value


class ProblemForm(forms.Form):
    name = forms.CharField(max_length=255)
    tau = forms.FloatField()

    def clean_tau(self):
        return _positive(self.cleaned_data['tau'], 'tau')


class DynamicsForm(forms.Form):
    field = forms.ChoiceField(choices=[(name, name) for name in FIELDS])
    dim_state = forms.IntegerField(min_value=1, max_value=3)
    dim_control = forms.IntegerField(min_value=1)
    M = forms.FloatField()
    M_bar = forms.FloatField(required=False)
    L = forms.FloatField(min_value=0)
    c_f = forms.FloatField(min_value=0, required=False)
    controls = forms.JSONField()
    params = forms.JSONField(required=False)

    def clean_M(self):
        return _positive(self.cleaned_data['M'], 'M')

    def clean(self):
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data

        M = cleaned_data['M']
        M_bar = cleaned_data.get('M_bar') or M
        if M_bar < M:
            raise ValidationError(f"M_bar = {M_bar} must be at least M = {M}.")
        cleaned_data['M_bar'] = M_bar

        controls = cleaned_data['controls']
        if isinstance(controls, dict):
            if set(controls) != {'directions'}:
                raise ValidationError("controls must be a list or {'directions': count}.")
            controls = unit_directions(cleaned_data['dim_control'], int(controls['directions']))

        try:
            cleaned_data['spec'] = DynamicsSpec(
                name=cleaned_data['field'],
                dim_state=cleaned_data['dim_state'],
                dim_control=cleaned_data['dim_control'],
                bound_M=M,
                lipschitz_L=cleaned_data['L'],
                semiconcavity_cf=cleaned_data.get('c_f') or 0.0,
                controls=controls,
                params=cleaned_data.get('params') or {},
            )
        except (ValueError, TypeError) as e:
            raise ValidationError(f"Invalid controls: {e}")

        return cleaned_data


class TargetForm(forms.Form):
    kind = forms.ChoiceField(choices=[(kind, kind) for kind in TARGET_KINDS])
    centers = forms.JSONField()
    radii = forms.JSONField()

    def __init__(self, *args, dim: int = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.dim = dim

    def clean(self):
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data

        try:
            target = TargetSpec(cleaned_data['kind'], cleaned_data['centers'], cleaned_data['radii'])
        except (ValueError, TypeError) as e:
            raise ValidationError(f"Invalid balls: {e}")

        if self.dim is not None and target.dim != self.dim:
            raise ValidationError(f"Target lives in R^{target.dim} but the dynamics in R^{self.dim}.")

        cleaned_data['spec'] = target
        return cleaned_data


class GridsForm(forms.Form):
    history_samples = forms.IntegerField(min_value=1, required=False)
    dt = forms.FloatField(required=False)
    switch_mesh = forms.FloatField()
    horizon = forms.FloatField()

    def __init__(self, *args, tau: float = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.tau = tau

    def clean(self):
        cleaned_data = super().clean()
        if self.errors or self.tau is None:
            return cleaned_data

        dt = cleaned_data.get('dt') or default_dt(self.tau)
        _positive(dt, 'dt')
        _positive(cleaned_data['switch_mesh'], 'switch_mesh')
        try:
            delay_steps(self.tau, dt)
            MinTimeService.cell_steps(cleaned_data['switch_mesh'], dt)
        except IntegratorConfigurationError as e:
            raise ValidationError(str(e))

        if cleaned_data['horizon'] < cleaned_data['switch_mesh']:
            raise ValidationError('horizon must be at least switch_mesh.')

        cleaned_data['dt'] = dt
        return cleaned_data


class PetrovForm(forms.Form):
    sigma = forms.FloatField()
    shell_grid = forms.IntegerField(min_value=2)
    radial_layers = forms.IntegerField(min_value=2, required=False)

    def clean_sigma(self):
        return _positive(self.cleaned_data['sigma'], 'sigma')


class ValidationForm(forms.Form):
    domain = forms.JSONField()
    n_samples = forms.IntegerField(min_value=2)
    h_scales = forms.JSONField()
    shell_r = forms.FloatField(required=False)

    def __init__(self, *args, dim: int = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.dim = dim

    def clean_h_scales(self):
        scales = self.cleaned_data['h_scales']
        if not isinstance(scales, list) or not scales:
            raise ValidationError('h_scales must be a nonempty list.')
        try:
            return check_scales(scales).tolist()
        except (TypeError, ValueError):
            raise ValidationError('h_scales must be a list of numbers.')

    def clean_shell_r(self):
        return _positive(self.cleaned_data.get('shell_r'), 'shell_r')

    def clean(self):
        cleaned_data = super().clean()
        domain = cleaned_data.get('domain')
        if domain is None or self.dim is None:
            return cleaned_data

        try:
            domain_bounds(domain, self.dim)
        except ValidationError as e:
            self.add_error('domain', e)
        except (TypeError, ValueError):
            self.add_error('domain', f"Domain must be a box [lo, hi] in R^{self.dim}.")
        return cleaned_data


class TolerancesForm(forms.Form):
    tol_theta = forms.FloatField(required=False)
    tol_ratio = forms.FloatField(required=False)
    tol_dpp = forms.FloatField(required=False)
    eps_target = forms.FloatField(required=False)

    def clean(self):
        cleaned_data = super().clean()
        for name, value in list(cleaned_data.items()):
            if value is not None and value <= 0:
                self.add_error(name, f"{name} must be positive.")
        return cleaned_data
