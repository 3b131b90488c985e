"""
Constants of the inductive steering construction and the radii and
delay thresholds derived from them.
"""

import math
from dataclasses import dataclass
from typing import Optional

from django.conf import settings
from django.core.exceptions import ValidationError

from steering.exceptions import DelayTooLargeError


@dataclass(frozen=True)
class SteeringParams:
    mu: float
    sigma: float
    M: float
    M_bar: float
    L: float
    tau: float
    delta: float
    k_contraction: float
    C_bound: float
    eps_target: Optional[float] = None
    max_iters: int = 500
    tol_ratio: float = 0.05

    @property
    def step_coefficient(self) -> float:
        """t_j / d_K(x_j(0))."""
        return (self.mu - 2 * self.M_bar * self.L * self.tau) / (4 * self.M ** 2)

    @property
    def delay_threshold(self) -> float:
        if self.L == 0:
            return math.inf
        return self.mu / (2 * self.M_bar * self.L)

    def as_dict(self) -> dict:
        return {
            'mu': self.mu,
            'sigma': self.sigma,
            'M': self.M,
            'M_bar': self.M_bar,
            'L': self.L,
            'tau': self.tau,
            'delta': self.delta,
            'k': self.k_contraction,
            'C': self.C_bound,
            'tau_threshold': self.delay_threshold,
            'tau_threshold_semiconcavity': semiconcavity_delay_threshold(self.mu, self.M, self.L),
        }


def derive_constants(
    mu: float,
    sigma: float,
    M: float,
    M_bar: float,
    L: float,
    tau: float,
    eps_target: Optional[float] = None,
    max_iters: Optional[int] = None,
    tol_ratio: Optional[float] = None
) -> SteeringParams:
    if min(mu, sigma, M, tau) <= 0:
        raise ValidationError('mu, sigma, M and tau must be positive.')

    if L < 0:
        raise ValidationError('L must be nonnegative.')

    if M_bar < M:
        raise ValidationError(f"M_bar = {M_bar} must be at least M = {M}.")

    # normalization M >= mu; M_bar follows so that M_bar >= M still holds
    M = max(M, mu)
    M_bar = max(M_bar, M)

    if L > 0:
        threshold = mu / (2 * M_bar * L)
        if tau >= threshold:
            raise DelayTooLargeError(tau, threshold)
        delta = min(M / L, sigma)
    else:
        delta = sigma

    coefficient = (mu - 2 * M_bar * L * tau) / (4 * M ** 2)
    k = math.sqrt(1 - mu * coefficient)

    return SteeringParams(
        mu=mu,
        sigma=sigma,
        M=M,
        M_bar=M_bar,
        L=L,
        tau=tau,
        delta=delta,
        k_contraction=k,
        C_bound=coefficient / (1 - k),
        eps_target=eps_target,
        max_iters=max_iters or getattr(settings, 'MINTAU_MAX_STEER_ITERS', 500),
        tol_ratio=getattr(settings, 'MINTAU_TOL_RATIO', 0.05) if tol_ratio is None else tol_ratio,
    )


def semiconcavity_delay_threshold(mu: float, M: float, L: float) -> float:
    if L == 0:
        return math.inf
    return mu / (6 * M * L)


def check_semiconcavity_delay(mu: float, M: float, L: float, tau: float) -> None:
    threshold = semiconcavity_delay_threshold(mu, M, L)
    if tau >= threshold:
        raise DelayTooLargeError(tau, threshold)


def restricted_to_bound(params: SteeringParams) -> SteeringParams:
    """The same construction with M_bar = M."""
    if params.M_bar == params.M:
        return params
    return derive_constants(
        params.mu, params.sigma, params.M, params.M, params.L, params.tau,
        params.eps_target, params.max_iters, params.tol_ratio,
    )


def lipschitz_modulus(params: SteeringParams, minimum_time: float) -> float:
    """C (1 + L tau) e^{L T}: local Lipschitz modulus of T around a datum with value T."""
    return params.C_bound * (1 + params.L * params.tau) * math.exp(params.L * minimum_time)


def lipschitz_radius(params: SteeringParams, minimum_time: float) -> float:
    """delta e^{-L (T + 1)} / (1 + L tau): radius on which the modulus applies."""
    return params.delta * math.exp(-params.L * (minimum_time + 1)) / (1 + params.L * params.tau)


def boundary_radius(params: SteeringParams, shell_r: float) -> float:
    """Largest rho (up to round-off) with 2 (1 + 2 M C) rho < min(delta, r), constants at M_bar = M."""
    own = restricted_to_bound(params)
    return (1 - 1e-9) * min(own.delta, shell_r) / (2 * (1 + 2 * own.M * own.C_bound))
