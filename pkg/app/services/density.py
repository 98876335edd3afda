# app/services/density.py
"""
Eigenvalues f_1 > ... > f_p of A1 A2^{-1} for two Wishart samples whose
covariances differ by a rank-one spike, Sigma1 = (I + h psi psi') Sigma2.

The joint density is

    c |Delta|^{-n1/2} prod f_j^{(n1-p-1)/2} prod (1+f_j)^{-n/2}
      1F0(n/2; I - Delta^{-1}, Lambda) prod_{j<k} (f_j - f_k)

with |Delta| = 1 + h, Lambda = F(I+F)^{-1}, and I - Delta^{-1} of rank one
with eigenvalue tau = h/(1+h). Constants are kept on the log scale.
"""
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import special

from app import config
from app.errors import DomainError
from app.models import EvalResult, ParameterVectors, SpikeArgument, Spectrum
from app.services.contour import QuadratureBudget, build_contour, quadrature, route_integrand
from app.services.jack_series import series_eval
from app.services.params import decompose, require_parameter_conditions
from app.services.rank_one import evaluate
from app.utils.gamma import LOG_PI

logger = logging.getLogger(__name__)


class TwoSampleDesign(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: int = Field(ge=1)
    n1: int = Field(ge=1)
    n2: int = Field(ge=1)

    @model_validator(mode="after")
    def samples_cover_dimension(self):
        if self.n1 < self.p or self.n2 < self.p:
            raise ValueError(f"need n1, n2 >= p; got p={self.p}, n1={self.n1}, n2={self.n2}")
        return self

    @property
    def n(self) -> int:
        return self.n1 + self.n2


class SpikeAlternative(BaseModel):
    """Spike size h; h = 0 is the null Delta = I."""

    model_config = ConfigDict(frozen=True)

    h: float

    @field_validator("h")
    @classmethod
    def nonnegative_spike(cls, h):
        if h < 0:
            raise DomainError(f"spike size h={h} < 0: only h > 0 keeps tau positive")
        return h

    @property
    def tau(self) -> float:
        return self.h / (1.0 + self.h)


class EigenvalueConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    f: Tuple[float, ...] = Field(min_length=1)

    @field_validator("f")
    @classmethod
    def strictly_decreasing(cls, f):
        if any(not v > 0 for v in f):
            raise ValueError("eigenvalues f must be positive")
        if any(not a > b for a, b in zip(f, f[1:])):
            raise ValueError("eigenvalues f must be strictly decreasing")
        return f

    @property
    def p(self) -> int:
        return len(self.f)

    @property
    def lambdas(self) -> Tuple[float, ...]:
        return tuple(v / (1.0 + v) for v in self.f)


def multivariate_gamma_log(p: int, a: float) -> float:
    """log Gamma_p(a) = p(p-1)/4 log pi + sum_i log Gamma(a - (i-1)/2)."""
    if a <= (p - 1) / 2.0:
        raise DomainError(f"Gamma_{p}({a}) needs a > {(p - 1) / 2.0}")
    return float(special.multigammaln(a, p))


def constant_c(design: TwoSampleDesign) -> float:
    """log c_{p,n1,n2}."""
    p = design.p
    return (
        p * p / 2.0 * LOG_PI
        + multivariate_gamma_log(p, design.n / 2.0)
        - multivariate_gamma_log(p, p / 2.0)
        - multivariate_gamma_log(p, design.n1 / 2.0)
        - multivariate_gamma_log(p, design.n2 / 2.0)
    )


def vandermonde(f: EigenvalueConfig) -> float:
    out = 1.0
    for j, fj in enumerate(f.f):
        for fk in f.f[j + 1 :]:
            out *= fj - fk
    return out


def _route(p: int) -> str:
    return "contour-i" if p % 2 == 0 else "contour-iii"


def joint_density(
    f: EigenvalueConfig,
    alt: Optional[SpikeAlternative],
    design: TwoSampleDesign,
    tol: Optional[float] = None,
) -> EvalResult:
    """Joint density of (f_j); alt None or h = 0 is the null."""
    if f.p != design.p:
        raise DomainError(f"{f.p} eigenvalues given for dimension p={design.p}")
    p, n1, n = design.p, design.n1, design.n
    log_f = np.log(np.asarray(f.f))
    log_value = (
        constant_c(design)
        + (n1 - p - 1) / 2.0 * float(np.sum(log_f))
        - n / 2.0 * float(np.sum(np.log1p(np.asarray(f.f))))
        + math.log(vandermonde(f))
    )
    if alt is None or alt.h == 0:
        return EvalResult(value=math.exp(log_value), err_estimate=0.0, method=_route(p), effort=0)

    log_value -= n1 / 2.0 * math.log1p(alt.h)
    factor = evaluate(
        ParameterVectors(a=(n / 2.0,)),
        SpikeArgument(x=alt.tau, r=p, alpha=2.0),
        Spectrum(y=f.lambdas),
        tol=tol,
    )
    scale = math.exp(log_value)
    return EvalResult(
        value=scale * factor.value.real,
        err_estimate=scale * factor.err_estimate,
        method=factor.method,
        effort=factor.effort,
    )


def _check_tau(tau: float) -> None:
    if not 0 < tau < 1:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")


def _sorted_lambdas(lam: Sequence[float]) -> Spectrum:
    if any(not 0 < v < 1 for v in lam):
        raise DomainError("every lambda_j must lie in (0, 1)")
    return Spectrum(y=tuple(sorted(lam, reverse=True)))


def _contour_value(params, spike, spectrum, budget, method) -> EvalResult:
    decomposition = decompose(spike, "i" if spike.r % 2 == 0 else "iii")
    require_parameter_conditions(params, decomposition.m)
    integrand = route_integrand(params, spike, spectrum, decomposition)
    contour = build_contour(spectrum, spike, params, budget, integrand)
    value, err, _ = quadrature(contour, integrand, budget.tol, budget.max_nodes)
    return EvalResult(value=value, err_estimate=err, method=method, effort=integrand.evaluations)


def lr_contour(
    tau: float,
    lam: Sequence[float],
    design: TwoSampleDesign,
    tol: Optional[float] = None,
    budget: Optional[QuadratureBudget] = None,
) -> EvalResult:
    """
    ((n-p)/2) B(p/2, (n-p)/2) (1-tau)^{n1/2} tau^{-(p/2-1)}
      (1/2 pi i) int (1 - tau s)^{-(n-p+2)/2} prod (s - lambda_j)^{-1/2} ds
    """
    _check_tau(tau)
    spectrum = _sorted_lambdas(lam)
    if spectrum.r != design.p:
        raise DomainError(f"{spectrum.r} values of lambda given for dimension p={design.p}")
    budget = budget or QuadratureBudget()
    if tol is not None:
        budget = budget.model_copy(update={"tol": tol})
    p, n = design.p, design.n
    spike = SpikeArgument(x=tau, r=p, alpha=2.0)
    integral = _contour_value(ParameterVectors(a=(n / 2.0,)), spike, spectrum, budget, _route(p))
    log_scale = (
        math.log((n - p) / 2.0)
        + special.gammaln(p / 2.0)
        + special.gammaln((n - p) / 2.0)
        - special.gammaln(n / 2.0)
        + design.n1 / 2.0 * math.log1p(-tau)
    )
    scale = math.exp(log_scale)
    return EvalResult(
        value=scale * integral.value.real,
        err_estimate=scale * integral.err_estimate,
        method=integral.method,
        effort=integral.effort,
    )


def lr_limit(
    tau: float,
    mu: Sequence[float],
    p: int,
    n1: int,
    tol: Optional[float] = None,
    budget: Optional[QuadratureBudget] = None,
) -> EvalResult:
    """
    n2 -> infinity form: Gamma(p/2) (2/n1)^{p/2-1} (1-tau)^{n1/2} tau^{-(p/2-1)}
      (1/2 pi i) int e^{n1 tau z/2} prod (z - mu_j)^{-1/2} dz
    """
    _check_tau(tau)
    if len(mu) != p:
        raise DomainError(f"{len(mu)} values of mu given for dimension p={p}")
    if n1 < p:
        raise DomainError(f"need n1 >= p; got p={p}, n1={n1}")
    budget = budget or QuadratureBudget()
    if tol is not None:
        budget = budget.model_copy(update={"tol": tol})
    spectrum = Spectrum(y=tuple(sorted(mu, reverse=True)))
    spike = SpikeArgument(x=n1 * tau / 2.0, r=p, alpha=2.0)
    integral = _contour_value(ParameterVectors(), spike, spectrum, budget, _route(p))
    scale = math.exp(special.gammaln(p / 2.0) + n1 / 2.0 * math.log1p(-tau))
    return EvalResult(
        value=scale * integral.value.real,
        err_estimate=scale * integral.err_estimate,
        method=integral.method,
        effort=integral.effort,
    )


def likelihood_ratio_series(
    tau: float,
    lam: Sequence[float],
    design: TwoSampleDesign,
    tol: float = config.KERNEL_TOL,
    Kmax: int = config.SERIES_KMAX,
) -> EvalResult:
    """|Delta|^{-n1/2} 1F0(n/2; I - Delta^{-1}, Lambda) summed as a Jack series."""
    _check_tau(tau)
    spectrum = _sorted_lambdas(lam)
    factor = series_eval(
        ParameterVectors(a=(design.n / 2.0,)),
        SpikeArgument(x=tau, r=design.p, alpha=2.0),
        spectrum,
        tol=tol,
        Kmax=Kmax,
    )
    scale = math.exp(design.n1 / 2.0 * math.log1p(-tau))
    return EvalResult(
        value=scale * factor.value.real,
        err_estimate=scale * factor.err_estimate,
        method="series",
        effort=factor.effort,
    )


def likelihood_ratio_limit_series(
    tau: float,
    mu: Sequence[float],
    n1: int,
    tol: float = config.KERNEL_TOL,
    Kmax: int = config.SERIES_KMAX,
) -> EvalResult:
    """(1-tau)^{n1/2} 0F0(n1 tau/2 e_1 e_1', diag(mu)) summed as a Jack series."""
    _check_tau(tau)
    spectrum = Spectrum(y=tuple(sorted(mu, reverse=True)))
    factor = series_eval(
        ParameterVectors(),
        SpikeArgument(x=n1 * tau / 2.0, r=spectrum.r, alpha=2.0),
        spectrum,
        tol=tol,
        Kmax=Kmax,
    )
    scale = math.exp(n1 / 2.0 * math.log1p(-tau))
    return EvalResult(
        value=scale * factor.value.real,
        err_estimate=scale * factor.err_estimate,
        method="series",
        effort=factor.effort,
    )


def beta_prime_density(f: float, n1: int, n2: int) -> float:
    """Beta-prime(n1/2, n2/2) density, the p = 1 null law of f."""
    if not f > 0:
        raise DomainError(f"f must be positive, got {f}")
    a, b = n1 / 2.0, n2 / 2.0
    log_value = (
        special.gammaln(a + b) - special.gammaln(a) - special.gammaln(b)
        + (a - 1.0) * math.log(f)
        - (a + b) * math.log1p(f)
    )
    return math.exp(log_value)


def lambda_from_mu(mu: Sequence[float], n1: int, n2: int) -> Tuple[float, ...]:
    """lambda_j = n1 mu_j / (n2 + n1 mu_j), i.e. f_j = n1 mu_j / n2."""
    return tuple(n1 * m / (n2 + n1 * m) for m in mu)
