# app/services/rank_one.py
"""
Rank-one matrix-argument pFq through a single contour integral.

    (i)   r/alpha = m + 1:      m!/(x^m rho'_m) (1/2 pi i) int pFq(a-m, b-m; xs) Delta_y(s) ds
    (ii)  r/alpha = m + eps:    (eps)_m/(x^m rho'_m) (1/2 pi i) int s^{eps-1} p+1Fq+1(a-m, 1; b-m, eps; xs) Delta_y(s) ds
    (iii) alpha = 2, any r:     (i) with m = r/2 - 1, Pochhammers read as gamma ratios

with rho'_m = rho_m(a-m, b-m). The x^{-m} factor lives inside the integrand.
"""
import logging
from typing import Literal, Optional

from app import config
from app.errors import DomainError
from app.models import EvalResult, ParameterVectors, SpikeArgument, SpikeDecomposition, Spectrum
from app.services.contour import QuadratureBudget, build_contour, quadrature, route_integrand, select_route
from app.services.jack_series import series_eval
from app.services.params import decompose, require_parameter_conditions, rho, rising_factorial, shift_parameters
from app.utils.gamma import gamma_complex

logger = logging.getLogger(__name__)

RouteMethod = Literal["auto", "contour-i", "contour-ii", "contour-iii", "series"]


def _budget(tol: Optional[float], budget: Optional[QuadratureBudget]) -> QuadratureBudget:
    budget = budget or QuadratureBudget()
    if tol is not None and tol != budget.tol:
        budget = budget.model_copy(update={"tol": tol})
    return budget


def _check_domain(params: ParameterVectors, spike: SpikeArgument, y: Spectrum) -> None:
    if y.r != spike.r:
        raise DomainError(f"spectrum has {y.r} eigenvalues but r = {spike.r}")
    if params.p == params.q + 1 and spike.x * y.max >= 1:
        raise DomainError(f"x * max(y) = {spike.x * y.max} >= 1: the kernel cut meets the spectrum")


def _prefactor(params: ParameterVectors, decomposition: SpikeDecomposition) -> complex:
    m = decomposition.m
    rho_shifted = rho(shift_parameters(params, m), m)
    if decomposition.epsilon is None:
        return gamma_complex(m + 1.0) / rho_shifted
    return rising_factorial(decomposition.epsilon, int(round(m))) / rho_shifted


def _integrate(
    params: ParameterVectors,
    spike: SpikeArgument,
    y: Spectrum,
    decomposition: SpikeDecomposition,
    budget: QuadratureBudget,
    method: str,
) -> EvalResult:
    require_parameter_conditions(params, decomposition.m)
    integrand = route_integrand(params, spike, y, decomposition)
    contour = build_contour(y, spike, params, budget, integrand)
    value, err, _ = quadrature(contour, integrand, budget.tol, budget.max_nodes)
    scale = _prefactor(params, decomposition)
    logger.debug("%s on %s: value=%s err=%.3e evaluations=%d", method, contour.geometry, value * scale, err, integrand.evaluations)
    return EvalResult(
        value=value * scale,
        err_estimate=abs(scale) * err,
        method=method,
        effort=integrand.evaluations,
    )


def _unit(method: str) -> EvalResult:
    return EvalResult(value=1.0, err_estimate=0.0, method=method, effort=0)


def eval_contour_i(
    params: ParameterVectors,
    spike: SpikeArgument,
    y: Spectrum,
    tol: Optional[float] = None,
    budget: Optional[QuadratureBudget] = None,
) -> EvalResult:
    _check_domain(params, spike, y)
    decomposition = decompose(spike, "i")
    if spike.x == 0:
        return _unit("contour-i")
    return _integrate(params, spike, y, decomposition, _budget(tol, budget), "contour-i")


def eval_contour_ii(
    params: ParameterVectors,
    spike: SpikeArgument,
    y: Spectrum,
    tol: Optional[float] = None,
    budget: Optional[QuadratureBudget] = None,
) -> EvalResult:
    _check_domain(params, spike, y)
    decomposition = decompose(spike, "ii")
    if spike.x == 0:
        return _unit("contour-ii")
    return _integrate(params, spike, y, decomposition, _budget(tol, budget), "contour-ii")


def eval_contour_iii(
    params: ParameterVectors,
    spike: SpikeArgument,
    y: Spectrum,
    tol: Optional[float] = None,
    budget: Optional[QuadratureBudget] = None,
) -> EvalResult:
    _check_domain(params, spike, y)
    decomposition = decompose(spike, "iii")
    if spike.x == 0:
        return _unit("contour-iii")
    return _integrate(params, spike, y, decomposition, _budget(tol, budget), "contour-iii")


ROUTES = {"i": eval_contour_i, "ii": eval_contour_ii, "iii": eval_contour_iii}


def evaluate(
    params: ParameterVectors,
    spike: SpikeArgument,
    y: Spectrum,
    method: RouteMethod = "auto",
    tol: Optional[float] = None,
    budget: Optional[QuadratureBudget] = None,
    Kmax: int = config.SERIES_KMAX,
) -> EvalResult:
    """Dispatch to a contour route by r/alpha, or to the route/series the caller names."""
    if method == "series":
        return series_eval(params, spike, y, tol=config.KERNEL_TOL if tol is None else tol, Kmax=Kmax)
    if method == "auto":
        part = select_route(spike, params)
    elif method.startswith("contour-"):
        part = method.split("-", 1)[1]
    else:
        raise ValueError(f"unknown method {method!r}")
    return ROUTES[part](params, spike, y, tol=tol, budget=budget)
