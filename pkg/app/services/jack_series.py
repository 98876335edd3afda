# app/services/jack_series.py
"""
Series oracle for the rank-one matrix-argument function.

The single-row Jack values come from the generating function
prod_j (1 - z y_j)^(-1/alpha) = sum_k c_k z^k, with
C_k(Y) = k! c_k / (1/alpha)_k.  In the rank-one series every term
rho_k (1/alpha)_k / (r/alpha)_k x^k C_k(Y) / k! collapses to
rho_k x^k c_k / (r/alpha)_k, so the oracle only needs the c_k.
"""
import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from app import config
from app.errors import ConvergenceError, DomainError
from app.models import EvalResult, ParameterVectors, SpikeArgument, Spectrum

logger = logging.getLogger(__name__)

SMALL_RUN = 3
INITIAL_K = 64


class JackTable(BaseModel):
    """
    Generating-function coefficients for one spectrum, stored scaled:
    coefficients[k] = c_k / scale**k with scale = max y_j, so they stay O(k^{r/alpha}).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha: float
    scale: float
    coefficients: np.ndarray

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @property
    def values(self) -> np.ndarray:
        """C_k^alpha(Y) for k = 0..K."""
        k = np.arange(len(self.coefficients))
        # log k! - log (1/alpha)_k
        log_ratio = np.concatenate(([0.0], np.cumsum(np.log((k[1:]) / (1.0 / self.alpha + k[1:] - 1)))))
        with np.errstate(over="ignore"):
            return self.coefficients * np.exp(log_ratio + k * math.log(self.scale))


def _binomial_series(y: float, alpha: float, order: int) -> np.ndarray:
    # (1 - z y)^(-1/alpha) = sum ((1/alpha)_n / n!) y^n z^n
    n = np.arange(1, order + 1)
    ratios = (1.0 / alpha + n - 1) / n * y
    return np.concatenate(([1.0], np.cumprod(ratios)))


def jack_single_row(y: Spectrum, alpha: float, K: int) -> JackTable:
    """Single-row Jack values C_k^alpha(Y), k = 0..K, by series multiplication."""
    if K < 0:
        raise ValueError(f"K must be >= 0, got {K}")
    scale = y.max
    coef = np.zeros(K + 1)
    coef[0] = 1.0
    for yj in y.y:
        coef = np.convolve(coef, _binomial_series(yj / scale, alpha, K))[: K + 1]
    return JackTable(alpha=alpha, scale=scale, coefficients=coef)


def series_eval(
    params: ParameterVectors,
    spike: SpikeArgument,
    y: Spectrum,
    tol: float = config.KERNEL_TOL,
    Kmax: int = config.SERIES_KMAX,
    table: Optional[JackTable] = None,
) -> EvalResult:
    """
    Partial sums of the rank-one series, stopped once three consecutive terms
    fall below tol * |partial sum|. The Jack table is doubled on demand up to Kmax.
    """
    if y.r != spike.r:
        raise DomainError(f"spectrum has {y.r} eigenvalues but r = {spike.r}")
    if params.p > params.q + 1:
        raise DomainError(f"p={params.p} > q+1: the series diverges")
    if params.p == params.q + 1 and spike.x * y.max >= 1:
        raise DomainError(f"x * max(y) = {spike.x * y.max} >= 1: outside the convergence domain of the series")

    a = [complex(v) for v in params.a]
    b = [complex(v) for v in params.b]
    ra = spike.r / spike.alpha
    z = spike.x * y.max
    if table is None or table.alpha != spike.alpha:
        table = jack_single_row(y, spike.alpha, min(INITIAL_K, Kmax))

    weight = complex(1.0)  # rho_k z^k / (r/alpha)_k
    total = complex(table.coefficients[0])
    block = [abs(total)]
    small = 0
    k = 0
    while True:
        if k + 1 > table.order:
            if table.order >= Kmax:
                raise ConvergenceError(f"series did not settle within Kmax={Kmax} terms")
            table = jack_single_row(y, spike.alpha, min(2 * table.order, Kmax))
            logger.debug("jack table extended to K=%d", table.order)
        ratio = z / (ra + k)
        for av in a:
            ratio *= av + k
        for bv in b:
            ratio /= bv + k
        weight *= ratio
        k += 1
        term = weight * table.coefficients[k]
        total += term
        mag = abs(term)
        block = (block + [mag])[-SMALL_RUN:]
        if not math.isfinite(mag):
            raise ConvergenceError(f"series terms overflowed at k={k}")
        if mag <= tol * abs(total):
            small += 1
            if small >= SMALL_RUN:
                break
        else:
            small = 0

    return EvalResult(value=total, err_estimate=float(sum(block)), method="series", effort=k + 1)
