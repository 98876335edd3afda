# app/services/sphere_mc.py
"""
Monte Carlo oracle for the real case: the rank-one function as the average
of pFq(a, b; x q'Yq) over q uniform on the unit sphere.

Samples come from counter-based Philox streams, one per block of
SAMPLE_BLOCK samples, so sample i is the same whatever range or chunk
size asked for it.
"""
import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app import config
from app.errors import DomainError
from app.models import EvalResult, ParameterVectors, SpikeArgument, Spectrum
from app.services.contour import QuadratureBudget, build_contour, quadrature, route_integrand
from app.services.params import decompose
from app.services.scalar_hyp import ScalarKernel, scalar_pfq_array
from app.utils.gamma import gamma_complex

logger = logging.getLogger(__name__)


# one Philox stream per block of SAMPLE_BLOCK consecutive samples
SAMPLE_BLOCK = 4096


def _stream(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=block << 128))


def sample_sphere(r: int, n: int, seed: int = config.MC_SEED, start: int = 0) -> np.ndarray:
    """Samples start .. start+n-1 as rows of an (n, r) array of unit vectors."""
    if r < 1 or n < 0 or start < 0:
        raise ValueError(f"need r >= 1, n >= 0, start >= 0; got r={r}, n={n}, start={start}")
    out = np.empty((n, r))
    filled = 0
    while filled < n:
        index = start + filled
        block, offset = divmod(index, SAMPLE_BLOCK)
        take = min(SAMPLE_BLOCK - offset, n - filled)
        g = _stream(seed, block).standard_normal((offset + take, r))[offset:]
        out[filled : filled + take] = g / np.linalg.norm(g, axis=1, keepdims=True)
        filled += take
    return out


class SphereAverage(BaseModel):
    model_config = ConfigDict(frozen=True)

    estimate: complex
    stderr: float = Field(ge=0)
    n_samples: int
    seed: int

    def to_result(self) -> EvalResult:
        return EvalResult(value=self.estimate, err_estimate=self.stderr, method="sphere-mc", effort=self.n_samples)


def sphere_average(
    params: ParameterVectors,
    spike: SpikeArgument,
    y: Spectrum,
    n_samples: int = config.MC_SAMPLES,
    seed: int = config.MC_SEED,
) -> SphereAverage:
    """Mean of pFq(a, b; x q'Yq) and its standard error, merged chunk by chunk."""
    if spike.alpha != 2:
        raise DomainError(f"the sphere average represents the real case alpha = 2, got {spike.alpha}")
    if y.r != spike.r:
        raise DomainError(f"spectrum has {y.r} eigenvalues but r = {spike.r}")
    if params.p == params.q + 1 and spike.x * y.max >= 1:
        raise DomainError(f"x * max(y) = {spike.x * y.max} >= 1: x q'Yq can reach the kernel cut")
    if n_samples < 1:
        raise ValueError(f"n_samples must be positive, got {n_samples}")

    kernel = ScalarKernel(params=params)
    weights = np.asarray(y.y)
    count, mean, m2 = 0, 0j, 0.0
    for start in range(0, n_samples, config.MC_CHUNK):
        q = sample_sphere(spike.r, min(config.MC_CHUNK, n_samples - start), seed, start)
        values = scalar_pfq_array(kernel, spike.x * ((q * q) @ weights))
        size = len(values)
        block_mean = complex(values.mean())
        block_m2 = float(np.sum(np.abs(values - block_mean) ** 2))
        delta = block_mean - mean
        total = count + size
        mean += delta * size / total
        m2 += block_m2 + abs(delta) ** 2 * count * size / total
        count = total
    variance = m2 / (count - 1) if count > 1 else 0.0
    stderr = math.sqrt(variance / count)
    logger.debug("sphere average over %d samples: %s +- %.3e", count, mean, stderr)
    return SphereAverage(estimate=mean, stderr=stderr, n_samples=count, seed=seed)


class IdentityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    ratio: float
    sphere_side: float
    sphere_stderr: float
    contour_side: float
    contour_err: float
    gap_abs: float
    gap_rel: float
    gap_in_stderr: Optional[float] = None


def sphere_contour_identity_check(
    x: float,
    w: float,
    y: Spectrum,
    n_samples: int = config.MC_SAMPLES,
    tol: float = config.QUAD_TOL,
    seed: int = config.MC_SEED,
) -> IdentityReport:
    """
    Sphere mean of exp((x/w) q'Yq) against
    Gamma(r/2) (w/x)^{r/2-1} (1/2 pi i) int e^{(x/w)s} Delta_y(s) ds on a keyhole.
    """
    if not (x > 0 and w > 0):
        raise DomainError(f"x and w must be positive, got x={x}, w={w}")
    ratio = x / w
    spike = SpikeArgument(x=ratio, r=y.r, alpha=2.0)
    params = ParameterVectors()
    left = sphere_average(params, spike, y, n_samples, seed)

    decomposition = decompose(spike, "iii")
    integrand = route_integrand(params, spike, y, decomposition)
    budget = QuadratureBudget(tol=tol, geometry="keyhole")
    contour = build_contour(y, spike, params, budget, integrand)
    value, err, _ = quadrature(contour, integrand, tol, budget.max_nodes)
    scale = gamma_complex(decomposition.m + 1.0).real
    right = (value * scale).real
    right_err = err * scale

    gap = abs(left.estimate.real - right)
    return IdentityReport(
        ratio=ratio,
        sphere_side=left.estimate.real,
        sphere_stderr=left.stderr,
        contour_side=right,
        contour_err=right_err,
        gap_abs=gap,
        gap_rel=gap / abs(right) if right else math.inf,
        gap_in_stderr=gap / left.stderr if left.stderr > 0 else None,
    )
