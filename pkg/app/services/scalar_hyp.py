# app/services/scalar_hyp.py
"""
Scalar generalized hypergeometric kernels pFq(a, b; z) for the five James
cases (0F0, 0F1, 1F0, 1F1, 2F1) plus a plain series for other p <= q + 1.

Double precision series and classical transformations do the work; a kernel
that would lose more than a few digits to cancellation is handed to mpmath at
raised working precision.
"""
import cmath
import logging
import math
from typing import Callable, Dict, List, Sequence, Tuple

import mpmath
import numpy as np
from scipy import special
from pydantic import BaseModel, ConfigDict, model_validator

from app import config
from app.errors import ConvergenceError, DomainError, PoleError
from app.models import CASE_SHAPES, ParameterVectors
from app.utils.gamma import is_nonpositive_integer, log_gamma_complex, reciprocal_gamma

logger = logging.getLogger(__name__)

MAX_TERMS = 10000
SMALL_RUN = 3
CANCEL_LIMIT = 1e4
RESCALE_AT = 1e200
LADDER_RADIUS = 0.9
DEGENERATE_GAP = 1e-4
LARGE_ARG = 200.0
BESSEL_ARG = 50.0
VECTOR_ARG = 10.0


class ScalarKernel(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: ParameterVectors
    case: str = ""

    @model_validator(mode="after")
    def case_matches_shape(self):
        expected = CASE_SHAPES.get((self.params.p, self.params.q), "generic-series")
        if not self.case:
            object.__setattr__(self, "case", expected)
        elif self.case != expected:
            raise ValueError(f"case {self.case} does not match (p, q) = ({self.params.p}, {self.params.q})")
        return self


class _Degenerate(Exception):
    pass


def _on_cut(z: complex) -> bool:
    return z.imag == 0 and z.real >= 1


def _cpow(w: complex, e: complex) -> complex:
    """Principal power w**e."""
    if e == 0:
        return complex(1.0)
    if w == 0:
        return 0j if complex(e).real > 0 else complex(math.inf)
    return cmath.exp(e * cmath.log(w))


def pfq_series(
    a: Sequence[complex],
    b: Sequence[complex],
    z: complex,
    tol: float,
    start: int = 0,
) -> Tuple[complex, float, float]:
    """
    sum_{k >= start} rho_k z^k / k! by the term ratio recurrence.

    Returns (s, log_scale, cancellation) with the true sum s * exp(log_scale);
    cancellation is max|term| / |sum|.
    """
    z = complex(z)
    term = complex(1.0)
    log_scale = 0.0
    for k in range(start):
        ratio = z / (k + 1)
        for av in a:
            ratio *= av + k
        for bv in b:
            ratio /= bv + k
        term *= ratio
        if term == 0:
            return 0j, 0.0, 1.0
        if abs(term) > RESCALE_AT:
            term /= RESCALE_AT
            log_scale += math.log(RESCALE_AT)
    total = term
    biggest = abs(term)
    small = 0
    k = start
    while k < start + MAX_TERMS:
        ratio = z / (k + 1)
        for av in a:
            ratio *= av + k
        for bv in b:
            ratio /= bv + k
        term *= ratio
        total += term
        mag = abs(term)
        if mag > RESCALE_AT:
            term /= RESCALE_AT
            total /= RESCALE_AT
            biggest /= RESCALE_AT
            log_scale += math.log(RESCALE_AT)
            mag = abs(term)
        if mag > biggest:
            biggest = mag
        if mag <= tol * abs(total):
            small += 1
            if small >= SMALL_RUN:
                break
        else:
            small = 0
        k += 1
    else:
        raise ConvergenceError(f"pFq series did not settle within {MAX_TERMS} terms at z={z}")
    denom = abs(total)
    cancellation = biggest / denom if denom > 0 else math.inf
    return total, log_scale, cancellation


def _mp_hyper(a: Sequence[complex], b: Sequence[complex], z: complex, lost_digits: float = 0.0) -> complex:
    dps = 30 + int(max(lost_digits, 0.0))
    logger.debug("mpmath fallback for %dF%d at z=%s (dps=%d)", len(a), len(b), z, dps)
    try:
        with mpmath.workdps(dps):
            return complex(mpmath.hyper([mpmath.mpc(v) for v in a], [mpmath.mpc(v) for v in b], mpmath.mpc(z)))
    except (ValueError, ZeroDivisionError, mpmath.libmp.NoConvergence) as e:
        raise ConvergenceError(f"{len(a)}F{len(b)} could not be evaluated at z={z}: {e}")


def _series_or_fallback(a: Sequence[complex], b: Sequence[complex], z: complex, tol: float) -> complex:
    if abs(z) > LARGE_ARG:
        return _mp_hyper(a, b, z)
    try:
        s, shift, cancel = pfq_series(a, b, z, tol)
    except ConvergenceError:
        return _mp_hyper(a, b, z)
    if cancel > CANCEL_LIMIT:
        return _mp_hyper(a, b, z, math.log10(cancel))
    return s * math.exp(shift) if shift else s


def kummer_stabilize(a: complex, b: complex, z: complex, tol: float = config.KERNEL_TOL) -> complex:
    """1F1(a; b; z), through e^z 1F1(b-a; b; -z) when Re z < 0."""
    a, b, z = complex(a), complex(b), complex(z)
    if is_nonpositive_integer(b):
        raise PoleError(f"1F1 denominator b={b} is a nonpositive integer")
    if is_nonpositive_integer(a) or z.real >= 0:
        return _series_or_fallback([a], [b], z, tol)
    if abs(z) > LARGE_ARG:
        return _mp_hyper([a], [b], z)
    try:
        s, shift, cancel = pfq_series([b - a], [b], -z, tol)
    except ConvergenceError:
        return _mp_hyper([a], [b], z)
    if cancel > CANCEL_LIMIT:
        return _mp_hyper([a], [b], z, math.log10(cancel))
    return cmath.exp(z + shift) * s


def _gamma_ratio(nums: Sequence[complex], dens: Sequence[complex]) -> complex:
    log_num = 0j
    for v in nums:
        if is_nonpositive_integer(v):
            raise _Degenerate(f"Gamma({v}) in a transformation numerator")
        log_num += log_gamma_complex(v)
    out = cmath.exp(log_num)
    for v in dens:
        out *= reciprocal_gamma(v)
    return out


def _near_integer(w: complex) -> bool:
    return abs(w.imag) < DEGENERATE_GAP and abs(w.real - round(w.real)) < DEGENERATE_GAP


def _f21(a, b, c, w, tol):
    s, shift, cancel = pfq_series([a, b], [c], w, tol)
    if cancel > CANCEL_LIMIT:
        raise _Degenerate(f"series at {w} cancels ({cancel:.1e})")
    return s * math.exp(shift) if shift else s


def _route_direct(a, b, c, z, tol):
    return _f21(a, b, c, z, tol)


def _route_pfaff(a, b, c, z, tol):
    return _cpow(1 - z, -a) * _f21(a, c - b, c, z / (z - 1), tol)


def _route_one_minus_z(a, b, c, z, tol):
    if _near_integer(c - a - b):
        raise _Degenerate("c - a - b is an integer")
    w = 1 - z
    t1 = _gamma_ratio([c, c - a - b], [c - a, c - b]) * _f21(a, b, a + b - c + 1, w, tol)
    t2 = _gamma_ratio([c, a + b - c], [a, b]) * _cpow(w, c - a - b) * _f21(c - a, c - b, c - a - b + 1, w, tol)
    return t1 + t2


def _route_inverse_z(a, b, c, z, tol):
    if _near_integer(a - b):
        raise _Degenerate("a - b is an integer")
    w = 1 / z
    t1 = _gamma_ratio([c, b - a], [b, c - a]) * _cpow(-z, -a) * _f21(a, a - c + 1, a - b + 1, w, tol)
    t2 = _gamma_ratio([c, a - b], [a, c - b]) * _cpow(-z, -b) * _f21(b, b - c + 1, b - a + 1, w, tol)
    return t1 + t2


def _route_inverse_one_minus_z(a, b, c, z, tol):
    if _near_integer(a - b):
        raise _Degenerate("a - b is an integer")
    w = 1 / (1 - z)
    t1 = _cpow(1 - z, -a) * _gamma_ratio([c, b - a], [b, c - a]) * _f21(a, c - b, a - b + 1, w, tol)
    t2 = _cpow(1 - z, -b) * _gamma_ratio([c, a - b], [a, c - b]) * _f21(b, c - a, b - a + 1, w, tol)
    return t1 + t2


def _route_one_minus_inverse_z(a, b, c, z, tol):
    if _near_integer(c - a - b):
        raise _Degenerate("c - a - b is an integer")
    w = 1 - 1 / z
    t1 = _gamma_ratio([c, c - a - b], [c - a, c - b]) * _cpow(z, -a) * _f21(a, a - c + 1, a + b - c + 1, w, tol)
    t2 = (
        _gamma_ratio([c, a + b - c], [a, b])
        * _cpow(1 - z, c - a - b)
        * _cpow(z, a - c)
        * _f21(c - a, 1 - a, c - a - b + 1, w, tol)
    )
    return t1 + t2


LADDER: List[Tuple[str, Callable[[complex], complex], Callable]] = [
    ("z", lambda z: z, _route_direct),
    ("z/(z-1)", lambda z: z / (z - 1), _route_pfaff),
    ("1-z", lambda z: 1 - z, _route_one_minus_z),
    ("1/z", lambda z: 1 / z, _route_inverse_z),
    ("1/(1-z)", lambda z: 1 / (1 - z), _route_inverse_one_minus_z),
    ("(z-1)/z", lambda z: (z - 1) / z, _route_one_minus_inverse_z),
]


def _check_2f1(c: complex, z: complex) -> None:
    if is_nonpositive_integer(c):
        raise PoleError(f"2F1 denominator c={c} is a nonpositive integer")
    if _on_cut(z):
        raise DomainError(f"2F1 argument z={z} lies on the branch cut [1, inf)")


def gauss2f1_routes(a: complex, b: complex, c: complex, z: complex, tol: float = config.KERNEL_TOL) -> Dict[str, complex]:
    """Every ladder route whose series argument lies inside the unit disk and is not degenerate."""
    a, b, c, z = complex(a), complex(b), complex(c), complex(z)
    _check_2f1(c, z)
    out = {}
    for name, arg, route in LADDER:
        try:
            w = arg(z)
        except ZeroDivisionError:
            continue
        if abs(w) >= 1:
            continue
        try:
            out[name] = route(a, b, c, z, tol)
        except (_Degenerate, ConvergenceError, ZeroDivisionError):
            continue
    return out


def gauss2f1_continued(a: complex, b: complex, c: complex, z: complex, tol: float = config.KERNEL_TOL) -> complex:
    """
    2F1(a, b; c; z) on C minus [1, inf) with principal branches. The ladder
    route with the smallest series argument is tried first; degenerate routes
    fall through to the next best one.
    """
    a, b, c, z = complex(a), complex(b), complex(c), complex(z)
    _check_2f1(c, z)
    if z == 0:
        return complex(1.0)
    if is_nonpositive_integer(a) or is_nonpositive_integer(b):
        return _series_or_fallback([a, b], [c], z, tol)

    candidates = []
    for name, arg, route in LADDER:
        try:
            w = abs(arg(z))
        except ZeroDivisionError:
            continue
        candidates.append((w, name, route))
    candidates.sort(key=lambda item: item[0])

    for w, name, route in candidates:
        if w >= LADDER_RADIUS:
            break
        try:
            return route(a, b, c, z, tol)
        except (_Degenerate, ConvergenceError, ZeroDivisionError) as e:
            logger.debug("2F1 route %s skipped at z=%s: %s", name, z, e)
    return _mp_hyper([a, b], [c], z)


def _hyp0f1(c: complex, z: complex, tol: float) -> complex:
    """0F1(; c; z); large real-order arguments go through Gamma(c) z^{(1-c)/2} I_{c-1}(2 sqrt z)."""
    if abs(z) > BESSEL_ARG and c.imag == 0:
        nu = c.real - 1.0
        root = cmath.sqrt(z)
        with np.errstate(all="ignore"):
            value = complex(special.iv(nu, 2.0 * root)) * _cpow(root, -nu) * cmath.exp(log_gamma_complex(c))
        if cmath.isfinite(value):
            return value
    return _series_or_fallback([], [c], z, tol)


def scalar_pfq(kernel: ScalarKernel, z: complex, tol: float = config.KERNEL_TOL) -> complex:
    """pFq(a, b; z) for the kernel's case."""
    z = complex(z)
    a = [complex(v) for v in kernel.params.a]
    b = [complex(v) for v in kernel.params.b]
    case = kernel.case
    if case == "0F0":
        return cmath.exp(z)
    if case == "1F0":
        if _on_cut(z):
            raise DomainError(f"1F0 argument z={z} lies on the branch cut [1, inf)")
        return _cpow(1 - z, -a[0])
    if case == "1F1":
        return kummer_stabilize(a[0], b[0], z, tol)
    if case == "0F1":
        return _hyp0f1(b[0], z, tol)
    if case == "2F1":
        return gauss2f1_continued(a[0], a[1], b[0], z, tol)
    # generic-series
    if kernel.params.p <= kernel.params.q:
        return _series_or_fallback(a, b, z, tol)
    if _on_cut(z):
        raise DomainError(f"{kernel.params.p}F{kernel.params.q} argument z={z} lies on the branch cut [1, inf)")
    if abs(z) < LADDER_RADIUS or any(is_nonpositive_integer(v) for v in a):
        return _series_or_fallback(a, b, z, tol)
    return _mp_hyper(a, b, z)


def _series_array(a: Sequence[complex], b: Sequence[complex], z: np.ndarray, tol: float, start: int = 0):
    term = np.ones_like(z)
    for k in range(start):
        ratio = z / (k + 1)
        for av in a:
            ratio = ratio * (av + k)
        for bv in b:
            ratio = ratio / (bv + k)
        term = term * ratio
    total = term.copy()
    biggest = np.abs(term)
    small = np.zeros(z.shape, dtype=int)
    for k in range(start, start + MAX_TERMS):
        ratio = z / (k + 1)
        for av in a:
            ratio = ratio * (av + k)
        for bv in b:
            ratio = ratio / (bv + k)
        term = term * ratio
        total = total + term
        mag = np.abs(term)
        biggest = np.maximum(biggest, mag)
        small = np.where(mag <= tol * np.abs(total), small + 1, 0)
        if np.all(small >= SMALL_RUN):
            return total, biggest
    raise ConvergenceError(f"vectorized {len(a)}F{len(b)} series did not settle within {MAX_TERMS} terms")


def pfq_tail_array(kernel: ScalarKernel, z: np.ndarray, start: int, tol: float = config.KERNEL_TOL) -> np.ndarray:
    """sum_{k >= start} rho_k z^k / k! for an array of moderate arguments."""
    z = np.asarray(z, dtype=complex)
    a = [complex(v) for v in kernel.params.a]
    b = [complex(v) for v in kernel.params.b]
    total, _ = _series_array(a, b, z, tol, start)
    return total


def scalar_pfq_array(kernel: ScalarKernel, z: np.ndarray, tol: float = config.KERNEL_TOL) -> np.ndarray:
    """
    Vectorized scalar_pfq. Moderate arguments share one numpy series; large
    arguments and series that cancel go through scalar_pfq one at a time.
    """
    z = np.asarray(z, dtype=complex)
    case = kernel.case
    if case == "0F0":
        return np.exp(z)
    if case == "1F0":
        if np.any((z.imag == 0) & (z.real >= 1)):
            raise DomainError("1F0 argument on the branch cut [1, inf)")
        return np.exp(-complex(kernel.params.a[0]) * np.log(1 - z))

    a = [complex(v) for v in kernel.params.a]
    b = [complex(v) for v in kernel.params.b]
    radius = LADDER_RADIUS if kernel.params.p == kernel.params.q + 1 else VECTOR_ARG
    out = np.empty(z.shape, dtype=complex)
    near = np.abs(z) < radius
    if near.any():
        total, biggest = _series_array(a, b, z[near], tol)
        out[near] = total
        near[near] = biggest <= CANCEL_LIMIT * np.abs(total)
    flat_z, flat_out = z.ravel(), out.ravel()
    for idx in np.flatnonzero(~near.ravel()):
        flat_out[idx] = scalar_pfq(kernel, flat_z[idx], tol)
    return flat_out.reshape(z.shape)
