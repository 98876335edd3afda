# app/services/params.py
import cmath
import math
from typing import Any, Dict, List, Literal

from pydantic import BaseModel, ValidationError

from app.errors import DomainError, ParameterError, PoleError
from app.models import ParameterVectors, SpikeArgument, SpikeDecomposition
from app.utils.gamma import is_nonpositive_integer, log_gamma_complex

INTEGER_ATOL = 1e-12

Part = Literal["i", "ii", "iii"]


def is_integer_valued(value: float, atol: float = INTEGER_ATOL) -> bool:
    return abs(value - round(value)) <= atol


def rising_factorial(a: complex, k: int) -> complex:
    """(a)_k = a(a+1)...(a+k-1), (a)_0 = 1."""
    if k < 0:
        raise ValueError(f"rising factorial needs k >= 0, got {k}")
    out = complex(1.0)
    for j in range(k):
        out *= a + j
    return out


def rising_factorial_gamma(a: complex, m: float) -> complex:
    """(a)_m read as Gamma(a+m)/Gamma(a), also for non-integer m."""
    a = complex(a)
    if is_nonpositive_integer(a) or is_nonpositive_integer(a + m):
        raise PoleError(f"(a)_m with a={a}, m={m} hits a pole of Gamma")
    if m >= 0 and is_integer_valued(m):
        return rising_factorial(a, int(round(m)))
    return cmath.exp(log_gamma_complex(a + m) - log_gamma_complex(a))


def rho(params: ParameterVectors, k_or_m: float) -> complex:
    """rho_k(a, b) = prod (a_l)_k / prod (b_l)_k."""
    if k_or_m >= 0 and is_integer_valued(k_or_m):
        k = int(round(k_or_m))
        num = complex(1.0)
        for a in params.a:
            num *= rising_factorial(a, k)
        den = complex(1.0)
        for b in params.b:
            den *= rising_factorial(b, k)
        return num / den
    out = complex(1.0)
    for a in params.a:
        out *= rising_factorial_gamma(a, k_or_m)
    for b in params.b:
        out /= rising_factorial_gamma(b, k_or_m)
    return out


def shift_parameters(params: ParameterVectors, m: float) -> ParameterVectors:
    """Entrywise a - m, b - m."""
    try:
        return ParameterVectors(
            a=tuple(complex(a) - m for a in params.a),
            b=tuple(complex(b) - m for b in params.b),
        )
    except ValidationError as e:
        raise ParameterError(f"shifting parameters by {m} leaves an invalid vector: {e.errors()[0]['msg']}")


class ValidationReport(BaseModel):
    m: float
    ok: bool
    violations: List[Dict[str, Any]] = []


def _violation(kind: str, index: int, value: complex, rule: str) -> Dict[str, Any]:
    return {"kind": kind, "index": index, "value": [value.real, value.imag], "rule": rule}


def validate_parameter_conditions(params: ParameterVectors, m: float) -> ValidationReport:
    """
    Integer m: a_l not in {1, ..., m} and b_l not in {m, m-1, m-2, ...}.
    Half-integer m: only exact gamma poles of rho'_m = prod Gamma(a_l)/Gamma(a_l - m)
    over prod Gamma(b_l)/Gamma(b_l - m) are rejected.
    """
    violations = []
    if is_integer_valued(m):
        mi = int(round(m))
        for i, a in enumerate(params.a):
            a = complex(a)
            if abs(a.imag) <= INTEGER_ATOL and is_integer_valued(a.real) and 1 <= round(a.real) <= mi:
                violations.append(_violation("a", i, a, f"a_l in {{1, ..., {mi}}}"))
        for i, b in enumerate(params.b):
            b = complex(b)
            if abs(b.imag) <= INTEGER_ATOL and is_integer_valued(b.real) and round(b.real) <= mi:
                violations.append(_violation("b", i, b, f"b_l in {{{mi}, {mi - 1}, ...}}"))
    else:
        for i, a in enumerate(params.a):
            a = complex(a)
            if is_nonpositive_integer(a) or is_nonpositive_integer(a - m):
                violations.append(_violation("a", i, a, "Gamma(a_l) or Gamma(a_l - m) has a pole"))
        for i, b in enumerate(params.b):
            b = complex(b)
            if is_nonpositive_integer(b - m):
                violations.append(_violation("b", i, b, "Gamma(b_l - m) has a pole"))
    return ValidationReport(m=m, ok=not violations, violations=violations)


def require_parameter_conditions(params: ParameterVectors, m: float) -> None:
    report = validate_parameter_conditions(params, m)
    if not report.ok:
        raise ParameterError(
            f"parameter conditions fail for m={m}: "
            + "; ".join(f"{v['kind']}[{v['index']}] {v['rule']}" for v in report.violations),
            violations=report.violations,
        )


def decompose(spike: SpikeArgument, part: Part) -> SpikeDecomposition:
    """Split r/alpha into the m (and epsilon) each contour route works with."""
    ratio = spike.r / spike.alpha
    if part == "i":
        if not is_integer_valued(ratio) or round(ratio) < 1:
            raise DomainError(f"r/alpha = {ratio} is not a positive integer")
        return SpikeDecomposition(m=float(round(ratio) - 1))
    if part == "ii":
        m = math.floor(ratio)
        eps = ratio - m
        if eps <= INTEGER_ATOL or eps >= 1 - INTEGER_ATOL:
            raise DomainError(f"r/alpha = {ratio} is an integer; use the integer route")
        return SpikeDecomposition(m=float(m), epsilon=eps)
    if part == "iii":
        if spike.alpha != 2:
            raise DomainError(f"the any-dimension route needs alpha = 2, got {spike.alpha}")
        return SpikeDecomposition(m=spike.r / 2.0 - 1.0)
    raise ValueError(f"unknown route {part!r}")
