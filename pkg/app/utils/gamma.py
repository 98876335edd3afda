# app/utils/gamma.py
import cmath
import math

from app.errors import PoleError

# Lanczos approximation, g = 7, nine coefficients (double precision).
LANCZOS_G = 7.0
LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
LOG_PI = math.log(math.pi)

POLE_ATOL = 1e-13


def is_nonpositive_integer(z: complex, atol: float = POLE_ATOL) -> bool:
    z = complex(z)
    if abs(z.imag) > atol:
        return False
    nearest = round(z.real)
    return nearest <= 0 and abs(z.real - nearest) <= atol


def _log_gamma_lanczos(z: complex) -> complex:
    # valid for Re z >= 0.5
    z = z - 1.0
    acc = complex(LANCZOS_COEF[0])
    for i in range(1, len(LANCZOS_COEF)):
        acc += LANCZOS_COEF[i] / (z + i)
    t = z + LANCZOS_G + 0.5
    return HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(acc)


def log_gamma_complex(z: complex) -> complex:
    """
    Principal branch of log Gamma(z): analytic off (-inf, 0], real on the
    positive axis, and satisfying logG(z+1) = logG(z) + log z.
    """
    z = complex(z)
    if is_nonpositive_integer(z):
        raise PoleError(f"Gamma has a pole at {z}")
    if z.real >= 0.5:
        return _log_gamma_lanczos(z)
    # reflection; the 2*pi*i multiple keeps the principal branch
    shift = math.copysign(2.0 * math.pi, z.imag) * math.floor(0.5 * z.real + 0.25)
    sin_pz = cmath.sin(math.pi * z)
    return complex(LOG_PI, shift) - cmath.log(sin_pz) - _log_gamma_lanczos(1.0 - z)


def gamma_complex(z: complex) -> complex:
    return cmath.exp(log_gamma_complex(z))


def reciprocal_gamma(z: complex) -> complex:
    """1/Gamma(z), entire: exactly zero at the poles of Gamma."""
    if is_nonpositive_integer(z):
        return 0j
    return cmath.exp(-log_gamma_complex(z))

