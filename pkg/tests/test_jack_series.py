import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from app.errors import ConvergenceError, DomainError
from app.models import ParameterVectors, SpikeArgument, Spectrum
from app.services.jack_series import jack_single_row, series_eval
from app.services.scalar_hyp import ScalarKernel, scalar_pfq

finite = dict(allow_nan=False, allow_infinity=False)
spectra = st.lists(st.floats(min_value=0.05, max_value=4, **finite), min_size=1, max_size=5)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 3.0])
@pytest.mark.parametrize("r", [1, 2, 5])
def test_identity_spectrum_values(alpha, r):
    table = jack_single_row(Spectrum(y=(1.0,) * r), alpha, 20)
    values = table.values
    for k in range(21):
        expected = math.exp(
            special.gammaln(r / alpha + k) - special.gammaln(r / alpha) - special.gammaln(1 / alpha + k) + special.gammaln(1 / alpha)
        )
        assert values[k] == pytest.approx(expected, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(y=spectra, t=st.floats(min_value=0.1, max_value=5, **finite), alpha=st.sampled_from([1.0, 2.0, 0.7]))
def test_homogeneity(y, t, alpha):
    base = jack_single_row(Spectrum(y=tuple(y)), alpha, 12).values
    scaled = jack_single_row(Spectrum(y=tuple(t * v for v in y)), alpha, 12).values
    k = np.arange(13)
    assert np.allclose(scaled, base * t**k, rtol=1e-11, atol=0)


@settings(max_examples=50, deadline=None)
@given(y=spectra, data=st.data())
def test_permutation_invariance(y, data):
    shuffled = data.draw(st.permutations(y))
    a = jack_single_row(Spectrum(y=tuple(y)), 2.0, 15).values
    b = jack_single_row(Spectrum(y=tuple(shuffled)), 2.0, 15).values
    assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_single_eigenvalue_is_a_power():
    values = jack_single_row(Spectrum(y=(1.7,)), 1.3, 10).values
    assert np.allclose(values, 1.7 ** np.arange(11), rtol=1e-13)


def test_negative_order_is_rejected():
    with pytest.raises(ValueError):
        jack_single_row(Spectrum(y=(1.0,)), 2.0, -1)


@pytest.mark.parametrize(
    "params",
    [
        ParameterVectors(),
        ParameterVectors(b=(1.8,)),
        ParameterVectors(a=(0.7,)),
        ParameterVectors(a=(0.6,), b=(2.4,)),
        ParameterVectors(a=(0.4, 1.3), b=(2.7,)),
    ],
)
@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_scalar_spectrum_reduces_to_scalar_function(params, alpha):
    # Y = c I collapses every Jack ratio, leaving pFq(x c)
    c, x = 0.8, 0.7
    for r in (1, 3):
        result = series_eval(params, SpikeArgument(x=x, r=r, alpha=alpha), Spectrum(y=(c,) * r))
        expected = scalar_pfq(ScalarKernel(params=params), x * c)
        assert abs(result.value - expected) <= 1e-10 * abs(expected)
        assert result.method == "series"


def test_two_by_two_sphere_closed_form():
    # alpha = 2, r = 2: average of exp(x u'Yu) over the circle
    x, y1, y2 = 0.3, 1.5, 0.5
    result = series_eval(ParameterVectors(), SpikeArgument(x=x, r=2, alpha=2), Spectrum(y=(y1, y2)), tol=1e-15)
    expected = math.exp(x * (y1 + y2) / 2) * special.i0(x * (y1 - y2) / 2)
    assert result.value.real == pytest.approx(expected, rel=1e-13)
    assert result.value.real == pytest.approx(1.35746244763854, rel=1e-12)
    assert abs(result.value.imag) < 1e-15


def test_two_by_two_sphere_quadrature():
    params = ParameterVectors(a=(0.6,), b=(2.4,))
    kernel = ScalarKernel(params=params)
    x, y1, y2 = 1.7, 2.0, 0.3

    def average(theta):
        return scalar_pfq(kernel, x * (y1 * math.cos(theta) ** 2 + y2 * math.sin(theta) ** 2)).real

    expected = integrate.quad(average, 0, math.pi, epsabs=0, epsrel=1e-13)[0] / math.pi
    result = series_eval(params, SpikeArgument(x=x, r=2, alpha=2), Spectrum(y=(y1, y2)), tol=1e-15)
    assert result.value.real == pytest.approx(expected, rel=1e-11)


def test_zero_argument_is_one():
    result = series_eval(ParameterVectors(a=(1.2,), b=(3.0,)), SpikeArgument(x=0, r=3, alpha=1), Spectrum(y=(1, 2, 3)))
    assert result.value == 1


def test_error_estimate_is_small_on_convergence():
    result = series_eval(ParameterVectors(), SpikeArgument(x=2.0, r=4, alpha=1), Spectrum(y=(0.5, 1, 1.5, 2)))
    assert result.err_estimate <= 5e-12 * abs(result.value)
    assert result.effort > 10


def test_divergence_guard():
    with pytest.raises(DomainError):
        series_eval(ParameterVectors(a=(0.5, 1.0), b=(2.0,)), SpikeArgument(x=1.0, r=2, alpha=2), Spectrum(y=(0.5, 1.2)))
    with pytest.raises(DomainError):
        series_eval(ParameterVectors(a=(0.5,)), SpikeArgument(x=1.0, r=2, alpha=2), Spectrum(y=(0.5, 1.0)))


def test_spectrum_size_must_match_r():
    with pytest.raises(DomainError):
        series_eval(ParameterVectors(), SpikeArgument(x=1.0, r=3, alpha=2), Spectrum(y=(0.5, 1.0)))


def test_kmax_exhaustion():
    with pytest.raises(ConvergenceError):
        series_eval(ParameterVectors(), SpikeArgument(x=60.0, r=2, alpha=1), Spectrum(y=(1.0, 2.0)), Kmax=16)
