import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.errors import ConvergenceError, DomainError
from app.models import ParameterVectors, SpikeArgument, Spectrum
from app.services.contour import (
    QuadratureBudget,
    build_contour,
    quadrature,
    route_integrand,
    select_route,
    weight_delta_y,
)
from app.services.jack_series import series_eval
from app.services.params import decompose
from app.services.rank_one import eval_contour_ii, eval_contour_iii, evaluate
from app.services.scalar_hyp import ScalarKernel, scalar_pfq

CASES = {
    "0F0": ParameterVectors(),
    "0F1": ParameterVectors(b=(3.3,)),
    "1F0": ParameterVectors(a=(1.7,)),
    "1F1": ParameterVectors(a=(1.6,), b=(2.4,)),
    "2F1": ParameterVectors(a=(1.4, 2.3), b=(3.7,)),
}
BOUNDED = ["0F0", "0F1", "1F1"]


def spectrum(r: int) -> Spectrum:
    return Spectrum(y=tuple(np.linspace(0.3, 1.4, r)))


def argument(case: str) -> float:
    return 0.4 if CASES[case].p == CASES[case].q + 1 else 0.8


def rel_gap(u: complex, v: complex) -> float:
    return abs(u - v) / abs(v)


def circle(r=2, alpha=1.0, geometry="auto", integrand=None):
    return build_contour(
        Spectrum(y=(0.5, 1.0) if r == 2 else tuple(np.linspace(0.5, 1.0, r))),
        SpikeArgument(x=0.5, r=r, alpha=alpha),
        ParameterVectors(),
        QuadratureBudget(geometry=geometry),
        integrand,
    )


class TestQuadrature:
    def test_residue(self):
        value, err, used = quadrature(circle(), lambda s: 1.0 / (s - 0.3), tol=1e-13)
        assert abs(value - 1) <= 1e-12
        assert err < 1e-10
        assert used > 32

    @pytest.mark.parametrize("k", [0, 1, 3])
    def test_monomials_vanish(self, k):
        value, _, _ = quadrature(circle(), lambda s: s**k, tol=1e-13)
        assert abs(value) <= 1e-12

    def test_simple_pole_at_origin(self):
        value, _, _ = quadrature(circle(), lambda s: 1.0 / s)
        assert abs(value - 1) <= 1e-12

    @pytest.mark.parametrize("z", [0.5, 1.5, 2.25])
    def test_hankel_reciprocal_gamma(self, z):
        def hankel(s):
            return np.exp(s) * np.exp(-z * np.log(s))

        contour = circle(geometry="keyhole", integrand=hankel)
        assert contour.geometry == "keyhole"
        value, err, _ = quadrature(contour, hankel, tol=1e-12)
        assert abs(value - 1 / math.gamma(z)) <= 1e-9
        assert err < 1e-8

    def test_node_budget(self):
        with pytest.raises(ConvergenceError):
            quadrature(circle(), lambda s: np.exp(40 * s) / (s - 0.3), tol=1e-14, max_nodes=64)


class TestWeight:
    def test_value(self):
        assert weight_delta_y(3.0, Spectrum(y=(1.0, 2.0)), 1.0) == pytest.approx(0.5)
        assert weight_delta_y(1.5, Spectrum(y=(1.0, 2.0)), 0.5) == pytest.approx(16.0)

    def test_singular_points(self):
        with pytest.raises(DomainError):
            weight_delta_y(1.0, Spectrum(y=(1.0, 2.0)), 1.0)
        with pytest.raises(DomainError):
            weight_delta_y(1.5, Spectrum(y=(1.0, 2.0)), 2.0)

    def test_conjugate_symmetry(self):
        y = Spectrum(y=(0.4, 0.9, 1.3))
        s = -0.7 + 0.4j
        assert weight_delta_y(s.conjugate(), y, 2.0) == pytest.approx(weight_delta_y(s, y, 2.0).conjugate())


class TestGeometry:
    def test_integer_ratio_closes_the_circle(self):
        c = build_contour(spectrum(4), SpikeArgument(x=0.8, r=4, alpha=2), ParameterVectors())
        assert c.geometry == "closed-circle"
        assert c.center == pytest.approx(0.7)
        assert c.right_vertex == pytest.approx(1.5 * 1.4 + 1)
        assert c.center - c.radius < 0

    def test_fractional_ratio_opens_a_keyhole(self):
        c = build_contour(spectrum(3), SpikeArgument(x=0.8, r=3, alpha=2), ParameterVectors())
        assert c.geometry == "keyhole"
        assert c.leg_height == pytest.approx(0.05)
        assert c.truncation_abscissa < c.junction < 0
        assert c.arc_breaks[0] == -c.arc_breaks[-1]
        assert len(c.arc_breaks) == 9

    def test_closed_circle_is_refused_across_a_cut(self):
        with pytest.raises(DomainError):
            build_contour(spectrum(3), SpikeArgument(x=0.8, r=3, alpha=2), ParameterVectors(), QuadratureBudget(geometry="closed-circle"))

    def test_forced_keyhole_on_integer_ratio(self):
        c = build_contour(spectrum(2), SpikeArgument(x=0.8, r=2, alpha=1), ParameterVectors(), QuadratureBudget(geometry="keyhole"))
        assert c.geometry == "keyhole"

    def test_kernel_cut_vertex(self):
        c = build_contour(spectrum(2), SpikeArgument(x=0.4, r=2, alpha=1), CASES["1F0"])
        assert c.right_vertex == pytest.approx(0.5 * (1.4 + 2.5))
        assert 0.4 * c.right_vertex < 1

    def test_kernel_cut_meeting_the_spectrum(self):
        with pytest.raises(DomainError):
            build_contour(spectrum(2), SpikeArgument(x=1.0, r=2, alpha=1), CASES["1F0"])
        with pytest.raises(DomainError):
            evaluate(CASES["2F1"], SpikeArgument(x=1.0, r=2, alpha=1), spectrum(2))

    def test_select_route(self):
        assert select_route(SpikeArgument(x=1, r=4, alpha=2)) == "i"
        assert select_route(SpikeArgument(x=1, r=3, alpha=1)) == "i"
        assert select_route(SpikeArgument(x=1, r=3, alpha=2)) == "iii"
        assert select_route(SpikeArgument(x=1, r=2, alpha=3)) == "ii"
        assert select_route(SpikeArgument(x=1, r=3, alpha=2), CASES["1F1"]) == "iii"
        assert select_route(SpikeArgument(x=1, r=3, alpha=2), CASES["0F1"]) == "ii"
        assert select_route(SpikeArgument(x=1, r=4, alpha=2), CASES["0F1"]) == "i"


@pytest.mark.parametrize("case", list(CASES))
@pytest.mark.parametrize("alpha", [1.0, 2.0])
@pytest.mark.parametrize("r", [1, 2, 3, 4, 6])
def test_contour_matches_series(case, alpha, r):
    params, y = CASES[case], spectrum(r)
    spike = SpikeArgument(x=argument(case), r=r, alpha=alpha)
    result = evaluate(params, spike, y)
    oracle = series_eval(params, spike, y, tol=1e-14)
    assert result.method == f"contour-{select_route(spike, params)}"
    assert rel_gap(result.value, oracle.value) <= 1e-7
    assert result.effort > 0


@pytest.mark.parametrize("case", ["0F0", "0F1", "1F0", "1F1"])
@pytest.mark.parametrize("r", [1, 3, 5])
def test_fractional_routes_agree(case, r):
    params, y = CASES[case], spectrum(r)
    spike = SpikeArgument(x=argument(case), r=r, alpha=2)
    two = eval_contour_ii(params, spike, y)
    three = eval_contour_iii(params, spike, y)
    assert two.method == "contour-ii" and three.method == "contour-iii"
    assert rel_gap(two.value, three.value) <= 1e-7


@pytest.mark.slow
@pytest.mark.parametrize("r", [3, 5])
def test_fractional_routes_agree_for_gauss(r):
    # the route (ii) kernel is a 3F2, continued through mpmath on the far nodes
    params, y = CASES["2F1"], spectrum(r)
    spike = SpikeArgument(x=argument("2F1"), r=r, alpha=2)
    assert rel_gap(eval_contour_ii(params, spike, y).value, eval_contour_iii(params, spike, y).value) <= 1e-7


@pytest.mark.parametrize("case", BOUNDED)
@pytest.mark.parametrize("r,alpha", [(2, 3.0), (4, 3.0), (3, 2.0), (5, 2.0), (2, 0.7)])
def test_fractional_route_matches_series(case, r, alpha):
    params, y = CASES[case], spectrum(r)
    spike = SpikeArgument(x=0.8, r=r, alpha=alpha)
    result = evaluate(params, spike, y)
    assert result.method == f"contour-{select_route(spike, params)}"
    assert rel_gap(result.value, series_eval(params, spike, y, tol=1e-14).value) <= 1e-6


@pytest.mark.parametrize("b", [0.8, 1.2])
@pytest.mark.parametrize("r", [3, 5])
def test_small_denominators_in_the_real_case(b, r):
    params = ParameterVectors(b=(b,))
    y = Spectrum(y=tuple(np.linspace(0.3, 1.4, r)))
    spike = SpikeArgument(x=0.8, r=r, alpha=2)
    result = evaluate(params, spike, y)
    assert result.method == "contour-ii"
    assert rel_gap(result.value, series_eval(params, spike, y, tol=1e-14).value) <= 1e-7


@pytest.mark.parametrize("case", BOUNDED)
@pytest.mark.parametrize("r,alpha", [(4, 2.0), (3, 2.0)])
def test_path_perturbations_leave_the_value(case, r, alpha):
    params, y = CASES[case], spectrum(r)
    spike = SpikeArgument(x=0.8, r=r, alpha=alpha)
    tight = QuadratureBudget(tol=1e-12)
    base = evaluate(params, spike, y, budget=tight)
    wider = evaluate(params, spike, y, budget=tight.model_copy(update={"radius_scale": 1.3}))
    taller = evaluate(params, spike, y, budget=tight.model_copy(update={"leg_height_scale": 1.3}))
    assert rel_gap(wider.value, base.value) <= 1e-9
    assert rel_gap(taller.value, base.value) <= 1e-9


def off_integer(lo: float, hi: float):
    return st.floats(lo, hi).filter(lambda v: abs(v - round(v)) > 0.15)


def admissible_draws(case: str):
    shape = CASES[case]
    x_hi = 0.45 if shape.p == shape.q + 1 else 1.0
    return st.fixed_dictionaries(
        {
            "a": st.tuples(*[off_integer(0.3, 3.0) for _ in range(shape.p)]),
            "b": st.tuples(*[off_integer(0.6, 4.0) for _ in range(shape.q)]),
            "x": st.floats(0.1, x_hi),
            "r": st.sampled_from([2, 4]),
            "alpha": st.sampled_from([1.0, 2.0]),
        }
    )


@pytest.mark.parametrize("case", list(CASES))
@settings(max_examples=20, deadline=None, derandomize=True)
@given(data=st.data())
def test_random_parameters_match_series(case, data):
    draw = data.draw(admissible_draws(case))
    params = ParameterVectors(a=draw["a"], b=draw["b"])
    spike = SpikeArgument(x=draw["x"], r=draw["r"], alpha=draw["alpha"])
    y = spectrum(draw["r"])
    result = evaluate(params, spike, y)
    assert rel_gap(result.value, series_eval(params, spike, y, tol=1e-14).value) <= 1e-7


def test_real_case_regression_value():
    # e^{0.3} I_0(0.15): the circle average of exp(0.3 (0.5 cos^2 + 1.5 sin^2))
    spike = SpikeArgument(x=0.3, r=2, alpha=2)
    result = evaluate(CASES["0F0"], spike, Spectrum(y=(0.5, 1.5)))
    assert result.method == "contour-i"
    assert rel_gap(result.value, 1.35746244763854) <= 1e-8


@pytest.mark.parametrize("case", list(CASES))
@pytest.mark.parametrize("r,alpha", [(2, 1.0), (3, 2.0), (4, 2.0)])
def test_scalar_spectrum(case, r, alpha):
    c = 0.9
    x = argument(case)
    result = evaluate(CASES[case], SpikeArgument(x=x, r=r, alpha=alpha), Spectrum(y=(c,) * r))
    expected = scalar_pfq(ScalarKernel(params=CASES[case]), x * c)
    assert rel_gap(result.value, expected) <= 1e-7


@settings(max_examples=10, deadline=None)
@given(data=st.data())
def test_permutation_invariance(data):
    y = [0.3, 0.8, 1.1, 1.6]
    shuffled = data.draw(st.permutations(y))
    spike = SpikeArgument(x=0.8, r=4, alpha=1)
    a = evaluate(CASES["1F1"], spike, Spectrum(y=tuple(y)))
    b = evaluate(CASES["1F1"], spike, Spectrum(y=tuple(shuffled)))
    assert rel_gap(a.value, b.value) <= 1e-10


@pytest.mark.parametrize("r,alpha", [(4, 1.0), (3, 2.0), (2, 3.0)])
def test_small_argument(r, alpha):
    params, y = CASES["1F1"], spectrum(r)
    spike = SpikeArgument(x=1e-4, r=r, alpha=alpha)
    result = evaluate(params, spike, y)
    oracle = series_eval(params, spike, y, tol=1e-15)
    assert abs(result.value - oracle.value) <= 1e-9


def test_zero_argument_is_exactly_one():
    for method in ("auto", "contour-i", "contour-iii"):
        result = evaluate(CASES["1F1"], SpikeArgument(x=0, r=4, alpha=2), spectrum(4), method)
        assert result.value == 1
        assert result.effort == 0


@pytest.mark.parametrize("case", list(CASES))
@pytest.mark.parametrize("r,alpha", [(4, 1.0), (3, 2.0)])
def test_real_inputs_give_real_values(case, r, alpha):
    result = evaluate(CASES[case], SpikeArgument(x=argument(case), r=r, alpha=alpha), spectrum(r))
    assert abs(result.value.imag) <= max(result.err_estimate, 1e-14 * abs(result.value))


def test_repeated_eigenvalues():
    params = CASES["1F1"]
    y = Spectrum(y=(0.5, 0.5, 0.5, 1.5))
    for alpha in (1.0, 2.0):
        spike = SpikeArgument(x=0.8, r=4, alpha=alpha)
        result = evaluate(params, spike, y)
        assert rel_gap(result.value, series_eval(params, spike, y, tol=1e-14).value) <= 1e-8


def test_route_integrand_counts_evaluations():
    spike = SpikeArgument(x=0.8, r=4, alpha=1)
    integrand = route_integrand(CASES["0F0"], spike, spectrum(4), decompose(spike, "i"))
    integrand(np.array([1 + 1j, -1 + 0.5j]))
    assert integrand.evaluations == 2


def test_forced_closed_circle_across_a_cut():
    with pytest.raises(DomainError):
        evaluate(CASES["0F0"], SpikeArgument(x=0.8, r=3, alpha=2), spectrum(3), budget=QuadratureBudget(geometry="closed-circle"))


def test_route_mismatch():
    with pytest.raises(DomainError):
        evaluate(CASES["0F0"], SpikeArgument(x=0.8, r=3, alpha=2), spectrum(3), "contour-i")
    with pytest.raises(ValueError):
        evaluate(CASES["0F0"], SpikeArgument(x=0.8, r=3, alpha=2), spectrum(3), "contour-iv")


def test_series_method_dispatch():
    spike = SpikeArgument(x=0.8, r=3, alpha=2)
    assert evaluate(CASES["0F0"], spike, spectrum(3), "series").method == "series"
