# app/services/contour.py
"""
Integration paths and quadrature for the single-integral rank-one formulas.

Every path starts from one circle through -margin and right_vertex, with
margin = right_vertex - max(y), so that 0 and the spectrum sit strictly
inside. When the integrand is single-valued outside that circle the circle
itself is integrated with the periodic trapezoid rule. Otherwise it is opened
at the left into a keyhole: two legs at +-leg_height run out to the
truncation abscissa and the remaining arc joins them around the right.
"""
import logging
import math
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app import config
from app.errors import ConvergenceError, DomainError
from app.models import ParameterVectors, SpikeArgument, SpikeDecomposition, Spectrum
from app.services.params import Part, decompose, is_integer_valued, rho, shift_parameters
from app.services.scalar_hyp import ScalarKernel, pfq_tail_array, scalar_pfq_array

logger = logging.getLogger(__name__)

Geometry = Literal["closed-circle", "keyhole"]
Integrand = Callable[[np.ndarray], np.ndarray]

INITIAL_NODES = 32
ARC_PANELS = 8
MAX_DOUBLINGS = 140
MAX_DEPTH = 40
PROBE_FACTOR = 0.1
ARC_PROBES = 32
# summation floor: below this fraction of sum |f w| a result is rounding noise
ROUNDING = 64 * float(np.finfo(float).eps)


class QuadratureBudget(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol: float = Field(default=config.QUAD_TOL, gt=0)
    max_nodes: int = Field(default=config.NODE_BUDGET, gt=0)
    gl_order: int = Field(default=16, ge=2)
    radius_scale: float = Field(default=1.0, gt=0)
    leg_height_scale: float = Field(default=1.0, gt=0)
    geometry: Literal["auto", "closed-circle", "keyhole"] = "auto"


class ContourSpec(BaseModel):
    """
    A path plus its base rule: (1/2 pi i) int f ds ~= sum(weights * f(nodes)).

    Keyhole legs are parameterized by t >= 0 as junction - t -+ i leg_height;
    arc panels by the angle about center.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    geometry: Geometry
    center: float
    radius: float
    right_vertex: float
    gl_order: int = 16
    leg_height: Optional[float] = None
    attach_angle: Optional[float] = None
    truncation_abscissa: Optional[float] = None
    tail_estimate: float = 0.0
    arc_breaks: Tuple[float, ...] = ()
    leg_breaks: Tuple[float, ...] = ()
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def junction(self) -> float:
        """Real part where the legs meet the arc."""
        return self.center - self.radius * math.cos(self.attach_angle or 0.0)


def _delta(s: np.ndarray, y: np.ndarray, alpha: float) -> np.ndarray:
    logs = np.zeros(np.shape(s), dtype=complex)
    for yj in y:
        logs = logs + np.log(s - yj)
    return np.exp(-logs / alpha)


def weight_delta_y(s: complex, y: Spectrum, alpha: float) -> complex:
    """prod_j (s - y_j)^(-1/alpha) with principal logs."""
    s = complex(s)
    if s.imag == 0:
        if any(s.real == yj for yj in y.y):
            raise DomainError(f"s={s} is a singular point of Delta_y")
        if not is_integer_valued(1.0 / alpha) and s.real <= y.max:
            raise DomainError(f"s={s} lies on a branch cut of Delta_y")
    return complex(_delta(np.array([s]), np.asarray(y.y), alpha)[0])


class RankOneIntegrand:
    """
    s -> x^{-m} K(xs) Delta_y(s), times s^{eps-1} on the fractional route.

    With subtract set, the Taylor monomials of K below degree ceil(m) are
    removed: they integrate to zero over the path and dominate when x is small.
    """

    def __init__(
        self,
        kernel: ScalarKernel,
        x: float,
        m: float,
        y: Spectrum,
        alpha: float,
        epsilon: Optional[float] = None,
        subtract: bool = False,
        tol: float = config.KERNEL_TOL,
    ):
        if not x > 0:
            raise DomainError(f"the contour integrand needs x > 0, got {x}")
        self.kernel = kernel
        self.x = x
        self.m = m
        self.y = np.asarray(y.y, dtype=float)
        self.alpha = alpha
        self.epsilon = epsilon
        self.tol = tol
        self.start = int(math.ceil(m - 1e-12)) if subtract and m > 0 else 0
        self.scale = math.exp(-m * math.log(x))
        p, q = kernel.params.p, kernel.params.q
        self.direct_radius = 0.5 if p == q + 1 else 1.0 + self.start / 2.0
        # highest degree first, for np.polyval
        self.poly = np.array(
            [rho(kernel.params, l) / math.factorial(l) for l in range(self.start)][::-1], dtype=complex
        )
        self.evaluations = 0

    def kernel_values(self, s: np.ndarray) -> np.ndarray:
        z = self.x * s
        if not self.start:
            return scalar_pfq_array(self.kernel, z, self.tol) * self.scale
        out = np.empty(z.shape, dtype=complex)
        near = np.abs(z) < self.direct_radius
        if near.any():
            out[near] = pfq_tail_array(self.kernel, z[near], self.start, self.tol)
        far = ~near
        if far.any():
            zf = z[far]
            out[far] = scalar_pfq_array(self.kernel, zf, self.tol) - np.polyval(self.poly, zf)
        return out * self.scale

    def __call__(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        self.evaluations += s.size
        values = self.kernel_values(s) * _delta(s, self.y, self.alpha)
        if self.epsilon is not None:
            values = values * np.exp((self.epsilon - 1.0) * np.log(s))
        return values


def select_route(spike: SpikeArgument, params: Optional[ParameterVectors] = None) -> Part:
    """
    Integer r/alpha -> (i); real case with odd r -> (iii); otherwise (ii).

    A p < q kernel oscillates on the keyhole legs with only algebraic decay
    once its denominators are shifted down by m, so those inputs stay on (ii).
    """
    if is_integer_valued(spike.r / spike.alpha):
        return "i"
    if spike.alpha == 2 and not (params is not None and params.p < params.q):
        return "iii"
    return "ii"


def route_integrand(
    params: ParameterVectors,
    spike: SpikeArgument,
    y: Spectrum,
    decomposition: SpikeDecomposition,
    tol: float = config.KERNEL_TOL,
) -> RankOneIntegrand:
    """The integrand of route (i)/(iii), or of route (ii) when epsilon is set."""
    shifted = shift_parameters(params, decomposition.m)
    if decomposition.epsilon is None:
        kernel_params = shifted
    else:
        kernel_params = ParameterVectors(
            a=shifted.a + (complex(1.0),),
            b=shifted.b + (complex(decomposition.epsilon),),
        )
    # single-valued outside the circle: the subtracted monomials integrate to zero
    single_valued = decomposition.epsilon is not None or is_integer_valued(spike.r / spike.alpha)
    return RankOneIntegrand(
        ScalarKernel(params=kernel_params),
        spike.x,
        decomposition.m,
        y,
        spike.alpha,
        epsilon=decomposition.epsilon,
        subtract=single_valued,
        tol=tol,
    )


def _circle_rule(center: float, radius: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    theta = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    e = np.exp(1j * theta)
    return center + radius * e, radius * e / n


def _panel_rule(
    center: float,
    radius: float,
    junction: float,
    leg_height: float,
    kind: str,
    lo: float,
    hi: float,
    rule: Tuple[np.ndarray, np.ndarray],
) -> Tuple[np.ndarray, np.ndarray]:
    xg, wg = rule
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    t = mid + half * xg
    wt = half * wg
    if kind == "arc":
        e = np.exp(1j * t)
        return center + radius * e, wt * radius * e / (2.0 * np.pi)
    s = np.concatenate((junction - t - 1j * leg_height, junction - t + 1j * leg_height))
    w = np.concatenate((wt, -wt)) / (2j * np.pi)
    return s, w


def _choose_geometry(spike: SpikeArgument, budget: QuadratureBudget) -> Geometry:
    single_valued = is_integer_valued(spike.r / spike.alpha)
    if budget.geometry == "keyhole":
        return "keyhole"
    if budget.geometry == "closed-circle":
        if not single_valued:
            raise DomainError(f"r/alpha = {spike.r / spike.alpha} is not an integer; a closed circle would cross a branch cut")
        return "closed-circle"
    return "closed-circle" if single_valued else "keyhole"


def _leg_magnitude(integrand: Integrand, junction: float, leg_height: float, t: float) -> float:
    s = np.array([junction - t - 1j * leg_height, junction - t + 1j * leg_height])
    f = integrand(s)
    g = abs(f[0] - f[1]) * t / (2.0 * np.pi)
    if not math.isfinite(g):
        raise ConvergenceError(f"integrand is not finite on the legs at t={t}")
    return g


def _truncation(
    integrand: Integrand,
    center: float,
    radius: float,
    junction: float,
    leg_height: float,
    attach_angle: float,
    tol: float,
) -> Tuple[float, float]:
    """Leg length T and an estimate of the neglected tail beyond it."""
    theta = np.linspace(-np.pi + attach_angle, np.pi - attach_angle, ARC_PROBES)
    e = np.exp(1j * theta)
    arc = integrand(center + radius * e) * radius * e / ARC_PROBES
    peak = float(np.sum(np.abs(arc)))
    quiet = 0
    t = radius
    g = 0.0
    for _ in range(MAX_DOUBLINGS):
        g = _leg_magnitude(integrand, junction, leg_height, t)
        peak = max(peak, g)
        if g <= PROBE_FACTOR * tol * peak:
            quiet += 1
            if quiet >= 2:
                return t, g
        else:
            quiet = 0
        t *= 2.0
    t /= 2.0
    logger.warning("keyhole legs truncated at t=%.3e with leg magnitude %.3e still above target", t, g)
    return t, g


def build_contour(
    y: Spectrum,
    spike: SpikeArgument,
    params: ParameterVectors,
    budget: Optional[QuadratureBudget] = None,
    integrand: Optional[Integrand] = None,
) -> ContourSpec:
    """
    Lay out the path for (params, spike, y). A keyhole needs the integrand to
    place its truncation abscissa; the route integrand is used when none is given.
    """
    budget = budget or QuadratureBudget()
    if y.r != spike.r:
        raise DomainError(f"spectrum has {y.r} eigenvalues but r = {spike.r}")
    top = y.max
    kernel_cut = params.p == params.q + 1
    if kernel_cut:
        if spike.x * top >= 1:
            raise DomainError(f"x * max(y) = {spike.x * top} >= 1: no circle separates the spectrum from 1/x")
        limit = min(1.0 / spike.x, 10.0 * top) if spike.x > 0 else 10.0 * top
        right_vertex = 0.5 * (top + limit)
    else:
        right_vertex = 1.5 * top + 1.0
    margin = right_vertex - top
    center = 0.5 * (right_vertex - margin)
    radius = 0.5 * (right_vertex + margin) * budget.radius_scale
    right_vertex = center + radius
    if center - radius >= 0 or right_vertex <= top:
        raise DomainError(f"radius scale {budget.radius_scale} leaves 0 or the spectrum outside the circle")
    if kernel_cut and spike.x * right_vertex >= 1:
        raise DomainError(f"radius scale {budget.radius_scale} pushes the circle past the branch point 1/x")

    geometry = _choose_geometry(spike, budget)
    if geometry == "closed-circle":
        nodes, weights = _circle_rule(center, radius, INITIAL_NODES)
        logger.debug("closed circle: center=%.6g radius=%.6g", center, radius)
        return ContourSpec(
            geometry=geometry,
            center=center,
            radius=radius,
            right_vertex=right_vertex,
            gl_order=budget.gl_order,
            nodes=nodes,
            weights=weights,
        )

    spread = top - y.min
    leg_height = min(max(0.05, 0.01 * spread) * budget.leg_height_scale, 0.25 * radius)
    attach_angle = math.asin(leg_height / radius)
    junction = center - radius * math.cos(attach_angle)
    half = np.linspace(0.0, np.pi - attach_angle, ARC_PANELS // 2 + 1)
    arc_breaks = tuple(float(v) for v in np.concatenate((-half[:0:-1], half)))

    if integrand is None:
        if spike.x == 0:
            raise DomainError("x = 0 has no contour integrand to place the keyhole legs")
        part = select_route(spike, params)
        integrand = route_integrand(params, spike, y, decompose(spike, part))
    length, tail = _truncation(integrand, center, radius, junction, leg_height, attach_angle, budget.tol)
    leg_breaks = [0.0]
    t = radius
    while t <= length * (1 + 1e-12):
        leg_breaks.append(t)
        t *= 2.0

    rule = np.polynomial.legendre.leggauss(budget.gl_order)
    pieces = [
        _panel_rule(center, radius, junction, leg_height, "arc", lo, hi, rule)
        for lo, hi in zip(arc_breaks[:-1], arc_breaks[1:])
    ] + [
        _panel_rule(center, radius, junction, leg_height, "leg", lo, hi, rule)
        for lo, hi in zip(leg_breaks[:-1], leg_breaks[1:])
    ]
    logger.debug(
        "keyhole: center=%.6g radius=%.6g leg_height=%.3g legs to t=%.3e (%d panels)",
        center, radius, leg_height, length, len(leg_breaks) - 1,
    )
    return ContourSpec(
        geometry=geometry,
        center=center,
        radius=radius,
        right_vertex=right_vertex,
        gl_order=budget.gl_order,
        leg_height=leg_height,
        attach_angle=attach_angle,
        truncation_abscissa=junction - length,
        tail_estimate=tail,
        arc_breaks=arc_breaks,
        leg_breaks=tuple(leg_breaks),
        nodes=np.concatenate([s for s, _ in pieces]),
        weights=np.concatenate([w for _, w in pieces]),
    )


def _finite(values: np.ndarray, where: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise ConvergenceError(f"integrand is not finite at a node on the {where}")
    return values


def _trapezoid(contour: ContourSpec, integrand: Integrand, tol: float, max_nodes: int) -> Tuple[complex, float, int]:
    n = len(contour.nodes)
    previous = complex(np.sum(_finite(integrand(contour.nodes), "circle") * contour.weights))
    used = n
    while True:
        n *= 2
        if used + n > max_nodes:
            raise ConvergenceError(f"trapezoid rule did not settle within {max_nodes} nodes")
        s, w = _circle_rule(contour.center, contour.radius, n)
        fw = _finite(integrand(s), "circle") * w
        used += n
        current = complex(np.sum(fw))
        floor = ROUNDING * float(np.sum(np.abs(fw)))
        change = abs(current - previous)
        logger.debug("trapezoid n=%d change=%.3e", n, change)
        if change <= max(tol * abs(current), floor):
            return current, change + floor, used
        previous = current


class _Panel:
    __slots__ = ("kind", "lo", "hi", "depth", "value", "err", "mass")

    def __init__(self, kind: str, lo: float, hi: float, depth: int):
        self.kind, self.lo, self.hi, self.depth = kind, lo, hi, depth


def _adaptive(contour: ContourSpec, integrand: Integrand, tol: float, max_nodes: int) -> Tuple[complex, float, int]:
    rule = np.polynomial.legendre.leggauss(contour.gl_order)
    geometry = (contour.center, contour.radius, contour.junction, contour.leg_height)

    def estimate(panel: _Panel) -> int:
        mid = 0.5 * (panel.lo + panel.hi)
        parts = [
            _panel_rule(*geometry, panel.kind, panel.lo, panel.hi, rule),
            _panel_rule(*geometry, panel.kind, panel.lo, mid, rule),
            _panel_rule(*geometry, panel.kind, mid, panel.hi, rule),
        ]
        s = np.concatenate([p[0] for p in parts])
        f = _finite(integrand(s), panel.kind)
        n = len(parts[0][0])
        coarse = complex(np.sum(f[:n] * parts[0][1]))
        fw = f[n:] * np.concatenate((parts[1][1], parts[2][1]))
        panel.value = complex(np.sum(fw))
        panel.err = abs(panel.value - coarse)
        panel.mass = float(np.sum(np.abs(fw)))
        return len(s)

    panels: List[_Panel] = [
        _Panel("arc", lo, hi, 0) for lo, hi in zip(contour.arc_breaks[:-1], contour.arc_breaks[1:])
    ] + [_Panel("leg", lo, hi, 0) for lo, hi in zip(contour.leg_breaks[:-1], contour.leg_breaks[1:])]
    used = sum(estimate(p) for p in panels)

    while True:
        value = complex(sum(p.value for p in panels))
        err = sum(p.err for p in panels)
        mass = sum(p.mass for p in panels)
        target = max(tol * abs(value), ROUNDING * mass)
        if err <= target:
            break
        share = target / len(panels)
        if not any(p.err > share and p.depth < MAX_DEPTH for p in panels):
            logger.warning("keyhole quadrature reached the subdivision limit with err=%.3e", err)
            break
        refined: List[_Panel] = []
        for p in panels:
            if p.err > share and p.depth < MAX_DEPTH:
                mid = 0.5 * (p.lo + p.hi)
                for child in (_Panel(p.kind, p.lo, mid, p.depth + 1), _Panel(p.kind, mid, p.hi, p.depth + 1)):
                    used += estimate(child)
                    refined.append(child)
            else:
                refined.append(p)
        panels = refined
        logger.debug("keyhole refinement: %d panels, %d evaluations, err=%.3e", len(panels), used, err)
        if used > max_nodes:
            raise ConvergenceError(f"keyhole quadrature exceeded the node budget of {max_nodes}")
    return value, err + contour.tail_estimate + ROUNDING * mass, used


def quadrature(
    contour: ContourSpec,
    integrand: Integrand,
    tol: Optional[float] = None,
    max_nodes: Optional[int] = None,
) -> Tuple[complex, float, int]:
    """
    (1/2 pi i) times the integral of a vectorized integrand along the contour.

    Returns (value, err_estimate, evaluations). The circle doubles its
    trapezoid rule; the keyhole bisects Gauss-Legendre panels adaptively.
    """
    tol = config.QUAD_TOL if tol is None else tol
    max_nodes = config.NODE_BUDGET if max_nodes is None else max_nodes
    if contour.geometry == "closed-circle":
        return _trapezoid(contour, integrand, tol, max_nodes)
    return _adaptive(contour, integrand, tol, max_nodes)
