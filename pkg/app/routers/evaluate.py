# app/routers/evaluate.py
import logging
from typing import Any, Dict, Tuple

from app import config
from app.errors import DomainError, HypSpikeError, ParameterError
from app.models import CASE_SHAPES, EvalResult, ParameterVectors, SpikeArgument, Spectrum
from app.routers import (
    CASE_OPTIONS,
    METHOD_OPTIONS,
    MC_OPTIONS,
    QUAD_OPTIONS,
    SPIKE_OPTIONS,
    CommandRouter,
    JobSpec,
    Outcome,
    option,
)
from app.services.contour import QuadratureBudget, select_route
from app.services.jack_series import series_eval
from app.services.params import is_integer_valued
from app.services.rank_one import evaluate
from app.services.sphere_mc import sphere_average

logger = logging.getLogger(__name__)

router = CommandRouter()

SHAPES = {case: shape for shape, case in CASE_SHAPES.items()}
KMAX_OPTION = option("--kmax", type=int, default=config.SERIES_KMAX, help="series truncation budget")


def resolve_inputs(params: Dict[str, Any]) -> Dict[str, Any]:
    """Fill r from y and the case from the parameter counts; check they agree."""
    if params.get("y") is None:
        raise ParameterError("a spectrum is required: --y or --y-file")
    if params.get("r") is None:
        params["r"] = len(params["y"])
    a, b = tuple(params["a"]), tuple(params["b"])
    case = params.get("case")
    if case is None:
        params["case"] = CASE_SHAPES.get((len(a), len(b)), "generic-series")
    elif (len(a), len(b)) != SHAPES[case]:
        p, q = SHAPES[case]
        raise ParameterError(f"case {case} takes {p} numerator and {q} denominator parameters, got {len(a)} and {len(b)}")
    return params


def build_inputs(params: Dict[str, Any]) -> Tuple[ParameterVectors, SpikeArgument, Spectrum]:
    return (
        ParameterVectors(a=params["a"], b=params["b"]),
        SpikeArgument(x=params["x"], r=params["r"], alpha=params["alpha"]),
        Spectrum(y=params["y"]),
    )


def _budget(params: Dict[str, Any]) -> QuadratureBudget:
    return QuadratureBudget(tol=params["tol"], max_nodes=params["nodes"])


@router.command(
    "eval",
    *CASE_OPTIONS,
    *SPIKE_OPTIONS,
    *QUAD_OPTIONS,
    *MC_OPTIONS,
    *METHOD_OPTIONS,
    help="evaluate the rank-one function (contour route picked from r/alpha)",
    resolve=resolve_inputs,
)
def eval_command(job: JobSpec) -> Outcome:
    params, spike, y = build_inputs(job.params)
    method = job.params["method"]
    if method == "series":
        result = series_eval(params, spike, y, tol=job.params["tol"])
    elif method == "sphere":
        result = sphere_average(params, spike, y, job.params["samples"], job.params["seed"]).to_result()
    else:
        route = job.params["route"]
        result = evaluate(params, spike, y, "auto" if route == "auto" else f"contour-{route}", budget=_budget(job.params))
    return Outcome(result=result)


@router.command(
    "oracle",
    *CASE_OPTIONS,
    *SPIKE_OPTIONS,
    *QUAD_OPTIONS,
    KMAX_OPTION,
    help="sum the Jack series directly",
    resolve=resolve_inputs,
)
def oracle_command(job: JobSpec) -> Outcome:
    params, spike, y = build_inputs(job.params)
    return Outcome(result=series_eval(params, spike, y, tol=job.params["tol"], Kmax=job.params["kmax"]))


def admissible_routes(spike: SpikeArgument) -> Tuple[str, ...]:
    if is_integer_valued(spike.r / spike.alpha):
        return ("i",)
    if spike.alpha == 2:
        return ("ii", "iii")
    return ("ii",)


def _summary(result: EvalResult) -> Dict[str, Any]:
    return {
        "value_re": result.value.real,
        "value_im": result.value.imag,
        "err_estimate": result.err_estimate,
        "effort": result.effort,
    }


@router.command(
    "compare",
    *CASE_OPTIONS,
    *SPIKE_OPTIONS,
    *QUAD_OPTIONS,
    *MC_OPTIONS,
    *METHOD_OPTIONS,
    KMAX_OPTION,
    help="run every admissible contour route and the oracles, report pairwise gaps",
    resolve=resolve_inputs,
)
def compare_command(job: JobSpec) -> Outcome:
    params, spike, y = build_inputs(job.params)
    budget = _budget(job.params)
    results: Dict[str, EvalResult] = {}
    failures: Dict[str, HypSpikeError] = {}

    def attempt(name: str, compute) -> None:
        try:
            results[name] = compute()
        except HypSpikeError as e:
            logger.warning("%s skipped: %s", name, e.detail)
            failures[name] = e

    for part in admissible_routes(spike):
        attempt(f"contour-{part}", lambda part=part: evaluate(params, spike, y, f"contour-{part}", budget=budget))
    attempt("series", lambda: series_eval(params, spike, y, tol=min(job.params["tol"], config.KERNEL_TOL), Kmax=job.params["kmax"]))
    if job.params["method"] == "sphere":
        if spike.alpha != 2:
            raise DomainError("the sphere oracle needs alpha = 2")
        attempt("sphere-mc", lambda: sphere_average(params, spike, y, job.params["samples"], job.params["seed"]).to_result())

    primary = f"contour-{select_route(spike, params)}"
    if primary not in results:
        contours = [name for name in results if name.startswith("contour-")]
        if not contours:
            raise next(e for name, e in failures.items() if name.startswith("contour-"))
        primary = contours[0]

    names = list(results)
    gaps: Dict[str, float] = {}
    for i, left in enumerate(names):
        for right in names[i + 1 :]:
            scale = max(abs(results[right].value), 1e-300)
            gaps[f"{left}|{right}"] = abs(results[left].value - results[right].value) / scale
    return Outcome(
        result=results[primary],
        extra={
            "results": {name: _summary(r) for name, r in results.items()},
            "failures": {name: e.to_dict() for name, e in failures.items()},
            "gaps": gaps,
        },
    )
