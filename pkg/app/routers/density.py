# app/routers/density.py
from typing import Any, Dict

from app.errors import ParameterError
from app.routers import DESIGN_OPTIONS, EIGENVALUE_OPTIONS, QUAD_OPTIONS, CommandRouter, JobSpec, Outcome, option
from app.services.contour import QuadratureBudget
from app.services.density import (
    EigenvalueConfig,
    SpikeAlternative,
    TwoSampleDesign,
    joint_density,
    lr_contour,
    lr_limit,
)
from app.utils.serialize import parse_float_list

router = CommandRouter()


def _resolve_dimension(params: Dict[str, Any], key: str) -> Dict[str, Any]:
    values = params.get(key)
    if values is None:
        raise ParameterError(f"eigenvalues are required: --{key} or --{key}-file")
    if params.get("p") is None:
        params["p"] = len(values)
    elif params["p"] != len(values):
        raise ParameterError(f"--p {params['p']} but {len(values)} values of {key} were given")
    alt = SpikeAlternative(h=params["h"])
    params["tau"] = alt.tau
    return params


def resolve_eigenvalues(params: Dict[str, Any]) -> Dict[str, Any]:
    params = _resolve_dimension(params, "f")
    params["lambda"] = EigenvalueConfig(f=params["f"]).lambdas
    return params


def resolve_limit(params: Dict[str, Any]) -> Dict[str, Any]:
    return _resolve_dimension(params, "mu")


def _budget(params: Dict[str, Any]) -> QuadratureBudget:
    return QuadratureBudget(tol=params["tol"], max_nodes=params["nodes"])


@router.command(
    "density",
    *DESIGN_OPTIONS,
    *EIGENVALUE_OPTIONS,
    *QUAD_OPTIONS,
    help="joint density of the eigenvalues of A1 A2^-1 under a rank-one spike",
    resolve=resolve_eigenvalues,
)
def density_command(job: JobSpec) -> Outcome:
    params = job.params
    design = TwoSampleDesign(p=params["p"], n1=params["n1"], n2=params["n2"])
    result = joint_density(EigenvalueConfig(f=params["f"]), SpikeAlternative(h=params["h"]), design, tol=params["tol"])
    return Outcome(result=result)


@router.command(
    "lr",
    *DESIGN_OPTIONS,
    *EIGENVALUE_OPTIONS,
    *QUAD_OPTIONS,
    help="likelihood ratio of the spiked alternative against the null, contour form",
    resolve=resolve_eigenvalues,
)
def lr_command(job: JobSpec) -> Outcome:
    params = job.params
    design = TwoSampleDesign(p=params["p"], n1=params["n1"], n2=params["n2"])
    if params["h"] == 0:
        raise ParameterError("h = 0 is the null: the likelihood ratio is 1")
    return Outcome(result=lr_contour(params["tau"], params["lambda"], design, budget=_budget(params)))


@router.command(
    "lr-limit",
    option("--p", type=int, default=None, help="dimension (defaults to the number of mu values)"),
    option("--n1", type=int, required=True),
    option("--h", type=float, required=True, help="spike size, h > 0"),
    option("--mu", type=parse_float_list, default=None, help="limits n2 f_j / n1"),
    option("--mu-file", default=None, help="mu values, one per line"),
    *QUAD_OPTIONS,
    help="likelihood ratio in the n2 -> infinity limit",
    resolve=resolve_limit,
)
def lr_limit_command(job: JobSpec) -> Outcome:
    params = job.params
    if params["h"] == 0:
        raise ParameterError("h = 0 is the null: the likelihood ratio is 1")
    return Outcome(result=lr_limit(params["tau"], params["mu"], params["p"], params["n1"], budget=_budget(params)))
