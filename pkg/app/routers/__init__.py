# app/routers/__init__.py
"""
Command surface. Router modules declare commands on a CommandRouter;
CommandLineApp.include_router mounts them as argparse subcommands and maps
failures to exit codes: 2 validation or domain, 3 convergence, 4 input files.
"""
import argparse
import logging
import sys
import time
from typing import Any, Callable, Dict, List, Literal, Optional, TextIO, Tuple

from pydantic import BaseModel, ConfigDict, ValidationError

from app import config
from app.errors import HypSpikeError, ParameterError
from app.models import EvalResult
from app.utils.serialize import parse_complex_list, parse_float_list, read_values, render_csv, render_json

logger = logging.getLogger(__name__)

Option = Tuple[Tuple[str, ...], Dict[str, Any]]
CommandName = Literal["eval", "oracle", "compare", "density", "lr", "lr-limit"]


def option(*flags: str, **kwargs: Any) -> Option:
    return flags, kwargs


# shared flag groups
CASE_OPTIONS = (
    option("--case", choices=["0F0", "0F1", "1F0", "1F1", "2F1"], default=None, help="James case of the kernel"),
    option("--a", type=parse_complex_list, default=(), help="numerator parameters, e.g. 1.5,2-0.5i"),
    option("--b", type=parse_complex_list, default=(), help="denominator parameters"),
)
SPIKE_OPTIONS = (
    option("--alpha", type=float, default=2.0, help="family index: 2 real, 1 complex"),
    option("--r", type=int, default=None, help="dimension (defaults to the length of y)"),
    option("--x", type=float, required=True, help="nonzero eigenvalue of the rank-one argument"),
    option("--y", type=parse_float_list, default=None, help="spectrum of Y, comma separated"),
    option("--y-file", default=None, help="spectrum of Y, one value per line"),
)
QUAD_OPTIONS = (
    option("--tol", type=float, default=config.QUAD_TOL, help="relative tolerance"),
    option("--nodes", type=int, default=config.NODE_BUDGET, help="integrand evaluation budget"),
)
MC_OPTIONS = (
    option("--samples", type=int, default=config.MC_SAMPLES, help="sphere Monte Carlo samples"),
    option("--seed", type=int, default=config.MC_SEED, help="Philox key for the sphere samples"),
)
METHOD_OPTIONS = (
    option("--method", choices=["contour", "series", "sphere", "auto"], default="auto"),
    option("--route", choices=["auto", "i", "ii", "iii"], default="auto", help="force a contour route"),
)
DESIGN_OPTIONS = (
    option("--p", type=int, default=None, help="dimension (defaults to the number of eigenvalues)"),
    option("--n1", type=int, required=True),
    option("--n2", type=int, required=True),
    option("--h", type=float, required=True, help="spike size, h >= 0"),
)
EIGENVALUE_OPTIONS = (
    option("--f", type=parse_float_list, default=None, help="eigenvalues of A1 A2^-1, decreasing"),
    option("--f-file", default=None, help="eigenvalues, one value per line"),
)


class JobSpec(BaseModel):
    """A fully resolved invocation: the report echoes params verbatim."""

    model_config = ConfigDict(frozen=True)

    command: CommandName
    params: Dict[str, Any]
    format: Literal["json", "csv"] = "json"
    timing: bool = False


class Outcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    result: EvalResult
    extra: Dict[str, Any] = {}


Handler = Callable[[JobSpec], Outcome]
Resolver = Callable[[Dict[str, Any]], Dict[str, Any]]


class Command:
    def __init__(self, name: str, handler: Handler, options: Tuple[Option, ...], help: str, resolve: Optional[Resolver]):
        self.name = name
        self.handler = handler
        self.options = options
        self.help = help
        self.resolve = resolve


class CommandRouter:
    def __init__(self):
        self.commands: List[Command] = []

    def command(self, name: str, *options: Option, help: str = "", resolve: Optional[Resolver] = None):
        def decorator(handler: Handler) -> Handler:
            self.commands.append(Command(name, handler, options, help, resolve))
            return handler

        return decorator


def _read_files(params: Dict[str, Any]) -> Dict[str, Any]:
    # --y-file fills y, --f-file fills f
    for key in [k for k in params if k.endswith("_file")]:
        path = params[key]
        target = key[: -len("_file")]
        if path is None:
            continue
        if params.get(target) is not None:
            raise ParameterError(f"give either --{target} or --{target}-file, not both")
        params[target] = read_values(path)
    return params


def _validation_detail(e: ValidationError) -> str:
    return "; ".join(f"{'.'.join(str(p) for p in err['loc']) or 'input'}: {err['msg']}" for err in e.errors())


class CommandLineApp:
    def __init__(self, prog: str, description: str = ""):
        self.parser = argparse.ArgumentParser(prog=prog, description=description)
        self.common = argparse.ArgumentParser(add_help=False)
        self.common.add_argument("--format", choices=["json", "csv"], default="json")
        self.common.add_argument("--log-level", default=config.LOG_LEVEL)
        self.common.add_argument("--timing", action="store_true", help="fill wall_ms in the report")
        self.subparsers = self.parser.add_subparsers(dest="command", required=True)
        self.commands: Dict[str, Command] = {}

    def include_router(self, router: CommandRouter) -> None:
        for command in router.commands:
            sub = self.subparsers.add_parser(command.name, help=command.help, parents=[self.common])
            for flags, kwargs in command.options:
                sub.add_argument(*flags, **kwargs)
            self.commands[command.name] = command

    def resolve(self, args: argparse.Namespace) -> JobSpec:
        params = {k: v for k, v in vars(args).items() if k not in ("command", "format", "log_level", "timing")}
        params = _read_files(params)
        command = self.commands[args.command]
        if command.resolve is not None:
            params = command.resolve(params)
        return JobSpec(command=args.command, params=params, format=args.format, timing=args.timing)

    def execute(self, job: JobSpec) -> Tuple[int, str]:
        """Run one job; returns (exit status, serialized report)."""
        started = time.perf_counter()
        try:
            outcome = self.commands[job.command].handler(job)
        except ValidationError as e:
            return self._failure(job.command, ParameterError(_validation_detail(e)), job.format)
        except HypSpikeError as e:
            return self._failure(job.command, e, job.format)
        except ValueError as e:
            return self._failure(job.command, ParameterError(str(e)), job.format)
        wall_ms = (time.perf_counter() - started) * 1000.0 if job.timing else None
        result = outcome.result
        report: Dict[str, Any] = {
            "command": job.command,
            "params": job.params,
            "value_re": result.value.real,
            "value_im": result.value.imag,
            "err_estimate": result.err_estimate,
            "method": result.method,
            "effort": result.effort,
            "wall_ms": wall_ms,
        }
        report.update(outcome.extra)
        return 0, self._render(report, job.format)

    def run(self, argv: Optional[List[str]] = None, out: Optional[TextIO] = None) -> int:
        out = out or sys.stdout
        args = self.parser.parse_args(argv)
        logging.basicConfig(
            stream=sys.stderr,
            level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        try:
            job = self.resolve(args)
        except ValidationError as e:
            status, text = self._failure(args.command, ParameterError(_validation_detail(e)), args.format)
        except HypSpikeError as e:
            status, text = self._failure(args.command, e, args.format)
        else:
            status, text = self.execute(job)
        out.write(text)
        return status

    def _failure(self, command: str, error: HypSpikeError, fmt: str) -> Tuple[int, str]:
        logger.error("%s failed: %s", command, error.detail)
        report = {"command": command}
        report.update(error.to_dict())
        return error.exit_code, self._render(report, fmt)

    @staticmethod
    def _render(report: Dict[str, Any], fmt: str) -> str:
        if fmt == "csv":
            return render_csv(report)
        return render_json(report) + "\n"
