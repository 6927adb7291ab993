"""Command line entry point: tentwave {mesh,solve,ctcs,stability,verify,converge,serve}"""

import argparse
import copy
import json
import sys
import uuid
from pathlib import Path

from loguru import logger

from src.tentwave import __version__
from src.tentwave.config import config_service
from src.tentwave.context import ctx_command, ctx_run_id
from src.tentwave.logging import setup_logger
from src.tentwave.services import run_service
from src.tentwave.services.output_writer import OutputBundle
from src.tentwave.services.run_config import RunConfig, read_document
from src.tentwave.utils.constants import DEFAULT_THETA_COUNT, EXIT_OK
from src.tentwave.utils.error_handlers import handle_cli_errors


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got '{text}'") from e


def _load(args: argparse.Namespace) -> tuple[RunConfig, dict]:
    """Validated config with command line overrides applied; the raw document stays as given"""
    raw = read_document(args.config)
    document = copy.deepcopy(raw)
    output = document.setdefault("output", {})
    if getattr(args, "snapshots", None) is not None:
        output["snapshots"] = args.snapshots
    if getattr(args, "out_prefix", None):
        output["prefix"] = args.out_prefix
    if getattr(args, "out_dir", None):
        output["directory"] = args.out_dir
    if getattr(args, "nodal", False):
        output["write_nodal"] = True
    return RunConfig.model_validate(document), raw


def _finish(bundle: OutputBundle) -> int:
    for path in bundle.write():
        print(path)
    return EXIT_OK


@handle_cli_errors("mesh")
def cmd_mesh(args: argparse.Namespace) -> int:
    config, raw = _load(args)
    return _finish(run_service.run_mesh(config, raw))


@handle_cli_errors("solve")
def cmd_solve(args: argparse.Namespace) -> int:
    config, raw = _load(args)
    return _finish(run_service.run_solve(config, raw))


@handle_cli_errors("ctcs")
def cmd_ctcs(args: argparse.Namespace) -> int:
    config, raw = _load(args)
    return _finish(run_service.run_ctcs(config, raw))


@handle_cli_errors("stability")
def cmd_stability(args: argparse.Namespace) -> int:
    bundle = run_service.run_stability(args.ac, args.thetas, args.out_prefix, args.out_dir, args.blowup_steps)
    return _finish(bundle)


@handle_cli_errors("verify")
def cmd_verify(args: argparse.Namespace) -> int:
    report = run_service.run_verify(args.suite)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps({"suite": args.suite, "version": __version__, "report": report}, indent=2))
    print(out)
    return EXIT_OK


@handle_cli_errors("converge")
def cmd_converge(args: argparse.Namespace) -> int:
    bundle = run_service.run_converge(args.scheme, args.h, args.k_ratio, args.t_eval, args.out_prefix, args.out_dir)
    return _finish(bundle)


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("src.tentwave.main:app", host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def _add_config_command(subparsers, name: str, handler, help_text: str, snapshots: bool = False):
    parser = subparsers.add_parser(name, help=help_text)
    parser.add_argument("--config", required=True, help="run configuration (.json or .toml)")
    parser.add_argument("--out-prefix", dest="out_prefix", default=None)
    parser.add_argument("--out-dir", dest="out_dir", default=None)
    if snapshots:
        parser.add_argument("--snapshots", type=_float_list, default=None, help="comma separated times")
        parser.add_argument("--nodal", action="store_true", help="also write the full nodal history")
    parser.set_defaults(handler=handler)
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tentwave", description="Tent pitching solver for the 1D wave equation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    _add_config_command(subparsers, "mesh", cmd_mesh, "pitch a tent mesh and export it")
    _add_config_command(subparsers, "solve", cmd_solve, "march the tent scheme", snapshots=True)
    _add_config_command(subparsers, "ctcs", cmd_ctcs, "run the CTCS reference scheme", snapshots=True)

    stability = subparsers.add_parser("stability", help="von Neumann sweep of the uniform grid scheme")
    stability.add_argument("--ac", type=float, required=True, help="Courant number a*c")
    stability.add_argument("--thetas", type=int, default=DEFAULT_THETA_COUNT)
    stability.add_argument("--blowup-steps", dest="blowup_steps", type=int, default=200)
    stability.add_argument("--out-prefix", dest="out_prefix", default="stability")
    stability.add_argument("--out-dir", dest="out_dir", default=".")
    stability.set_defaults(handler=cmd_stability)

    verify = subparsers.add_parser("verify", help="trace, integration by parts and convergence checks")
    verify.add_argument("--suite", choices=["traces", "ibp", "convergence"], required=True)
    verify.add_argument("--out", default="report.json")
    verify.set_defaults(handler=cmd_verify)

    converge = subparsers.add_parser("converge", help="h refinement study of the pulse problem")
    converge.add_argument("--scheme", choices=["tp", "ctcs"], default="tp")
    converge.add_argument("--h", type=_float_list, default=None, help="comma separated mesh sizes")
    converge.add_argument("--k-ratio", dest="k_ratio", type=float, default=0.9)
    converge.add_argument("--t-eval", dest="t_eval", type=float, default=0.5)
    converge.add_argument("--out-prefix", dest="out_prefix", default="run")
    converge.add_argument("--out-dir", dest="out_dir", default=".")
    converge.set_defaults(handler=cmd_converge)

    serve = subparsers.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default=config_service.api_host)
    serve.add_argument("--port", type=int, default=config_service.api_port)
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logger(config_service.env, config_service.log_json)
    ctx_command.set(args.command)
    ctx_run_id.set(uuid.uuid4().hex[:12])
    logger.debug(f"tentwave {__version__} running {args.command}")
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
