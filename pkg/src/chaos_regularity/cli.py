"""Command line front end: ``chaos-regularity <command> [options]``.

Every option is forwarded to the graph as a ``configurable`` override of
:class:`~chaos_regularity.configuration.Configuration`; options left out fall
back to ``CHAOS_REGULARITY_*`` environment variables (a ``.env`` file is
honoured) and then to the defaults.
"""

from __future__ import annotations

import argparse
import asyncio
import logging
from typing import Any, Optional, Sequence

from dotenv import load_dotenv

from chaos_regularity.graph import EXIT_INPUT, graph
from chaos_regularity.tools import COMMANDS, EVALUATORS
from chaos_regularity.utils import configure_logging

logger = logging.getLogger(__name__)

HELP = {
    "classify": "Regularity verdict of a chaos profile (JSON).",
    "curve": "Bargmann-Segal norm and lambda-criteria on a grid (CSV).",
    "mc-verify": "Monte Carlo checks under nu against closed forms (CSV).",
    "donsker": "Donsker's delta: threshold, closed form vs quadrature (CSV).",
    "silt": "Self-intersection local time criteria for fBm (CSV).",
    "gauss-kernel": "Gauss kernel determinant, norm curve and regularity (CSV).",
    "oracle": "Fractional-calculus quadrature vs closed forms (CSV).",
}

# option -> (configuration field, type)
OVERRIDES: dict[str, tuple[str, type]] = {
    "--seed": ("seed", int),
    "--samples": ("samples", int),
    "--mc-blocks": ("mc_blocks", int),
    "--grid": ("grid", str),
    "--tol": ("tol", float),
    "--quad-tol": ("quad_tol", float),
    "--mesh": ("mesh", str),
    "--refinement-rtol": ("refinement_rtol", float),
    "--alphas": ("alphas", str),
    "--betas": ("betas", str),
    "--max-moment": ("max_moment", int),
    "--se-gate": ("se_gate", float),
    "--evaluator": ("evaluator", str),
    "--truncation": ("truncation", int),
    "--lam": ("lam", float),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", dest="input_path", help="JSON profile or model spec")
    common.add_argument("--output", dest="output_path", help="result file (default stdout)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug diagnostics on stderr")
    for option, (dest, kind) in OVERRIDES.items():
        extra: dict[str, Any] = {}
        if option == "--evaluator":
            extra["choices"] = EVALUATORS
        common.add_argument(option, dest=dest, type=kind, default=argparse.SUPPRESS, **extra)

    parser = argparse.ArgumentParser(
        prog="chaos-regularity",
        description="Classify Malliavin-Sobolev regularity of Wiener functionals.",
        epilog="Negative lists need the = form, e.g. --alphas=-2.5,-1.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common], help=HELP[command])
    return parser


async def _run(command: str, input_path: Optional[str], output_path: Optional[str],
               configurable: dict[str, Any]) -> int:
    result = await graph.ainvoke(
        {"command": command, "input_path": input_path, "output_path": output_path},
        {"configurable": configurable},
    )
    return int(result["exit_code"])


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code."""
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    configure_logging(args.verbose)
    configurable = {
        dest: getattr(args, dest) for dest, _ in OVERRIDES.values() if hasattr(args, dest)
    }
    logger.debug("command=%s overrides=%s", args.command, configurable)
    return asyncio.run(_run(args.command, args.input_path, args.output_path, configurable))


def console_main() -> None:
    raise SystemExit(main())
