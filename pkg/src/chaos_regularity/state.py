"""State definitions.

State is the interface between the graph and the command line as well as
the data model passed between the graph's nodes.
"""

from dataclasses import dataclass, field
from typing import Any, Optional


@dataclass(kw_only=True)
class InputState:
    """Input state defines the interface between the graph and its caller."""

    command: str
    "One of classify, curve, mc-verify, donsker, silt, gauss-kernel, oracle."

    input_path: Optional[str] = field(default=None)
    "Path of the JSON input (profile or model spec); unused by mc-verify and oracle."

    output_path: Optional[str] = field(default=None)
    "Where the result is written; stdout when unset."


@dataclass(kw_only=True)
class State(InputState):
    """Data passed between nodes.

    A command node fills exactly one of ``document`` (JSON result) or
    ``rows`` (CSV result) and sets ``exit_code``.
    """

    payload: Optional[Any] = field(default=None)
    "Parsed JSON input."

    document: Optional[Any] = field(default=None)
    "JSON result: a mapping, or pre-rendered text for byte-stable round trips."

    rows: Optional[list[dict[str, Any]]] = field(default=None)
    "CSV result rows."

    output: Optional[str] = field(default=None)
    "The rendered JSON or CSV text, as written."

    exit_code: int = field(default=0)
    "0 success, 1 verification failed, 2 input or domain error, 3 consistency failure."

    processing_stage: str = field(default="start")
    "Current processing stage"


@dataclass(kw_only=True)
class OutputState:
    """The response object returned to the caller."""

    exit_code: int = 0
    document: Optional[Any] = None
    output: Optional[str] = None
