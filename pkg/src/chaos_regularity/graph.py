"""Define the batch pipeline graph.

``load_inputs`` reads the JSON input, a conditional edge routes to the
command node and ``finalize_results`` renders and writes the result once.
Library errors are mapped to exit codes at the node boundary.
"""

import logging
from typing import Any, Callable, Dict, Optional

from langchain_core.runnables import RunnableConfig
from langgraph.graph import StateGraph

from chaos_regularity import tools
from chaos_regularity.configuration import Configuration
from chaos_regularity.errors import (
    AccuracyError,
    ConsistencyError,
    DomainError,
    InputError,
)
from chaos_regularity.state import InputState, OutputState, State
from chaos_regularity.utils import emit, read_json, rows_to_csv, to_json_text

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_INPUT = 2
EXIT_CONSISTENCY = 3


def _failure(exc: Exception) -> int:
    if isinstance(exc, ConsistencyError):
        logger.error("internal consistency failure: %s", exc)
        return EXIT_CONSISTENCY
    if isinstance(exc, AccuracyError):
        logger.error("accuracy target missed: %s", exc)
        return EXIT_VERIFICATION
    logger.error("%s", exc)
    return EXIT_INPUT


async def load_inputs(
    state: State, *, config: Optional[RunnableConfig] = None
) -> Dict[str, Any]:
    """Validate the command and read its JSON input."""
    if state.command not in tools.COMMANDS:
        logger.error("unknown command %r", state.command)
        return {"exit_code": EXIT_INPUT, "processing_stage": "failed"}
    if state.input_path is None:
        if state.command not in tools.INPUT_OPTIONAL:
            logger.error("%s needs --input", state.command)
            return {"exit_code": EXIT_INPUT, "processing_stage": "failed"}
        return {"processing_stage": "inputs_loaded"}
    try:
        payload = read_json(state.input_path)
    except InputError as exc:
        return {"exit_code": _failure(exc), "processing_stage": "failed"}
    logger.debug("loaded %s for %s", state.input_path, state.command)
    return {"payload": payload, "processing_stage": "inputs_loaded"}


def route_command(state: State) -> str:
    """Send a loaded run to its command node, a failed one straight to the end."""
    if state.processing_stage == "failed":
        return "finalize_results"
    return state.command


def _command_node(command: str) -> Callable[..., Any]:
    runner = tools.COMMANDS[command]

    async def node(state: State, *, config: Optional[RunnableConfig] = None) -> Dict[str, Any]:
        try:
            configuration = Configuration.from_runnable_config(config)
            result = runner(state.payload, configuration)
        except (InputError, DomainError, ConsistencyError, AccuracyError) as exc:
            return {"exit_code": _failure(exc), "processing_stage": "failed"}
        rows = None
        if result.rows is not None:
            rows = [{c: row.get(c) for c in result.columns} for row in result.rows]
        return {
            "document": result.document,
            "rows": rows,
            "exit_code": result.exit_code,
            "processing_stage": f"{command}_complete",
        }

    node.__name__ = f"run_{command.replace('-', '_')}"
    return node


async def finalize_results(
    state: State, *, config: Optional[RunnableConfig] = None
) -> Dict[str, Any]:
    """Render the result and write it once."""
    if state.rows is not None:
        text: Optional[str] = rows_to_csv(state.rows)
    elif state.document is not None:
        text = to_json_text(state.document)
    else:
        text = None
    if text is not None:
        try:
            emit(text, state.output_path)
        except OSError as exc:
            logger.error("cannot write %s: %s", state.output_path, exc)
            return {"exit_code": EXIT_INPUT, "output": text, "document": state.document}
    return {
        "exit_code": state.exit_code,
        "document": state.document if state.document is not None else state.rows,
        "output": text,
    }


# Create the graph
workflow = StateGraph(
    State, input=InputState, output=OutputState, config_schema=Configuration
)

# Add nodes
workflow.add_node("load_inputs", load_inputs)
workflow.add_node("finalize_results", finalize_results)
for _command in tools.COMMANDS:
    workflow.add_node(_command, _command_node(_command))
    workflow.add_edge(_command, "finalize_results")

# Add edges
workflow.add_edge("__start__", "load_inputs")
workflow.add_conditional_edges(
    "load_inputs",
    route_command,
    {**{c: c for c in tools.COMMANDS}, "finalize_results": "finalize_results"},
)
workflow.add_edge("finalize_results", "__end__")

# Compile the graph
graph = workflow.compile()
graph.name = "ChaosRegularity"
