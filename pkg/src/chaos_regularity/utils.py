"""Utility functions for reading inputs and writing results."""

from __future__ import annotations

import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from chaos_regularity.errors import InputError

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(verbose: bool = False) -> None:
    """Send diagnostics to stderr; ``verbose`` lowers the threshold to DEBUG."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def parse_grid(text: str) -> tuple[float, ...]:
    """Parse ``start:stop:count`` into ``count`` evenly spaced points.

    Raises:
        InputError: The text is not three fields or ``count < 1``.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError(f"grid must be start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InputError(f"grid must be start:stop:count, got {text!r}") from exc
    if count < 1 or not (math.isfinite(start) and math.isfinite(stop)):
        raise InputError(f"grid needs finite bounds and count >= 1, got {text!r}")
    return tuple(float(v) for v in np.linspace(start, stop, count))


def parse_float_list(text: str) -> tuple[float, ...]:
    """Parse a comma separated list of numbers; the empty string gives ``()``."""
    items = [item.strip() for item in text.split(",") if item.strip()]
    try:
        return tuple(float(item) for item in items)
    except ValueError as exc:
        raise InputError(f"expected comma separated numbers, got {text!r}") from exc


def read_json(path: Union[str, Path]) -> Any:
    """Load a JSON document, mapping every failure to InputError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def to_json_text(document: Union[str, Mapping[str, Any]]) -> str:
    """Serialize a result document; pre-rendered text is passed through."""
    if isinstance(document, str):
        text = document
    else:
        text = json.dumps(document, indent=2, default=_json_default)
    return text if text.endswith("\n") else text + "\n"


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def rows_to_csv(rows: Sequence[Mapping[str, Any]], columns: Optional[Iterable[str]] = None) -> str:
    """Render rows with 17 significant digits; column order follows the first row."""
    frame = pd.DataFrame.from_records(list(rows), columns=list(columns) if columns else None)
    return frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def emit(text: str, output_path: Optional[str]) -> None:
    """Write the finished output once, to ``output_path`` or stdout."""
    if output_path:
        Path(output_path).write_text(text, encoding="utf-8")
        logger.debug("wrote %d bytes to %s", len(text), output_path)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()
