"""
CSV and JSON export utility.

Tables are written through pandas with the shortest float representation that
round-trips a float64, a fixed line terminator and '#'-prefixed metadata
lines, so identical inputs always produce identical bytes.
"""

import json
from pathlib import Path

import numpy as np
import pandas as pd

from src.core import config


def _metadata_lines(metadata: dict | None) -> str:
    if not metadata:
        return ""
    return "".join(
        f"{config.CSV_COMMENT} {key}={metadata[key]}{config.CSV_LINE_TERMINATOR}"
        for key in sorted(metadata)
    )


def csv_text(df: pd.DataFrame, metadata: dict | None = None) -> str:
    """
    Renders a table as CSV text followed by its metadata comments.

    Args:
        df (pd.DataFrame): The table; its columns become the header row.
        metadata (dict | None): Key/value pairs appended as ``# key=value``.

    Returns:
        str: The CSV document.
    """
    body = df.to_csv(
        index=False,
        sep=config.CSV_SEPARATOR,
        lineterminator=config.CSV_LINE_TERMINATOR,
    )
    return body + _metadata_lines(metadata)


def write_csv(df: pd.DataFrame, path, metadata: dict | None = None) -> Path:
    """Writes ``csv_text(df, metadata)`` to ``path`` and returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(csv_text(df, metadata))
    return path


def read_csv(path) -> pd.DataFrame:
    """Reads a CSV written by write_csv, skipping metadata comments."""
    return pd.read_csv(path, sep=config.CSV_SEPARATOR, comment=config.CSV_COMMENT)


def read_metadata(path) -> dict[str, str]:
    """Collects the ``# key=value`` lines of a CSV written by write_csv."""
    found = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.startswith(config.CSV_COMMENT):
                key, _, value = line[len(config.CSV_COMMENT) :].strip().partition("=")
                found[key] = value
    return found


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    return value


def json_text(summary: dict) -> str:
    """Summary document with sorted keys and a trailing newline."""
    return json.dumps(_plain(summary), sort_keys=True, indent=2) + "\n"


def write_json(summary: dict, path) -> Path:
    """Writes ``json_text(summary)`` to ``path`` and returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(json_text(summary))
    return path
