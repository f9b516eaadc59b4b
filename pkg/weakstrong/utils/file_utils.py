"""
File handling utilities for the weak-to-strong simulator.

Every writer goes through a temporary file in the target directory followed by
os.replace, so an artifact is either complete or absent.
"""

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
from datetime import datetime, timezone
from typing import Any, Dict, Iterable, Optional, Sequence

logger = logging.getLogger(__name__)


def ensure_directory_exists(directory_path: str) -> None:
    """
    Ensure that a directory exists, creating it if necessary.

    Args:
        directory_path: Path to the directory
    """
    if directory_path:
        os.makedirs(directory_path, exist_ok=True)


def atomic_write_text(content: str, file_path: str) -> bool:
    """
    Write text through a temporary sibling file and rename it into place.

    Args:
        content: Text to write
        file_path: Destination path

    Returns:
        True if successful, False otherwise
    """
    directory = os.path.dirname(os.path.abspath(file_path))
    temp_path = None
    try:
        ensure_directory_exists(directory)
        fd, temp_path = tempfile.mkstemp(
            dir=directory, prefix=f".{os.path.basename(file_path)}.", suffix=".tmp"
        )
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(content)
        os.replace(temp_path, file_path)
        return True
    except Exception as e:
        logger.warning("⚠️ Error writing %s: %s", file_path, e)
        if temp_path and os.path.exists(temp_path):
            os.remove(temp_path)
        return False


def canonical_json(data: Any) -> str:
    """Deterministic JSON text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def load_json_file(file_path: str) -> Optional[Dict[str, Any]]:
    """
    Load data from a JSON file.

    Args:
        file_path: Path to the JSON file

    Returns:
        Dictionary data or None if failed
    """
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        logger.warning("⚠️ JSON file not found: %s", file_path)
        return None
    except json.JSONDecodeError as e:
        logger.warning("⚠️ Error parsing JSON file %s: %s", file_path, e)
        return None


def format_csv_value(value: Any) -> str:
    """Locale-independent cell text; floats use repr and NaN/None become empty."""
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if value != value else repr(float(value))
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """RFC 4180 text with CRLF line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_csv_value(value) for value in row])
    return buffer.getvalue()


def remove_files(paths: Iterable[str]) -> None:
    """Delete files that exist, ignoring the rest."""
    for path in paths:
        if os.path.exists(path):
            os.remove(path)
            logger.debug("Removed partial output %s", path)


def config_hash(data: Dict[str, Any], length: int = 12) -> str:
    """
    Short sha256 digest of a run configuration.

    Args:
        data: JSON-serializable configuration
        length: Number of hex digits to keep

    Returns:
        Hex digest prefix, stable across runs and platforms
    """
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:length]


def utc_timestamp() -> str:
    """Current time as an ISO 8601 UTC string."""
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def create_output_filename(base_name: str, tag: str, extension: str) -> str:
    """
    Create standardized output filename.

    Args:
        base_name: Base name for the file (e.g., "sweep")
        tag: Distinguishing suffix such as a method or panel label
        extension: File extension (with or without dot)

    Returns:
        Complete filename
    """
    if not extension.startswith("."):
        extension = "." + extension
    if not tag:
        return f"{base_name}{extension}"
    return f"{base_name}-{tag}{extension}"
