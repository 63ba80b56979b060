"""
Atomic file writes.

Every artifact is written to a temporary file in its destination directory
and then moved over the target, so readers never observe a partial file.
"""

import json
import os
import shutil
import tempfile
from pathlib import Path
from typing import Any, Iterable, Union

try:
    from errors import FileOperationError
except ImportError:
    from .errors import FileOperationError

PathLike = Union[str, Path]


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """Write bytes to path atomically, creating parent directories."""
    target = Path(path)
    temp_name = None
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(
            mode="wb", dir=target.parent, delete=False, suffix=".tmp"
        ) as f:
            temp_name = f.name
            f.write(payload)
        shutil.move(temp_name, target)
        temp_name = None
    except (OSError, IOError) as e:
        raise FileOperationError(f"Failed to write {target}: {e}") from e
    finally:
        # Clean up the temporary file on error
        if temp_name and os.path.exists(temp_name):
            os.unlink(temp_name)
    return target


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path: PathLike, data: Any) -> Path:
    """Write pretty, key-sorted JSON so identical data gives identical bytes."""
    return atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def atomic_write_jsonl(path: PathLike, records: Iterable[dict]) -> Path:
    lines = [json.dumps(record, sort_keys=True) for record in records]
    return atomic_write_text(path, "".join(line + "\n" for line in lines))
