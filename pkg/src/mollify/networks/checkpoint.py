"""
This module reads and writes model checkpoints.

A checkpoint is a UTF-8 JSON document with sorted keys:

    {
        "anneal": {...} or null,
        "format": "mollify-checkpoint",
        "model": {...},
        "parameters": {"<name>": {"data": [...], "shape": [...]}, ...},
        "version": 1
    }

`model` is the structure returned by the model's `describe()`; parameter data is
flattened in row-major order. Floats are written in their shortest round-trip form so
loading a checkpoint restores every parameter bit for bit.
"""

import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

try:
    from typing import Protocol  # Python >= 3.8 pylint: disable=ungrouped-imports
except ImportError:
    from typing_extensions import Protocol  # Python < 3.8

from mollify.annealing.schedule import AnnealState
from mollify.exceptions.networks import CheckpointError
from mollify.exceptions.annealing import AnnealStateError

__all__ = [
    "CHECKPOINT_FORMAT",
    "CHECKPOINT_VERSION",
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
]

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "mollify-checkpoint"
CHECKPOINT_VERSION = 1


class Checkpointable(Protocol):
    def describe(self) -> Dict[str, Any]: ...

    def named_parameters(self) -> Dict[str, np.ndarray]: ...


@dataclass
class Checkpoint:
    """
    Contents of a loaded checkpoint.
    """

    model: Dict[str, Any]
    parameters: Dict[str, np.ndarray]
    anneal: Optional[AnnealState] = None


def _encode(model: Checkpointable, anneal: Optional[AnnealState]) -> str:
    parameters = {
        name: {"shape": list(value.shape), "data": value.reshape(-1).tolist()}
        for name, value in model.named_parameters().items()
    }
    document = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "model": model.describe(),
        "parameters": parameters,
        "anneal": anneal.to_dict() if anneal is not None else None,
    }
    try:
        return json.dumps(document, sort_keys=True, allow_nan=False, indent=1) + "\n"
    except ValueError:
        raise CheckpointError(
            "cannot write checkpoint; model holds non-finite values. "
        ) from None


def save_checkpoint(
    path: Union[str, Path],
    model: Checkpointable,
    anneal: Optional[AnnealState] = None,
) -> Path:
    """
    Write `model` and `anneal` to `path`. The file is written to a temporary file in
    the same directory and moved into place, so a crash never leaves a truncated
    checkpoint behind.

    Raises `CheckpointError` if the model holds non-finite values or the file cannot
    be written.
    """
    path = Path(path)
    text = _encode(model, anneal)
    try:
        handle, temporary = tempfile.mkstemp(
            dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
        )
        with os.fdopen(handle, "w", encoding="utf-8", newline="\n") as stream:
            stream.write(text)
        os.replace(temporary, path)
    except OSError as exc:
        raise CheckpointError(f"cannot write checkpoint {path}; {exc}. ") from None
    logger.info("checkpoint written to %s", path)
    return path


def _decode_parameter(name: str, entry: Dict[str, Any]) -> np.ndarray:
    try:
        data = np.array(entry["data"], dtype=np.float64)
        return data.reshape(tuple(entry["shape"]))
    except (KeyError, TypeError, ValueError):
        raise CheckpointError(
            f"cannot read checkpoint; parameter {name!r} is malformed. "
        ) from None


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    Read a checkpoint written by `save_checkpoint`.

    Raises `CheckpointError` if the file cannot be read, is not a mollify checkpoint
    or has an unsupported version.
    """
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}; {exc}. ") from None
    if not isinstance(document, dict) or document.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(
            f"cannot read checkpoint {path}; not a {CHECKPOINT_FORMAT} file. "
        )
    if document.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"cannot read checkpoint {path}; unsupported version "
            f"{document.get('version')!r}. "
        )
    parameters = {
        name: _decode_parameter(name, entry)
        for name, entry in document.get("parameters", {}).items()
    }
    anneal = None
    if document.get("anneal") is not None:
        try:
            anneal = AnnealState.from_dict(document["anneal"])
        except AnnealStateError as exc:
            raise CheckpointError(f"cannot read checkpoint {path}; {exc}") from None
    return Checkpoint(document.get("model", {}), parameters, anneal)
