"""Binary field snapshots and checkpoints.

A snapshot is a little-endian header followed by the float64 payload in ``(component, x1, x2, x3)`` order. Complex
payloads are stored with real and imaginary parts interleaved. Horizontal fields are written with ``nv = 1`` and
``ell = 0``.
"""

from __future__ import annotations

import csv
import json
import logging
from enum import IntEnum
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from .constants import SNAPSHOT_MAGIC, SNAPSHOT_VERSION
from .errors import SnapshotFormatError
from .geometry import Field2D, Field3D, HorizontalGrid, SlabGeometry

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping

    from pydantic import BaseModel

logger = logging.getLogger(__name__)

HEADER = np.dtype([
    ("magic", "S4"),
    ("version", "<u2"),
    ("components", "<u2"),
    ("nh1", "<u4"),
    ("nh2", "<u4"),
    ("nv", "<u4"),
    ("horizontal_period", "<f8"),
    ("ell", "<f8"),
    ("representation", "u1"),
])

CHECKPOINT_METADATA = "checkpoint.json"


class Representation(IntEnum):
    """Which representation a snapshot payload holds."""

    PHYSICAL = 0
    SPECTRAL = 1


def save_field(
    field: Field2D | Field3D,
    path: Path,
    representation: Representation = Representation.PHYSICAL,
) -> None:
    """Write a field to ``path``.

    Args:
        field: The field to write.
        path: Target file.
        representation: Physical values, or the spectrum (horizontal Fourier times vertical Chebyshev for slab
            fields).
    """
    if isinstance(field, Field3D):
        geometry = field.geometry
        nv, ell, period = geometry.nv, geometry.ell, geometry.horizontal_period
        values = field.physical if representation == Representation.PHYSICAL else field.spectral
    else:
        nv, ell, period = 1, 0.0, field.grid.horizontal_period
        values = field.physical if representation == Representation.PHYSICAL else field.spectral
    nh = field.physical.shape[1]
    header = np.array(
        [(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, field.components, nh, nh, nv, period, ell, representation)],
        dtype=HEADER,
    )
    payload = np.ascontiguousarray(values)
    if np.iscomplexobj(payload):
        payload = payload.view(np.float64)
    with path.open("wb") as stream:
        stream.write(header.tobytes())
        stream.write(payload.astype("<f8", copy=False).tobytes())
    logger.debug(
        "snapshot written path=%s components=%d representation=%s", path, field.components, representation.name
    )


def load_field(path: Path) -> Field2D | Field3D:
    """Read a field written by :func:`save_field`.

    Returns:
        Field2D | Field3D: The field; slab fields carry their geometry from the header.

    Raises:
        SnapshotFormatError: If the header is malformed or the payload has the wrong size.
    """
    raw = path.read_bytes()
    if len(raw) < HEADER.itemsize:
        msg = f"{path} is too short for a snapshot header"
        raise SnapshotFormatError(msg)
    header = np.frombuffer(raw[: HEADER.itemsize], dtype=HEADER)[0]
    if bytes(header["magic"]) != SNAPSHOT_MAGIC:
        msg = f"{path} has magic {bytes(header['magic'])!r}, expected {SNAPSHOT_MAGIC!r}"
        raise SnapshotFormatError(msg)
    if int(header["version"]) != SNAPSHOT_VERSION:
        msg = f"{path} has unsupported version {int(header['version'])}"
        raise SnapshotFormatError(msg)
    try:
        representation = Representation(int(header["representation"]))
    except ValueError as error:
        msg = f"{path} has unknown representation tag {int(header['representation'])}"
        raise SnapshotFormatError(msg) from error
    components, nh, nv = int(header["components"]), int(header["nh1"]), int(header["nv"])
    if int(header["nh2"]) != nh:
        msg = f"{path} holds a non-square grid"
        raise SnapshotFormatError(msg)
    period, ell = float(header["horizontal_period"]), float(header["ell"])
    payload = np.frombuffer(raw[HEADER.itemsize :], dtype="<f8")

    shape: tuple[int, ...] = (components, nh, nh) if nv == 1 else (components, nh, nh, nv)
    if representation == Representation.SPECTRAL:
        shape = (*shape[:2], nh // 2 + 1, *shape[3:])
        expected = 2 * int(np.prod(shape))
    else:
        expected = int(np.prod(shape))
    if payload.size != expected:
        msg = f"{path} holds {payload.size} values, expected {expected}"
        raise SnapshotFormatError(msg)
    values = payload.view(np.complex128) if representation == Representation.SPECTRAL else payload
    values = values.reshape(shape)

    if nv == 1:
        grid = HorizontalGrid(period, nh)
        if representation == Representation.SPECTRAL:
            return Field2D(grid, spectral=values)
        return Field2D(grid, values)
    geometry = SlabGeometry(period, nh, nv, ell)
    if representation == Representation.SPECTRAL:
        return Field3D.from_spectral(geometry, values)
    return Field3D(geometry, values)


def write_checkpoint(directory: Path, fields: Mapping[str, Field2D | Field3D], metadata: Mapping[str, Any]) -> None:
    """Write one snapshot per field plus ``checkpoint.json`` into ``directory``.

    Args:
        directory: Target directory, created when missing.
        fields: Field name to field; each is stored as ``<name>.eksl``.
        metadata: JSON-serializable description of the state, e.g. regime and time.
    """
    directory.mkdir(parents=True, exist_ok=True)
    for name, field in fields.items():
        save_field(field, directory / f"{name}.eksl")
    document = {"fields": sorted(fields), **metadata}
    (directory / CHECKPOINT_METADATA).write_text(json.dumps(document, indent=2), encoding="utf-8")
    logger.info("checkpoint written directory=%s fields=%s", directory, ",".join(sorted(fields)))


def read_checkpoint(directory: Path) -> tuple[dict[str, Field2D | Field3D], dict[str, Any]]:
    """Read a checkpoint written by :func:`write_checkpoint`.

    Returns:
        tuple: The fields by name and the metadata.

    Raises:
        SnapshotFormatError: If the metadata file is missing.
    """
    metadata_path = directory / CHECKPOINT_METADATA
    if not metadata_path.is_file():
        msg = f"no {CHECKPOINT_METADATA} in {directory}"
        raise SnapshotFormatError(msg)
    metadata: dict[str, Any] = json.loads(metadata_path.read_text(encoding="utf-8"))
    fields = {name: load_field(directory / f"{name}.eksl") for name in metadata.pop("fields")}
    return fields, metadata


def write_csv(path: Path, rows: Iterable[BaseModel]) -> None:
    """Write model rows as CSV, with the field names as header.

    Args:
        path: Target file; parent directories are created.
        rows: Rows of one model type.
    """
    materialized = list(rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as stream:
        if not materialized:
            return
        writer = csv.DictWriter(stream, fieldnames=list(type(materialized[0]).model_fields))
        writer.writeheader()
        writer.writerows(row.model_dump() for row in materialized)
    logger.debug("csv written path=%s rows=%d", path, len(materialized))
