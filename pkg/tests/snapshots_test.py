"""Tests of the binary snapshot format, checkpoints and CSV logs."""

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from ekman_slab.errors import SnapshotFormatError
from ekman_slab.geometry import Field2D, Field3D, HorizontalGrid, SlabGeometry
from ekman_slab.models import LedgerRow
from ekman_slab.snapshots import HEADER, Representation, load_field, read_checkpoint, save_field, write_csv


def _layered(geometry: SlabGeometry) -> Field3D:
    return Field3D.from_function(geometry, lambda x1, x2, x3: np.sin(x1) * np.cos(2 * x2) * (1 + x3**2))


def test_header_is_packed() -> None:
    """The header occupies 37 bytes without padding."""
    assert HEADER.itemsize == 37


@pytest.mark.parametrize("representation", list(Representation))
def test_slab_field_keeps_its_geometry(geometry: SlabGeometry, tmp_path: Path, representation: Representation) -> None:
    """Either representation reloads with the geometry of the header."""
    field = _layered(geometry)
    save_field(field, tmp_path / "rho.eksl", representation)
    loaded = load_field(tmp_path / "rho.eksl")
    assert isinstance(loaded, Field3D)
    assert loaded.geometry == geometry
    assert np.allclose(loaded.physical, field.physical, atol=1e-12)


def test_horizontal_field_is_stored_flat(grid: HorizontalGrid, tmp_path: Path) -> None:
    """Horizontal fields are written with one vertical node and no thickness."""
    field = Field2D.from_function(grid, lambda x1, _x2: np.cos(x1), lambda _x1, x2: np.sin(x2))
    save_field(field, tmp_path / "u.eksl")
    header = np.frombuffer((tmp_path / "u.eksl").read_bytes()[: HEADER.itemsize], dtype=HEADER)[0]
    assert (int(header["nv"]), float(header["ell"]), int(header["components"])) == (1, 0.0, 2)
    loaded = load_field(tmp_path / "u.eksl")
    assert isinstance(loaded, Field2D)
    assert np.array_equal(loaded.physical, field.physical)


@pytest.mark.parametrize(
    ("mangle", "reason"),
    [
        (lambda raw: raw[:10], "too short"),
        (lambda raw: b"XXXX" + raw[4:], "magic"),
        (lambda raw: raw[:-8], "values"),
    ],
    ids=["truncated_header", "bad_magic", "short_payload"],
)
def test_malformed_snapshots_are_refused(
    grid: HorizontalGrid, tmp_path: Path, mangle: Callable[[bytes], bytes], reason: str
) -> None:
    """Malformed files raise with the reason."""
    path = tmp_path / "f.eksl"
    save_field(Field2D.from_function(grid, lambda x1, _x2: np.cos(x1)), path)
    path.write_bytes(mangle(path.read_bytes()))
    with pytest.raises(SnapshotFormatError, match=reason):
        load_field(path)


def test_checkpoint_needs_metadata(tmp_path: Path) -> None:
    """A directory without checkpoint.json is not a checkpoint."""
    with pytest.raises(SnapshotFormatError):
        read_checkpoint(tmp_path)


def test_csv_rows(tmp_path: Path) -> None:
    """Model rows become a CSV with the field names as header."""
    rows = [LedgerRow(t=0.0, kinetic=1.0, dissipation=0.0, boundary=0.0, budget_slack=1e-6)]
    write_csv(tmp_path / "logs" / "ledger.csv", rows)
    lines = (tmp_path / "logs" / "ledger.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,kinetic,dissipation,boundary,budget_slack"
    assert len(lines) == 2
