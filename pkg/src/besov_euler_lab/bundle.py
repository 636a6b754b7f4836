"""Field bundles on disk: ``meta.json`` plus one raw little-endian float64 file per component.

Arrays are written in x-fastest (column-major) order.  Spectral bundles hold
the half-spectrum of the real transform with (re, im) interleaved.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import Field, GridSpec, PHYSICAL, SPECTRAL, create_grid

FORMAT_VERSION = 1
META_NAME = "meta.json"


class BundleError(ValueError):
    """Malformed or inconsistent bundle."""


def _component_name(i: int) -> str:
    return f"component_{i + 1}.f64"


def write_bundle(f: Field, path: str | Path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {
        "format_version": FORMAT_VERSION,
        "grid": f.grid.spec.as_dict(),
        "components": f.components,
        "representation": f.representation,
        "provenance": f.provenance,
        "shape": list(f.data.shape[1:]),
        "dtype": "<f8",
        "order": "x-fastest",
        "files": [_component_name(i) for i in range(f.components)],
    }
    for i in range(f.components):
        comp = np.asarray(f.data[i])
        if f.representation == SPECTRAL:
            raw = comp.ravel(order="F").astype("<c16").view("<f8")
        else:
            raw = comp.ravel(order="F").astype("<f8")
        raw.tofile(path / _component_name(i))
    (path / META_NAME).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_bundle(path: str | Path) -> Field:
    path = Path(path)
    try:
        meta = json.loads((path / META_NAME).read_text())
    except FileNotFoundError:
        raise BundleError(f"{path} has no {META_NAME}") from None
    except json.JSONDecodeError as exc:
        raise BundleError(f"{path / META_NAME}: line {exc.lineno}: {exc.msg}") from None
    try:
        return _decode(path, meta)
    except KeyError as exc:
        raise BundleError(f"{path / META_NAME}: missing key {exc.args[0]!r}") from None
    except FileNotFoundError as exc:
        raise BundleError(f"{path}: missing component file {Path(exc.filename).name}") from None


def _decode(path: Path, meta: dict) -> Field:
    if meta.get("format_version") != FORMAT_VERSION:
        raise BundleError(f"unsupported bundle format {meta.get('format_version')!r}")
    try:
        grid = create_grid(GridSpec.from_dict(meta["grid"]))
    except (TypeError, ValueError) as exc:
        raise BundleError(f"invalid grid: {exc}") from None
    rep = meta["representation"]
    if rep not in (PHYSICAL, SPECTRAL):
        raise BundleError(f"unknown representation {rep!r}")
    shape = tuple(grid.spectral_shape if rep == SPECTRAL else grid.shape)
    if tuple(meta.get("shape", shape)) != shape:
        raise BundleError(f"shape {meta['shape']} does not match grid {shape}")
    if len(meta["files"]) not in (1, 3):
        raise BundleError(f"expected 1 or 3 component files, found {len(meta['files'])}")
    comps = []
    for name in meta["files"]:
        raw = np.fromfile(path / name, dtype="<f8")
        count = int(np.prod(shape)) * (2 if rep == SPECTRAL else 1)
        if raw.size != count:
            raise BundleError(f"{name}: expected {count} values, found {raw.size}")
        if rep == SPECTRAL:
            raw = raw.view("<c16")
        comps.append(raw.reshape(shape, order="F"))
    return Field(grid, np.stack(comps), rep, meta.get("provenance", ""))
