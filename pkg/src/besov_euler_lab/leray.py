"""Leray projector, its complement and Riesz transforms as per-mode multipliers.

All multipliers use the grid's effective frequencies (Nyquist entries zeroed),
matching the spectral derivative, so div(P v) vanishes to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid, as_spectral, divergence, l2_norm_spectral, _like_input


def _longitudinal(grid: Grid, vh: np.ndarray) -> np.ndarray:
    k1, k2, k3 = grid.xi_eff
    proj = k1 * vh[0]
    proj += k2 * vh[1]
    proj += k3 * vh[2]
    proj *= grid.inv_kmag_eff_sq
    return proj


def complement_array(grid: Grid, vh: np.ndarray) -> np.ndarray:
    """xi (xi . v) / |xi|^2 per mode; zero where xi vanishes."""
    k1, k2, k3 = grid.xi_eff
    proj = _longitudinal(grid, vh)
    return np.stack([k1 * proj, k2 * proj, k3 * proj])


def project_array(grid: Grid, vh: np.ndarray) -> np.ndarray:
    out = vh.copy()
    project_inplace(grid, out)
    return out


def project_inplace(grid: Grid, vh: np.ndarray) -> None:
    """Overwrite spectral vector data ``vh`` with its Leray projection."""
    proj = _longitudinal(grid, vh)
    for c, k in enumerate(grid.xi_eff):
        vh[c] -= k * proj


def project(v: Field) -> Field:
    """Leray projection onto divergence-free fields; the mean mode is kept."""
    _require_vector(v)
    vh = as_spectral(v)
    return _like_input(vh.replace(project_array(v.grid, vh.data)), v)


def complement(v: Field) -> Field:
    """Q = Id - P, the gradient part; the mean mode is dropped."""
    _require_vector(v)
    vh = as_spectral(v)
    return _like_input(vh.replace(complement_array(v.grid, vh.data)), v)


def riesz(f: Field, axis: int) -> Field:
    """Riesz transform with symbol -i xi_axis / |xi| (zero at xi = 0)."""
    if f.components != 1:
        raise ValueError("riesz expects a scalar field")
    if axis not in (1, 2, 3):
        raise ValueError("axis must be 1, 2 or 3")
    fh = as_spectral(f)
    grid = f.grid
    k = grid.xi_eff[axis - 1]
    inv = np.sqrt(grid.inv_kmag_eff_sq)
    return _like_input(fh.replace(-1j * k * inv * fh.data), f)


def _require_vector(v: Field) -> None:
    if v.components != 3:
        raise ValueError("expected a vector field")


@dataclass(frozen=True)
class ProjectorDiagnostics:
    div_residual: float
    idempotence_residual: float
    complement_residual: float
    threshold: float = 1e-10

    @property
    def passed(self) -> bool:
        return max(self.div_residual, self.idempotence_residual, self.complement_residual) <= self.threshold


def _rel(a: float, scale: float) -> float:
    return a / scale if scale > 0 else a


def projector_diagnostics(v: Field, threshold: float = 1e-10) -> ProjectorDiagnostics:
    """Relative residuals of div(Pv), P^2 v - P v and (P + Q) v - v."""
    vh = as_spectral(v)
    scale = l2_norm_spectral(vh)
    pv = project(vh)
    qv = complement(vh)
    # divergence is measured against the gradient size of v
    grad_scale = float(
        np.sqrt(v.grid.cell_volume * np.sum(np.abs(vh.data) ** 2 * v.grid.kmag_eff_sq * v.grid.rfft_weights))
    )
    return ProjectorDiagnostics(
        div_residual=_rel(l2_norm_spectral(divergence(pv)), grad_scale),
        idempotence_residual=_rel(l2_norm_spectral(project(pv) - pv), scale),
        complement_residual=_rel(l2_norm_spectral(pv + qv - vh), scale),
        threshold=threshold,
    )
