"""Explicit initial data: the tensor profile, the f_n / g_n pair and the two series.

Every field is assembled in spectral space by sampling the exact whole-space
Fourier transform on the grid lattice.  The resulting periodic field is the
periodization of the whole-space function, carrier frequencies do not have to
sit on the lattice, and spectral supports hold exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .grid import Field, Grid, as_spectral, spectral_field, _like_input
from .littlewood_paley import plateau

CARRIER_RATIO = 17.0 / 12.0
#: spectral half-width of carrier shells used in the representability check
CARRIER_MARGIN = 1.0
SERIES_START = 3
FAMILIES = ("fn", "gn", "th3", "th4")


class CarrierError(ValueError):
    """A carrier frequency does not fit inside the grid's dealias band."""


@dataclass(frozen=True)
class ProfileSpec:
    plateau_radius: float = 1.0 / 64.0
    support_radius: float = 1.0 / 8.0

    def __post_init__(self):
        if not 0 < self.plateau_radius < self.support_radius:
            raise ValueError("need 0 < plateau_radius < support_radius")
        if not 3 * self.support_radius**2 < 0.25:
            raise ValueError("support_radius too large: envelope spectrum must stay in |xi| <= 1/2")


DEFAULT_PROFILE = ProfileSpec()
RELAXED_PROFILE = ProfileSpec(1.0 / 16.0, 1.0 / 4.0)


def resolve_profile(grid: Grid, spec: ProfileSpec | None = None) -> tuple[ProfileSpec, str]:
    """Profile actually used on ``grid`` and a provenance note.

    The plateau must contain at least one nonzero lattice frequency per axis;
    otherwise the relaxed profile (plateau 1/16, support 1/4) is substituted.
    """
    spec = spec or DEFAULT_PROFILE
    dxi = float(np.max(grid.freq_spacing))
    if dxi <= spec.plateau_radius * (1 + 1e-12):
        return spec, f"profile plateau={spec.plateau_radius:g} support={spec.support_radius:g}"
    if dxi <= RELAXED_PROFILE.plateau_radius * (1 + 1e-12):
        note = (
            f"profile relaxed to plateau={RELAXED_PROFILE.plateau_radius:g} "
            f"support={RELAXED_PROFILE.support_radius:g} (grid spacing {dxi:g} > plateau "
            f"{spec.plateau_radius:g})"
        )
        return RELAXED_PROFILE, note
    raise ValueError(
        f"frequency spacing {dxi:g} is too coarse for any profile preset; "
        f"use freq_spacing <= {RELAXED_PROFILE.plateau_radius:g}"
    )


def profile_hat(xi, spec: ProfileSpec):
    """Even plateau bump: 1 for |xi| <= plateau_radius, 0 for |xi| >= support_radius."""
    return plateau(np.abs(np.asarray(xi, dtype=float)), spec.plateau_radius, spec.support_radius)


def build_profile(grid: Grid, axis: int, spec: ProfileSpec | None = None) -> np.ndarray:
    """Samples of the one-axis profile along ``axis`` (1, 2 or 3)."""
    spec, _ = resolve_profile(grid, spec)
    a = axis - 1
    n = grid.shape[a]
    xi = np.fft.fftfreq(n) * n * grid.freq_spacing[a]
    vals = np.fft.ifft(profile_hat(xi, spec)) * n / grid.period[a]
    return vals.real.copy()


def profile_imag_residual(grid: Grid, axis: int, spec: ProfileSpec | None = None) -> float:
    spec, _ = resolve_profile(grid, spec)
    a = axis - 1
    n = grid.shape[a]
    xi = np.fft.fftfreq(n) * n * grid.freq_spacing[a]
    vals = np.fft.ifft(profile_hat(xi, spec)) * n / grid.period[a]
    return float(np.max(np.abs(vals.imag)))


def carrier(n: int) -> float:
    return CARRIER_RATIO * 2.0**n


def check_carrier(grid: Grid, n: int) -> None:
    need = carrier(n) + CARRIER_MARGIN
    have = grid.dealias_limit[0]
    if need > have * (1 + 1e-12):
        n1_min = math.ceil(2 * need / (grid.dealias_fraction * grid.freq_spacing[0]))
        n1_min += n1_min % 2
        raise CarrierError(
            f"carrier 17/12*2^{n} = {carrier(n):.4g} (+{CARRIER_MARGIN:g}) exceeds the dealias band "
            f"{have:.4g}; need N1 >= {n1_min} at freq_spacing {grid.freq_spacing[0]:g}"
        )


def max_carrier_index(grid: Grid) -> int:
    """Largest n whose carrier shell fits in the dealias band."""
    n = SERIES_START - 1
    while carrier(n + 1) + CARRIER_MARGIN <= grid.dealias_limit[0] * (1 + 1e-12):
        n += 1
    return n


def _axis_hats(grid: Grid, spec: ProfileSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    k1, k2, k3 = grid.xi_1d
    return profile_hat(k1, spec), profile_hat(k2, spec), profile_hat(k3, spec)


def _assemble(grid: Grid, axis1: np.ndarray, spec: ProfileSpec) -> np.ndarray:
    """Orthonormal coefficients of the field whose transform is axis1 x hat x hat."""
    _, h2, h3 = _axis_hats(grid, spec)
    scale = math.sqrt(grid.size) / grid.volume
    return (scale * axis1)[:, None, None] * h2[None, :, None] * h3[None, None, :]


def _carrier_axis(grid: Grid, spec: ProfileSpec, terms: Iterable[tuple[float, float]]) -> np.ndarray:
    """Axis-1 transform of sum_k amp_k * phi(x1) cos(lam_k x1)."""
    k1 = grid.xi_1d[0]
    out = np.zeros(k1.shape, dtype=complex)
    for amp, lam in terms:
        out += amp * 0.5 * (profile_hat(k1 - lam, spec) + profile_hat(k1 + lam, spec))
    return out


def build_theta(grid: Grid, spec: ProfileSpec | None = None) -> Field:
    """theta(x) = phi(x1) phi(x2) phi(x3), spectral scalar field."""
    spec, note = resolve_profile(grid, spec)
    h1, _, _ = _axis_hats(grid, spec)
    data = _assemble(grid, h1.astype(complex), spec)
    return spectral_field(grid, data[None], provenance=f"theta; {note}")


def build_modulated(grid: Grid, terms: Sequence[tuple[float, float]], spec: ProfileSpec | None = None) -> Field:
    """Scalar sum_k amp_k theta(x) cos(lam_k x1) for (amp_k, lam_k) in ``terms``."""
    spec, note = resolve_profile(grid, spec)
    data = _assemble(grid, _carrier_axis(grid, spec, terms), spec)
    return spectral_field(grid, data[None], provenance=f"modulated theta; {note}")


def perp_grad(stream: Field) -> Field:
    """(-d2 psi, d1 psi, 0): divergence free by construction."""
    if stream.components != 1:
        raise ValueError("perp_grad expects a scalar stream function")
    sh = as_spectral(stream)
    k1, k2, _ = stream.grid.xi_eff
    psi = sh.data[0]
    data = np.stack([-1j * k2 * psi, 1j * k1 * psi, np.zeros_like(psi)])
    return _like_input(sh.replace(data), stream)


def build_fn(grid: Grid, n: int, s: float, spec: ProfileSpec | None = None) -> Field:
    """High-frequency datum 2^{-n(s+1)} perp_grad[theta cos(17/12 2^n x1)]."""
    check_carrier(grid, n)
    spec, note = resolve_profile(grid, spec)
    stream = build_modulated(grid, [(2.0 ** (-n * (s + 1)), carrier(n))], spec)
    u = perp_grad(stream)
    return Field(grid, u.data, u.representation, f"f_n n={n} s={s:g}; {note}")


def build_gn(grid: Grid, n: int, spec: ProfileSpec | None = None) -> Field:
    """Low-frequency datum 2^{-n} perp_grad theta."""
    spec, note = resolve_profile(grid, spec)
    u = perp_grad(build_theta(grid, spec))
    return Field(grid, u.data * 2.0**-n, u.representation, f"g_n n={n}; {note}")


def series_amplitude(kind: str, k: int, s: float) -> float:
    if kind == "th3":
        return k**-2 * 2.0 ** (-k * (s + 1))
    if kind == "th4":
        return 2.0 ** (-k * s)
    raise ValueError(f"unknown series kind {kind!r}")


def build_series(grid: Grid, s: float, n_range: Iterable[int], kind: str, spec: ProfileSpec | None = None) -> Field:
    """perp_grad of the truncated series sum_{n in n_range} amp_n theta cos(17/12 2^n x1).

    ``kind`` is ``"th3"`` (amp n^-2 2^{-n(s+1)}) or ``"th4"`` (amp 2^{-ns}).
    """
    ns = sorted(int(n) for n in n_range)
    if ns and ns[0] < SERIES_START:
        raise ValueError(f"series indices start at {SERIES_START}")
    for n in ns:
        check_carrier(grid, n)
    spec, note = resolve_profile(grid, spec)
    terms = [(series_amplitude(kind, n, s), carrier(n)) for n in ns]
    u = perp_grad(build_modulated(grid, terms, spec))
    trunc = f"truncated at n_max={ns[-1]}" if ns else "empty series"
    return Field(grid, u.data, u.representation, f"series {kind} s={s:g} {trunc}; {note}")


@dataclass(frozen=True)
class DataFamilySpec:
    kind: str
    s: float = 3.0
    n: int | None = None
    n_max: int | None = None

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")


def build_family(grid: Grid, fam: DataFamilySpec, spec: ProfileSpec | None = None) -> Field:
    if fam.kind in ("fn", "gn"):
        if fam.n is None:
            raise ValueError(f"family {fam.kind} needs n")
        return build_fn(grid, fam.n, fam.s, spec) if fam.kind == "fn" else build_gn(grid, fam.n, spec)
    n_max = fam.n_max if fam.n_max is not None else max_carrier_index(grid)
    return build_series(grid, fam.s, range(SERIES_START, n_max + 1), fam.kind, spec)
