"""Anisotropic periodic grids, spectral transforms and field algebra.

The whole-space problem is replaced by a periodic box whose period along
axis ``i`` is ``2*pi / freq_spacing[i]``.  Fields are stored with a leading
component axis: shape ``(ncomp, N1, N2, N3)`` in physical space and
``(ncomp, N1, N2, N3 // 2 + 1)`` in spectral space (real FFT along the last
axis, orthonormal scaling).  The carrier direction x1 is array axis 0.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.fft as sfft

logger = logging.getLogger(__name__)

PHYSICAL = "physical"
SPECTRAL = "spectral"

#: relative spectral energy above the dealias band that triggers an aliasing warning
ALIASING_WARN_FRACTION = 1e-10


def fft_workers() -> int:
    """Worker count for scipy.fft, bounded by the ``BEL_THREADS`` variable."""
    raw = os.environ.get("BEL_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning("ignoring malformed BEL_THREADS=%r", raw)
    return 1


@dataclass(frozen=True)
class GridSpec:
    points_per_axis: tuple[int, int, int]
    freq_spacing: tuple[float, float, float]
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        pts = tuple(int(n) for n in self.points_per_axis)
        dxi = tuple(float(d) for d in self.freq_spacing)
        if len(pts) != 3 or len(dxi) != 3:
            raise ValueError("GridSpec needs exactly three axes")
        for n in pts:
            if n <= 0 or n % 2:
                raise ValueError(f"points per axis must be positive and even, got {pts}")
        for d in dxi:
            if not d > 0 or not math.isfinite(d):
                raise ValueError(f"frequency spacing must be positive, got {dxi}")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must lie in (0, 1]")
        object.__setattr__(self, "points_per_axis", pts)
        object.__setattr__(self, "freq_spacing", dxi)
        object.__setattr__(self, "dealias_fraction", float(self.dealias_fraction))

    def as_dict(self) -> dict:
        return {
            "points_per_axis": list(self.points_per_axis),
            "freq_spacing": list(self.freq_spacing),
            "dealias_fraction": self.dealias_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(
            tuple(d["points_per_axis"]),
            tuple(d["freq_spacing"]),
            d.get("dealias_fraction", 2.0 / 3.0),
        )


@dataclass(frozen=True)
class Preset:
    name: str
    spec: GridSpec
    n_values: tuple[int, ...]


PRESETS: dict[str, Preset] = {
    "ci": Preset("ci", GridSpec((1024, 32, 32), (1 / 16, 1 / 16, 1 / 16)), (3,)),
    "desk": Preset("desk", GridSpec((4096, 64, 64), (1 / 16, 1 / 16, 1 / 16)), (3, 4, 5)),
    "paper": Preset("paper", GridSpec((16384, 128, 128), (1 / 64, 1 / 64, 1 / 64)), (3, 4, 5)),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


class Grid:
    """Periodic box with a per-axis frequency lattice.

    Read-only after construction; lattice arrays are computed lazily and
    cached, so a grid can be shared between threads once warmed up.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self.shape = spec.points_per_axis
        self.spectral_shape = (self.shape[0], self.shape[1], self.shape[2] // 2 + 1)
        self.freq_spacing = np.array(spec.freq_spacing)
        self.period = 2 * np.pi / self.freq_spacing
        self.spacing = self.period / np.array(self.shape)
        self.xi_max = np.array(self.shape) * self.freq_spacing / 2
        self.dealias_fraction = spec.dealias_fraction
        self.dealias_limit = self.dealias_fraction * self.xi_max
        self.cell_volume = float(np.prod(self.spacing))
        self.volume = float(np.prod(self.period))
        self.size = int(np.prod(self.shape))

    def __repr__(self):
        return f"Grid(N={self.shape}, dxi={tuple(self.freq_spacing)})"

    # -- coordinates -----------------------------------------------------
    def coords(self, axis: int) -> np.ndarray:
        """Physical sample positions along ``axis`` (0-based), starting at 0."""
        return np.arange(self.shape[axis]) * self.spacing[axis]

    def mesh(self, axis: int) -> np.ndarray:
        """Coordinates along ``axis`` shaped for broadcasting over the physical lattice."""
        shape = [1, 1, 1]
        shape[axis] = self.shape[axis]
        return self.coords(axis).reshape(shape)

    # -- frequency lattice -------------------------------------------------
    @cached_property
    def xi_1d(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n1, n2, n3 = self.shape
        d1, d2, d3 = self.freq_spacing
        return (
            np.fft.fftfreq(n1) * n1 * d1,
            np.fft.fftfreq(n2) * n2 * d2,
            np.fft.rfftfreq(n3) * n3 * d3,
        )

    @cached_property
    def xi(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Lattice frequencies per axis, broadcastable over the spectral shape."""
        a, b, c = self.xi_1d
        return a[:, None, None], b[None, :, None], c[None, None, :]

    @cached_property
    def xi_eff(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Frequencies used by odd multipliers: Nyquist entries set to zero."""
        out = []
        for axis, k in enumerate(self.xi_1d):
            k = k.copy()
            k[self.shape[axis] // 2] = 0.0
            shape = [1, 1, 1]
            shape[axis] = k.size
            out.append(k.reshape(shape))
        return tuple(out)

    @cached_property
    def kmag(self) -> np.ndarray:
        """|xi| on the spectral lattice."""
        k1, k2, k3 = self.xi
        return np.sqrt(k1**2 + k2**2 + k3**2)

    @cached_property
    def kmag_eff_sq(self) -> np.ndarray:
        k1, k2, k3 = self.xi_eff
        return k1**2 + k2**2 + k3**2

    @cached_property
    def inv_kmag_eff_sq(self) -> np.ndarray:
        """1 / |xi_eff|^2, with 0 where xi_eff vanishes."""
        k2 = self.kmag_eff_sq
        with np.errstate(divide="ignore"):
            return np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on lattice points inside the dealias box |xi_i| <= fraction * xi_max_i."""
        k1, k2, k3 = self.xi
        lim = self.dealias_limit * (1 + 1e-12)
        return (np.abs(k1) <= lim[0]) & (np.abs(k2) <= lim[1]) & (np.abs(k3) <= lim[2])

    @cached_property
    def resolved_radius(self) -> float:
        """Largest |xi| over lattice points inside the dealias box."""
        r = []
        for axis, k in enumerate(self.xi_1d):
            inside = np.abs(k)[np.abs(k) <= self.dealias_limit[axis] * (1 + 1e-12)]
            r.append(inside.max())
        return float(np.sqrt(np.sum(np.square(r))))

    @cached_property
    def rfft_weights(self) -> np.ndarray:
        """Multiplicity of each half-spectrum plane along the last axis."""
        n3 = self.shape[2]
        w = np.full(n3 // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w[None, None, :]

    def lattice_index(self, axis: int, xi_value: float) -> int | None:
        """Array index of ``xi_value`` on the lattice of ``axis``, or None if off-lattice."""
        q = xi_value / self.freq_spacing[axis]
        k = round(q)
        if abs(q - k) > 1e-9 * max(1.0, abs(q)):
            return None
        n = self.shape[axis]
        if axis == 2:
            return k if 0 <= k <= n // 2 else None
        if not -n // 2 <= k < n // 2:
            return None
        return k % n


def create_grid(spec: GridSpec) -> Grid:
    return Grid(spec)


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float = 2.0
    r: float = 2.0

    def __post_init__(self):
        for name in ("p", "r"):
            v = float(getattr(self, name))
            if not v >= 1:
                raise ValueError(f"Besov index {name} must lie in [1, inf], got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "s", float(self.s))

    @property
    def admissible(self) -> bool:
        """Whether (s, p, r) lies in the well-posedness range."""
        if not 1 < self.p < math.inf:
            return False
        crit = 3.0 / self.p + 1.0
        if self.s > crit and not math.isclose(self.s, crit, rel_tol=1e-12):
            return True
        return math.isclose(self.s, crit, rel_tol=1e-12) and self.r == 1.0

    def with_s(self, s: float) -> "BesovParams":
        return BesovParams(s, self.p, self.r)

    def with_r(self, r: float) -> "BesovParams":
        return BesovParams(self.s, self.p, r)

    def as_dict(self) -> dict:
        return {"s": self.s, "p": _jsonable(self.p), "r": _jsonable(self.r)}


def _jsonable(x: float):
    return "inf" if math.isinf(x) else x


@dataclass(frozen=True, eq=False)
class Field:
    """Scalar (1 component) or vector (3 component) samples on a grid."""

    grid: Grid
    data: np.ndarray
    representation: str = PHYSICAL
    provenance: str = field(default="", compare=False)

    def __post_init__(self):
        data = self.data
        if data.ndim == 3:
            data = data[None]
        if self.representation == PHYSICAL:
            expected = self.grid.shape
            if np.iscomplexobj(data):
                raise ValueError("physical field data must be real")
        elif self.representation == SPECTRAL:
            expected = self.grid.spectral_shape
        else:
            raise ValueError(f"unknown representation {self.representation!r}")
        if data.shape[1:] != tuple(expected) or data.shape[0] not in (1, 3):
            raise ValueError(
                f"data shape {data.shape} incompatible with {self.representation} "
                f"grid shape {expected}"
            )
        if data.flags.writeable:
            data = data.view()
            data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def components(self) -> int:
        return self.data.shape[0]

    @property
    def is_spectral(self) -> bool:
        return self.representation == SPECTRAL

    def component(self, i: int) -> "Field":
        """Component ``i`` (1-based, as in u^(1), u^(2), u^(3)) as a scalar field."""
        return Field(self.grid, self.data[i - 1 : i], self.representation, self.provenance)

    def replace(self, data: np.ndarray, representation: str | None = None) -> "Field":
        return Field(self.grid, data, representation or self.representation, self.provenance)

    def __add__(self, other: "Field") -> "Field":
        a, b = _same_rep(self, other)
        return a.replace(a.data + b.data)

    def __sub__(self, other: "Field") -> "Field":
        a, b = _same_rep(self, other)
        return a.replace(a.data - b.data)

    def __neg__(self) -> "Field":
        return self.replace(-self.data)

    def __mul__(self, scalar: float) -> "Field":
        if isinstance(scalar, Field):
            return NotImplemented
        return self.replace(self.data * scalar)

    __rmul__ = __mul__


def _same_rep(a: Field, b: Field) -> tuple[Field, Field]:
    if a.grid is not b.grid and a.grid.spec != b.grid.spec:
        raise ValueError("fields live on different grids")
    if a.representation != b.representation:
        b = as_spectral(b) if a.is_spectral else as_physical(b)
    return a, b


def physical_field(grid: Grid, data: np.ndarray, provenance: str = "") -> Field:
    return Field(grid, np.asarray(data, dtype=float), PHYSICAL, provenance)


def spectral_field(grid: Grid, data: np.ndarray, provenance: str = "") -> Field:
    return Field(grid, np.asarray(data, dtype=complex), SPECTRAL, provenance)


def zeros(grid: Grid, components: int = 1, representation: str = SPECTRAL) -> Field:
    shape = grid.spectral_shape if representation == SPECTRAL else grid.shape
    dtype = complex if representation == SPECTRAL else float
    return Field(grid, np.zeros((components, *shape), dtype=dtype), representation)


# -- transforms ------------------------------------------------------------

def fft_forward(grid: Grid, arr: np.ndarray) -> np.ndarray:
    """Orthonormal real FFT over the three spatial axes of ``arr`` (last three)."""
    return sfft.rfftn(arr, axes=(-3, -2, -1), norm="ortho", workers=fft_workers())


def fft_inverse(grid: Grid, arr: np.ndarray, overwrite: bool = False) -> np.ndarray:
    """Inverse of :func:`fft_forward`; ``overwrite`` lets scipy reuse ``arr`` as scratch."""
    return sfft.irfftn(arr, s=grid.shape, axes=(-3, -2, -1), norm="ortho", overwrite_x=overwrite, workers=fft_workers())


def to_spectral(f: Field) -> Field:
    if f.is_spectral:
        raise ValueError("field is already in spectral representation")
    return f.replace(fft_forward(f.grid, f.data), SPECTRAL)


def to_physical(f: Field) -> Field:
    if not f.is_spectral:
        raise ValueError("field is already in physical representation")
    return f.replace(fft_inverse(f.grid, f.data), PHYSICAL)


def as_spectral(f: Field) -> Field:
    return f if f.is_spectral else to_spectral(f)


def as_physical(f: Field) -> Field:
    return f if not f.is_spectral else to_physical(f)


def _like_input(result_spec: Field, original: Field) -> Field:
    return result_spec if original.is_spectral else to_physical(result_spec)


# -- calculus ----------------------------------------------------------------

def derivative(f: Field, axis: int) -> Field:
    """Exact derivative along ``axis`` (1, 2 or 3) of the band-limited interpolant."""
    if axis not in (1, 2, 3):
        raise ValueError("axis must be 1, 2 or 3")
    fh = as_spectral(f)
    k = f.grid.xi_eff[axis - 1]
    return _like_input(fh.replace(1j * k * fh.data), f)


def gradient(f: Field) -> Field:
    if f.components != 1:
        raise ValueError("gradient expects a scalar field")
    fh = as_spectral(f)
    data = np.stack([1j * k * fh.data[0] for k in f.grid.xi_eff])
    return _like_input(fh.replace(data), f)


def divergence(u: Field) -> Field:
    if u.components != 3:
        raise ValueError("divergence expects a vector field")
    uh = as_spectral(u)
    k1, k2, k3 = u.grid.xi_eff
    d = 1j * (k1 * uh.data[0] + k2 * uh.data[1] + k3 * uh.data[2])
    return _like_input(uh.replace(d[None]), u)


def curl(u: Field) -> Field:
    uh = as_spectral(u)
    return _like_input(uh.replace(curl_array(u.grid, uh.data)), u)


def curl_component(grid: Grid, uh: np.ndarray, c: int) -> np.ndarray:
    """Component ``c`` of the spectral curl of ``uh``."""
    k = grid.xi_eff
    a, b = (c + 1) % 3, (c + 2) % 3
    out = k[a] * uh[b]
    out -= k[b] * uh[a]
    out *= 1j
    return out


def curl_array(grid: Grid, uh: np.ndarray) -> np.ndarray:
    return np.stack([curl_component(grid, uh, c) for c in range(3)])


def dealias(f: Field) -> Field:
    """Zero every coefficient outside the dealias box."""
    fh = as_spectral(f)
    return _like_input(fh.replace(fh.data * f.grid.dealias_mask), f)


def energy_above_band(f: Field) -> float:
    """Fraction of spectral energy outside the dealias box (0 for the zero field)."""
    fh = as_spectral(f)
    w = fh.grid.rfft_weights
    e = np.abs(fh.data) ** 2 * w
    total = float(e.sum())
    if total == 0.0:
        return 0.0
    return float(e[:, ~fh.grid.dealias_mask].sum()) / total


def _warn_aliasing(*fields: Field) -> None:
    for f in fields:
        frac = energy_above_band(f)
        if frac > ALIASING_WARN_FRACTION:
            logger.warning(
                "aliasing risk: %.3e of input energy lies above the dealias band", frac
            )


def pointwise_product(f: Field, g: Field, *, dealias_result: bool = True, check: bool = True) -> Field:
    """Physical-space product, truncated to the dealias band.

    Scalar times vector broadcasts; two vectors multiply componentwise.
    """
    if check:
        _warn_aliasing(f, g)
    a = as_physical(f).data
    b = as_physical(g).data
    if a.shape[0] != b.shape[0] and 1 not in (a.shape[0], b.shape[0]):
        raise ValueError("component counts do not broadcast")
    prod = a * b
    out = physical_field(f.grid, prod)
    if dealias_result:
        out = to_physical(dealias(to_spectral(out)))
    return out


def advection(u: Field, v: Field, *, check: bool = True, dealias_result: bool = True) -> Field:
    """(u . grad) v for vector ``u`` and scalar or vector ``v``, spectral result.

    The product is truncated to the dealias band unless ``dealias_result`` is
    false, which is exact whenever the product's bandwidth stays below Nyquist.
    """
    if u.components != 3:
        raise ValueError("advecting field must be a vector")
    if check:
        _warn_aliasing(u, v)
    grid = u.grid
    up = as_physical(u).data
    vh = as_spectral(v).data
    out = np.empty((v.components, *grid.spectral_shape), dtype=complex)
    for c in range(v.components):
        acc = np.zeros(grid.shape)
        for axis, k in enumerate(grid.xi_eff):
            acc += up[axis] * fft_inverse(grid, 1j * k * vh[c])
        out[c] = fft_forward(grid, acc)
        if dealias_result:
            out[c] *= grid.dealias_mask
    return spectral_field(grid, out)


def cross_e3(u: Field) -> Field:
    """e3 x u = (-u2, u1, 0)."""
    d = u.data
    return u.replace(np.stack([-d[1], d[0], np.zeros_like(d[0])]))


# -- norms -------------------------------------------------------------------

def pointwise_magnitude(data: np.ndarray) -> np.ndarray:
    if data.shape[0] == 1:
        return np.abs(data[0])
    out = data[0] * data[0]
    for comp in data[1:]:
        out += comp * comp
    return np.sqrt(out, out=out)


def lp_norm_array(grid: Grid, data: np.ndarray, p: float) -> float:
    """L^p norm of physical samples ``data`` (component axis first)."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    mag = pointwise_magnitude(data)
    if math.isinf(p):
        return float(mag.max())
    if p == 2:
        return math.sqrt(grid.cell_volume * float(np.sum(mag * mag)))
    m = float(mag.max())
    if m == 0.0:
        return 0.0
    # scale by the maximum to keep mag**p in range
    return m * (grid.cell_volume * float(np.sum((mag / m) ** p))) ** (1.0 / p)


def lp_norm(f: Field, p: float) -> float:
    return lp_norm_array(f.grid, as_physical(f).data, p)


def l2_norm_spectral(f: Field) -> float:
    """L^2 norm from the coefficients (Parseval); equals the quadrature value."""
    fh = as_spectral(f)
    return math.sqrt(fh.grid.cell_volume * float(np.sum(np.abs(fh.data) ** 2 * fh.grid.rfft_weights)))


def inner_product(f: Field, g: Field) -> float:
    """Real L^2 inner product, computed from the coefficients."""
    a = as_spectral(f).data
    b = as_spectral(g).data
    return f.grid.cell_volume * float(np.sum((a * np.conj(b)).real * f.grid.rfft_weights))


def hermitian_residual(f: Field) -> float:
    """Max violation of conjugate symmetry on the self-paired rfft planes."""
    fh = as_spectral(f)
    worst = 0.0
    n3 = fh.grid.shape[2]
    for plane in {0, n3 // 2}:
        a = fh.data[:, :, :, plane]
        flipped = np.roll(a[:, ::-1, ::-1], shift=(1, 1), axis=(1, 2))
        worst = max(worst, float(np.max(np.abs(a - np.conj(flipped)), initial=0.0)))
    return worst


def max_abs(f: Field) -> float:
    return float(pointwise_magnitude(as_physical(f).data).max())


def stack_components(parts: Sequence[Field]) -> Field:
    first = parts[0]
    return first.replace(np.concatenate([p.data for p in parts], axis=0))
