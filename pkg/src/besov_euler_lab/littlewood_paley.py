"""Dyadic blocks, Besov norms and the block commutator."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .grid import (
    BesovParams,
    Field,
    Grid,
    advection,
    as_physical,
    as_spectral,
    fft_inverse,
    lp_norm_array,
    spectral_field,
)

logger = logging.getLogger(__name__)

LOW_EDGE = 3.0 / 4.0
HIGH_EDGE = 4.0 / 3.0
#: relative energy outside the covered blocks that is reported as truncation
TRUNCATION_REPORT_FRACTION = 1e-10


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    t = np.asarray(t, dtype=float)
    a = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        ea = np.where(a > 0, np.exp(-1.0 / np.where(a > 0, a, 1.0)), 0.0)
        b = 1.0 - a
        eb = np.where(b > 0, np.exp(-1.0 / np.where(b > 0, b, 1.0)), 0.0)
        out = ea / (ea + eb)
    return np.where(a >= 1.0, 1.0, np.where(a <= 0.0, 0.0, out))


def plateau(r, inner: float, outer: float):
    """Radial bump equal to 1 for r <= inner, 0 for r >= outer, smooth and monotone between."""
    return smooth_step((outer - np.asarray(r, dtype=float)) / (outer - inner))


def low_multiplier(r):
    """The low-frequency cutoff: 1 on |xi| <= 3/4, 0 on |xi| >= 4/3."""
    return plateau(r, LOW_EDGE, HIGH_EDGE)


def annulus_multiplier(r):
    """low(r/2) - low(r): supported in 3/4 <= |xi| <= 8/3, equal to 1 on [4/3, 3/2]."""
    r = np.asarray(r, dtype=float)
    return low_multiplier(r / 2.0) - low_multiplier(r)


@dataclass(frozen=True)
class BesovProfileRow:
    j: int
    block_lp: float
    weighted: float


@dataclass(frozen=True)
class BesovNorm:
    value: float
    rows: tuple[BesovProfileRow, ...]
    truncated_fraction: float = 0.0

    def __float__(self):
        return self.value

    def row(self, j: int) -> BesovProfileRow:
        for row in self.rows:
            if row.j == j:
                return row
        raise KeyError(j)

    def as_csv(self) -> str:
        lines = ["j,block_lp,weighted"]
        lines += [f"{r.j},{r.block_lp:.17g},{r.weighted:.17g}" for r in self.rows]
        return "\n".join(lines) + "\n"


class FilterBank:
    """Dyadic multipliers on a grid's frequency lattice.

    Nonhomogeneous blocks run from j = -1 to ``j_max``; homogeneous blocks from
    ``j_floor`` to ``j_max``.  Multipliers are stored sparsely (lattice indices
    of the support plus values) and built on first use.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        radius = grid.resolved_radius
        j = -1
        while LOW_EDGE * 2.0 ** (j + 1) < radius:
            j += 1
        self.j_max = j
        nonzero = grid.kmag[grid.kmag > 0]
        kmin = float(nonzero.min())
        j = 0
        while 8.0 / 3.0 * 2.0 ** (j - 1) > kmin:
            j -= 1
        self.j_floor = j
        # |xi| beyond which no nonhomogeneous block reaches full weight
        self.covered_radius = LOW_EDGE * 2.0 ** (self.j_max + 1)
        self._cache: dict[tuple[str, int], tuple[np.ndarray, np.ndarray]] = {}
        self._flat_kmag = grid.kmag.reshape(-1)

    @property
    def j_range(self) -> range:
        return range(-1, self.j_max + 1)

    @property
    def homogeneous_range(self) -> range:
        return range(self.j_floor, self.j_max + 1)

    def _support(self, j: int, homogeneous: bool = False) -> tuple[np.ndarray, np.ndarray]:
        key = ("h" if homogeneous and j < 0 else "nh", j)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        k = self._flat_kmag
        if key == ("nh", -1):
            idx = np.flatnonzero(k < HIGH_EDGE)
            vals = low_multiplier(k[idx])
        else:
            scale = 2.0**j
            idx = np.flatnonzero((k > LOW_EDGE * scale) & (k < 8.0 / 3.0 * scale))
            vals = annulus_multiplier(k[idx] / scale)
        keep = vals != 0.0
        idx = idx[keep].astype(np.int64)
        vals = vals[keep]
        self._cache[key] = (idx, vals)
        return idx, vals

    def multiplier(self, j: int, homogeneous: bool = False) -> np.ndarray:
        """Dense multiplier array for block ``j`` on the spectral lattice."""
        out = np.zeros(self.grid.spectral_shape)
        if j < -1 and not homogeneous:
            return out
        idx, vals = self._support(j, homogeneous)
        out.reshape(-1)[idx] = vals
        return out

    def apply(self, data: np.ndarray, j: int, homogeneous: bool = False) -> np.ndarray:
        """Multiply spectral ``data`` (component axis first) by block ``j``."""
        out = np.zeros_like(data)
        if (j < -1 and not homogeneous) or j > self.j_max:
            return out
        idx, vals = self._support(j, homogeneous)
        c = data.shape[0]
        flat_in = data.reshape(c, -1)
        flat_out = out.reshape(c, -1)
        flat_out[:, idx] = flat_in[:, idx] * vals
        return out

    def block_l2_sq(self, energy_flat: np.ndarray, j: int, homogeneous: bool = False) -> float:
        """Squared L^2 norm of block j from the weighted coefficient energy."""
        idx, vals = self._support(j, homogeneous)
        return self.grid.cell_volume * float(np.sum(energy_flat[idx] * vals * vals))


def build_filter_bank(grid: Grid) -> FilterBank:
    return FilterBank(grid)


def _bank_for(f: Field, bank: FilterBank | None) -> FilterBank:
    return bank if bank is not None else build_filter_bank(f.grid)


def dyadic_block(f: Field, j: int, bank: FilterBank | None = None, *, homogeneous: bool = False) -> Field:
    """Block ``j`` of ``f`` as a spectral field; zero below -1 and above ``j_max``."""
    bank = _bank_for(f, bank)
    if j > bank.j_max:
        logger.info("block %d lies above j_max=%d of this grid; returning zero", j, bank.j_max)
    fh = as_spectral(f)
    return spectral_field(f.grid, bank.apply(fh.data, j, homogeneous))


def lr_sum(values: Iterable[float], r: float) -> float:
    """l^r norm of nonnegative values, summed in descending order."""
    vals = sorted((abs(v) for v in values), reverse=True)
    if not vals or vals[0] == 0.0:
        return 0.0
    if math.isinf(r):
        return vals[0]
    top = vals[0]
    return top * math.fsum((v / top) ** r for v in vals) ** (1.0 / r)


def _energy_flat(fh: Field) -> np.ndarray:
    e = np.abs(fh.data) ** 2 * fh.grid.rfft_weights
    return e.sum(axis=0).reshape(-1)


def block_lp_norms(
    f: Field,
    p: float,
    bank: FilterBank | None = None,
    *,
    homogeneous: bool = False,
) -> dict[int, float]:
    """||Delta_j f||_{L^p} for every block in range (p=2 uses Parseval)."""
    bank = _bank_for(f, bank)
    fh = as_spectral(f)
    js = bank.homogeneous_range if homogeneous else bank.j_range
    out: dict[int, float] = {}
    if p == 2:
        energy = _energy_flat(fh)
        for j in js:
            out[j] = math.sqrt(bank.block_l2_sq(energy, j, homogeneous))
        return out
    for j in js:
        block = bank.apply(fh.data, j, homogeneous)
        if not block.any():
            out[j] = 0.0
            continue
        out[j] = lp_norm_array(f.grid, fft_inverse(f.grid, block), p)
    return out


def truncated_fraction(f: Field, bank: FilterBank | None = None) -> float:
    """Fraction of spectral energy beyond the radius fully covered by the blocks."""
    bank = _bank_for(f, bank)
    fh = as_spectral(f)
    e = _energy_flat(fh)
    total = float(np.sum(e))
    if total == 0.0:
        return 0.0
    outside = bank._flat_kmag > bank.covered_radius
    return float(np.sum(e[outside])) / total


def _assemble(norms: dict[int, float], params: BesovParams, trunc: float) -> BesovNorm:
    rows = tuple(BesovProfileRow(j, v, 2.0 ** (j * params.s) * v) for j, v in sorted(norms.items()))
    if trunc > TRUNCATION_REPORT_FRACTION:
        logger.info("%.3e of the energy lies beyond the covered blocks (truncated)", trunc)
    return BesovNorm(lr_sum((row.weighted for row in rows), params.r), rows, trunc)


def besov_norm(f: Field, params: BesovParams, bank: FilterBank | None = None) -> BesovNorm:
    """Nonhomogeneous B^s_{p,r} norm with its block profile."""
    bank = _bank_for(f, bank)
    norms = block_lp_norms(f, params.p, bank)
    return _assemble(norms, params, truncated_fraction(f, bank))


def homogeneous_besov_norm(f: Field, params: BesovParams, bank: FilterBank | None = None) -> BesovNorm:
    """Homogeneous norm over all resolved blocks j_floor..j_max."""
    bank = _bank_for(f, bank)
    norms = block_lp_norms(f, params.p, bank, homogeneous=True)
    return _assemble(norms, params, truncated_fraction(f, bank))


def besov_from_blocks(norms: dict[int, float], params: BesovParams) -> float:
    """Reweight precomputed block norms for another (s, r)."""
    return lr_sum((2.0 ** (j * params.s) * v for j, v in norms.items()), params.r)


def commutator(
    j: int,
    u: Field,
    v: Field,
    bank: FilterBank | None = None,
    *,
    dealias_result: bool = True,
) -> Field:
    """[Delta_j, u] . grad v = Delta_j(u . grad v) - u . grad(Delta_j v), spectral scalar."""
    if u.components != 3 or v.components != 1:
        raise ValueError("commutator expects a vector u and a scalar v")
    bank = _bank_for(u, bank)
    uv = advection(u, v, check=dealias_result, dealias_result=dealias_result)
    first = bank.apply(uv.data, j)
    second = advection(u, dyadic_block(v, j, bank), check=False, dealias_result=dealias_result).data
    return spectral_field(u.grid, first - second)


def partition_residual(bank: FilterBank) -> float:
    """max |sum_j multiplier_j - 1| over lattice points inside the dealias box."""
    total = np.zeros(bank.grid.spectral_shape)
    for j in bank.j_range:
        idx, vals = bank._support(j)
        total.reshape(-1)[idx] += vals
    mask = bank.grid.dealias_mask
    return float(np.max(np.abs(total[mask] - 1.0)))


def almost_orthogonality_residual(bank: FilterBank, f: Field) -> float:
    """Largest ||Delta_j Delta_k f|| / ||f|| over pairs with |j - k| >= 2."""
    fh = as_spectral(f)
    scale = float(np.sqrt(np.sum(np.abs(fh.data) ** 2)))
    if scale == 0.0:
        return 0.0
    worst = 0.0
    blocks = {j: bank.apply(fh.data, j) for j in bank.j_range}
    for j in bank.j_range:
        for k in bank.j_range:
            if abs(j - k) < 2:
                continue
            both = bank.apply(blocks[j], k)
            worst = max(worst, float(np.sqrt(np.sum(np.abs(both) ** 2))) / scale)
    return worst


def physical_block(f: Field, j: int, bank: FilterBank | None = None) -> Field:
    return as_physical(dyadic_block(f, j, bank))
