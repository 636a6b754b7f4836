"""Independent reference implementations used as test oracles.

Everything here works on the full complex spectrum with explicit DFT matrices,
so it shares no transform, multiplier or masking code with the package.
"""

from __future__ import annotations

import math

import numpy as np


def dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n)


def dft3(a: np.ndarray) -> np.ndarray:
    """Unnormalised forward DFT over the last three axes by matrix products."""
    out = a.astype(complex)
    for axis in (-3, -2, -1):
        m = dft_matrix(out.shape[axis])
        out = np.moveaxis(np.tensordot(m, np.moveaxis(out, axis, 0), axes=(1, 0)), 0, axis)
    return out


def idft3(a: np.ndarray) -> np.ndarray:
    out = a.astype(complex)
    for axis in (-3, -2, -1):
        n = out.shape[axis]
        m = np.conj(dft_matrix(n)) / n
        out = np.moveaxis(np.tensordot(m, np.moveaxis(out, axis, 0), axes=(1, 0)), 0, axis)
    return out


def full_frequencies(shape, spacing):
    """Signed lattice frequencies per axis (Nyquist stored as the negative end)."""
    ks = []
    for axis, (n, d) in enumerate(zip(shape, spacing)):
        k = (np.arange(n) - n * (np.arange(n) >= n // 2)) * d
        s = [1, 1, 1]
        s[axis] = n
        ks.append(k.reshape(s))
    return ks


def derivative_frequencies(shape, spacing):
    """As ``full_frequencies`` with the Nyquist entries zeroed."""
    ks = []
    for axis, k in enumerate(full_frequencies(shape, spacing)):
        k = k.copy()
        k.reshape(-1)[shape[axis] // 2] = 0.0
        ks.append(k)
    return ks


def _bump(t: float) -> float:
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    a = math.exp(-1.0 / t)
    b = math.exp(-1.0 / (1.0 - t))
    return a / (a + b)


def chi(r: float) -> float:
    """Radial low cutoff: 1 below 3/4, 0 above 4/3."""
    return _bump((4.0 / 3.0 - r) / (4.0 / 3.0 - 3.0 / 4.0))


def block_symbol(j: int, r: float) -> float:
    if j == -1:
        return chi(r)
    return chi(r / 2.0 ** (j + 1)) - chi(r / 2.0**j)


def block_multiplier(j: int, shape, spacing) -> np.ndarray:
    k1, k2, k3 = full_frequencies(shape, spacing)
    r = np.sqrt(k1**2 + k2**2 + k3**2)
    return np.vectorize(lambda x: block_symbol(j, float(x)))(r)


def dyadic_block(data: np.ndarray, j: int, spacing) -> np.ndarray:
    """Physical samples of block j of physical scalar samples ``data``."""
    mult = block_multiplier(j, data.shape, spacing)
    return idft3(dft3(data) * mult).real


def advection(u: np.ndarray, v: np.ndarray, spacing, box: np.ndarray | None = None) -> np.ndarray:
    """(u . grad) v for physical vector u and physical scalar v; optional spectral box mask."""
    vh = dft3(v)
    acc = np.zeros(v.shape)
    for c, k in enumerate(derivative_frequencies(v.shape, spacing)):
        acc += u[c] * idft3(1j * k * vh).real
    if box is not None:
        acc = idft3(dft3(acc) * box).real
    return acc


def dealias_box(shape, spacing, fraction: float = 2.0 / 3.0) -> np.ndarray:
    ks = full_frequencies(shape, spacing)
    box = np.ones(shape, dtype=bool)
    for axis, k in enumerate(ks):
        lim = fraction * shape[axis] * spacing[axis] / 2.0
        box = box & (np.abs(k) <= lim * (1 + 1e-12))
    return box


def commutator(j: int, u: np.ndarray, v: np.ndarray, spacing, box: np.ndarray | None = None) -> np.ndarray:
    """Delta_j(u . grad v) - u . grad(Delta_j v) in physical space."""
    first = dyadic_block(advection(u, v, spacing, box), j, spacing)
    second = advection(u, dyadic_block(v, j, spacing), spacing, box)
    return first - second
