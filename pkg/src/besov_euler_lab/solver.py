"""Pseudo-spectral rotating Euler solver, the Taylor drift v0 and the linear propagator.

The evolution is the projected system du/dt = -P(u . grad u + omega e3 x u).
The advection term is evaluated in rotational form, P(u . grad u) = P(w x u)
with w = curl u, which needs nine FFTs per right-hand side instead of fifteen.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .grid import (
    Field,
    Grid,
    advection,
    as_spectral,
    curl_component,
    divergence,
    fft_forward,
    fft_inverse,
    l2_norm_spectral,
    max_abs,
    pointwise_magnitude,
    spectral_field,
)
from .leray import complement, project, project_inplace

logger = logging.getLogger(__name__)

#: keeps cfl_dt finite for the zero field at omega = 0
DT_FLOOR = 1e-12


class SolverBlowup(RuntimeError):
    """Velocity exceeded the blow-up guard."""


@dataclass(frozen=True)
class SolverConfig:
    omega: float = 1.0
    T: float = 0.0
    dt: float | None = None
    cfl_safety: float = 0.5
    snapshot_times: tuple[float, ...] = ()
    advection: bool = True
    blowup_factor: float = 1e6

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.T >= 0:
            raise ValueError("T must be nonnegative")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        times = tuple(float(t) for t in self.snapshot_times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("snapshot_times must be strictly increasing")
        for t in times:
            if t < 0 or t > self.T * (1 + 1e-12):
                raise ValueError(f"snapshot time {t} outside [0, T={self.T}]")
        object.__setattr__(self, "snapshot_times", times)


@dataclass(frozen=True)
class SnapshotDiagnostics:
    time: float
    energy: float
    max_velocity: float
    div_residual: float


@dataclass
class Trajectory:
    snapshots: list[tuple[float, Field]] = field(default_factory=list)
    diagnostics: list[SnapshotDiagnostics] = field(default_factory=list)
    dt: float = 0.0
    steps: int = 0

    @property
    def times(self) -> list[float]:
        return [d.time for d in self.diagnostics]

    def at(self, t: float) -> Field:
        for time, f in self.snapshots:
            if math.isclose(time, t, rel_tol=1e-12, abs_tol=1e-15):
                return f
        raise KeyError(t)

    def as_dict(self) -> dict:
        return {
            "dt": self.dt,
            "steps": self.steps,
            "snapshots": [vars(d) for d in self.diagnostics],
        }


# -- right-hand side -------------------------------------------------------------

def _coriolis_add(out: np.ndarray, uh: np.ndarray, omega: float) -> None:
    """out += omega * e3 x u."""
    if omega:
        out[0] -= omega * uh[1]
        out[1] += omega * uh[0]


def nonlinear_array(grid: Grid, uh: np.ndarray) -> tuple[np.ndarray, float]:
    """Dealiased spectral (curl u) x u and max |u| from the physical samples."""
    # one component at a time keeps FFT scratch at a third of a vector field
    up = np.empty((3, *grid.shape))
    wp = np.empty_like(up)
    for c in range(3):
        up[c] = fft_inverse(grid, uh[c])
        wp[c] = fft_inverse(grid, curl_component(grid, uh, c), overwrite=True)
    umax = float(pointwise_magnitude(up).max())
    out = np.empty_like(uh)
    mask = grid.dealias_mask
    for c, (a, b) in enumerate(((1, 2), (2, 0), (0, 1))):
        prod = wp[a] * up[b]
        prod -= wp[b] * up[a]
        out[c] = fft_forward(grid, prod)
        out[c] *= mask
    return out, umax


def rhs_array(grid: Grid, uh: np.ndarray, omega: float, advection: bool = True) -> tuple[np.ndarray, float]:
    """-P(u . grad u + omega e3 x u) on spectral data; also returns max |u| (nan if not computed)."""
    if advection:
        out, umax = nonlinear_array(grid, uh)
    else:
        out, umax = np.zeros_like(uh), math.nan
    _coriolis_add(out, uh, omega)
    project_inplace(grid, out)
    np.negative(out, out=out)
    return out, umax


def rhs(u: Field, omega: float, advection: bool = True) -> Field:
    uh = as_spectral(u)
    out, _ = rhs_array(u.grid, uh.data, omega, advection)
    return spectral_field(u.grid, out)


def v0(u0: Field, omega: float) -> Field:
    """Initial drift P(u0 . grad u0 + omega e3 x u0)."""
    uh = as_spectral(u0)
    out, _ = rhs_array(u0.grid, uh.data, omega)
    return spectral_field(u0.grid, -out)


def v0_decomposed(u0: Field, omega: float) -> Field:
    """u0 . grad u0 - Q(u0 . grad u0) + omega P(e3 x u0), built from the advective form."""
    adv = advection(u0, u0, check=False)
    uh = as_spectral(u0).data
    e3u = np.stack([-uh[1], uh[0], np.zeros_like(uh[0])])
    rot = project(spectral_field(u0.grid, e3u))
    return adv - complement(adv) + rot * omega


# -- time stepping ---------------------------------------------------------------

def _rk4_array(grid: Grid, uh: np.ndarray, dt: float, omega: float, advection: bool) -> tuple[np.ndarray, float]:
    acc, umax = rhs_array(grid, uh, omega, advection)
    stage = np.multiply(acc, 0.5 * dt)
    stage += uh
    for frac in (0.5, 1.0):
        k, _ = rhs_array(grid, stage, omega, advection)
        np.multiply(k, frac * dt, out=stage)
        stage += uh
        k *= 2.0
        acc += k
        del k
    k, _ = rhs_array(grid, stage, omega, advection)
    acc += k
    del k
    np.multiply(acc, dt / 6.0, out=stage)
    stage += uh
    project_inplace(grid, stage)
    return stage, umax


def step_rk4(u: Field, dt: float, omega: float, advection: bool = True) -> Field:
    """One classical RK4 step followed by re-projection."""
    uh = as_spectral(u)
    out, _ = _rk4_array(u.grid, uh.data, dt, omega, advection)
    return spectral_field(u.grid, out)


def cfl_dt(u: Field, omega: float, grid: Grid | None = None, safety: float = 0.5) -> float:
    """safety / (xi_max * ||u||_inf + |omega| + floor)."""
    grid = grid or u.grid
    speed = max_abs(u)
    return safety / (float(np.max(grid.xi_max)) * speed + abs(omega) + DT_FLOOR)


def _diagnose(t: float, grid: Grid, uh: np.ndarray) -> SnapshotDiagnostics:
    f = spectral_field(grid, uh)
    norm = l2_norm_spectral(f)
    grad = math.sqrt(grid.cell_volume * float(np.sum(np.abs(uh) ** 2 * grid.kmag_eff_sq * grid.rfft_weights)))
    div = l2_norm_spectral(divergence(f))
    return SnapshotDiagnostics(
        time=t,
        energy=norm * norm,
        max_velocity=max_abs(f),
        div_residual=div / grad if grad > 0 else div,
    )


Observer = Callable[[float, Field], None]


def _snapshot_times(cfg: SolverConfig) -> list[float]:
    return list(cfg.snapshot_times) or [cfg.T]


def resolve_dt(u0: Field, cfg: SolverConfig) -> float:
    return cfg.dt if cfg.dt is not None else cfl_dt(u0, cfg.omega, u0.grid, cfg.cfl_safety)


def iterate(u0: Field, cfg: SolverConfig) -> Iterator[tuple[float, Field]]:
    """Yield ``(t, u(t))`` at each snapshot time, advancing lazily.

    The yielded field shares memory with the integrator state and is only
    valid until the generator is resumed.
    """
    grid = u0.grid
    # each RK4 step returns fresh arrays, so the caller's data is never written
    uh = np.asarray(as_spectral(u0).data, dtype=complex)
    dt = resolve_dt(u0, cfg)
    umax0 = max_abs(u0)
    guard = cfg.blowup_factor * umax0 if umax0 > 0 else math.inf
    t = 0.0
    for target in _snapshot_times(cfg):
        tol = 1e-14 * max(1.0, abs(target))
        while target - t > tol:
            h = min(dt, target - t)
            uh, umax = _rk4_array(grid, uh, h, cfg.omega, cfg.advection)
            t = t + h if target - (t + h) > tol else target
            if (not math.isnan(umax) and umax > guard) or not np.isfinite(uh).all():
                raise SolverBlowup(
                    f"max velocity {umax:.3e} exceeded {cfg.blowup_factor:g} x initial {umax0:.3e} at t={t:.4g}"
                )
        yield target, spectral_field(grid, uh)


def step_count(cfg: SolverConfig, dt: float) -> int:
    """Number of RK4 steps ``iterate`` takes for this configuration."""
    steps, t = 0, 0.0
    for target in _snapshot_times(cfg):
        tol = 1e-14 * max(1.0, abs(target))
        while target - t > tol:
            h = min(dt, target - t)
            t = t + h if target - (t + h) > tol else target
            steps += 1
    return steps


def solve(
    u0: Field,
    cfg: SolverConfig,
    *,
    observer: Observer | None = None,
    store: bool = True,
) -> Trajectory:
    """Integrate from ``u0`` to ``cfg.T`` and record snapshots.

    Snapshots default to the single time T.  With ``store=False`` fields are
    only handed to ``observer``; the field passed there is valid for the
    duration of the callback only.
    """
    grid = u0.grid
    dt = resolve_dt(u0, cfg)
    traj = Trajectory(dt=dt, steps=step_count(cfg, dt))
    for t, u in iterate(u0, cfg):
        traj.diagnostics.append(_diagnose(t, grid, u.data))
        if store:
            u = spectral_field(grid, u.data.copy(), provenance=f"t={t:.6g}")
            traj.snapshots.append((t, u))
        if observer is not None:
            observer(t, u)
    return traj


# -- linear oracle ---------------------------------------------------------------

def linear_propagator(u0: Field, t: float, omega: float) -> Field:
    """Exact solution of du/dt + omega P(e3 x u) = 0 for divergence-free data.

    For xi != 0 the mode rotates about xi/|xi| with frequency omega xi3/|xi|;
    the mean mode rotates in the horizontal plane with frequency omega.
    """
    grid = u0.grid
    uh = as_spectral(project(as_spectral(u0))).data
    k1, k2, k3 = grid.xi_eff
    inv = np.sqrt(grid.inv_kmag_eff_sq)
    n1, n2, n3 = k1 * inv, k2 * inv, k3 * inv
    lam_t = omega * n3 * t
    c, s = np.cos(lam_t), np.sin(lam_t)
    cross = np.stack(
        [
            n2 * uh[2] - n3 * uh[1],
            n3 * uh[0] - n1 * uh[2],
            n1 * uh[1] - n2 * uh[0],
        ]
    )
    out = c * uh - s * cross
    zero = grid.kmag_eff_sq == 0
    if zero.any():
        cz, sz = math.cos(omega * t), math.sin(omega * t)
        u1, u2 = uh[0][zero], uh[1][zero]
        out[0][zero] = cz * u1 + sz * u2
        out[1][zero] = cz * u2 - sz * u1
        out[2][zero] = uh[2][zero]
    return spectral_field(grid, out)


def energy(u: Field) -> float:
    n = l2_norm_spectral(u)
    return n * n


def snapshot_grid(times: Sequence[float]) -> tuple[float, ...]:
    return tuple(sorted(set(float(t) for t in times)))
