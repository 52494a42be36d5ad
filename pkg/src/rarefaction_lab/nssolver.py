# src/rarefaction_lab/nssolver.py
"""
Explicit finite-volume solver for the 1-D isentropic Navier–Stokes system

    ρ_t + m_x = 0,
    m_t + (m²/ρ + p(ρ))_x = ε u_xx,      u = m/ρ,

on a truncated domain whose ghost cells carry the time-exact approximate
rarefaction wave. Hyperbolic fluxes are local Lax–Friedrichs (Rusanov);
order 2 adds minmod-limited MUSCL reconstruction of (ρ, u) and Heun time
stepping. The viscous term is a central difference of u in flux form.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from .errors import ConfigError, StiffnessError, VacuumBreachError
from .smoothwave import TAIL_DELTAS, ApproxWave, eval_approx_wave

LOG = logging.getLogger(__name__)

NUM_GHOSTS = 2
MIN_CELLS  = 16
DT_FLOOR   = 1e-14
MAX_CFL    = 0.9


# ─── Grid, state, configuration ───────────────────────────────────────────────

@dataclass(frozen=True)
class Grid:
    x_left:  float
    x_right: float
    n_cells: int

    def __post_init__(self):
        if not self.x_left < self.x_right:
            raise ConfigError("grid", f"need x_left < x_right, got [{self.x_left}, {self.x_right}]")
        if self.n_cells < MIN_CELLS:
            raise ConfigError("grid", f"need at least {MIN_CELLS} cells, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.n_cells


def cell_centers(grid: Grid) -> np.ndarray:
    return grid.x_left + (np.arange(grid.n_cells) + 0.5) * grid.dx


def _ghost_centers(grid: Grid) -> np.ndarray:
    k = np.arange(NUM_GHOSTS, 0, -1) - 0.5
    left = grid.x_left - k * grid.dx
    right = grid.x_right + k[::-1] * grid.dx
    return np.concatenate([left, right])


def make_grid_for(aw: ApproxWave, t_end: float, cells_per_delta: float) -> Grid:
    """
    A grid that holds the initial transition (±60δ) and keeps both fan
    edges at least 60δ away from the boundaries up to t_end.
    """
    d = aw.delta
    x_left = min(0.0, aw.profile.w_minus * t_end) - TAIL_DELTAS * d
    x_right = max(0.0, aw.profile.w_plus * t_end) + TAIL_DELTAS * d
    n = int(math.ceil((x_right - x_left) / d * cells_per_delta))
    return Grid(x_left=x_left, x_right=x_right, n_cells=max(n, MIN_CELLS))


@dataclass(frozen=True, eq=False)
class FieldState:
    grid:        Grid
    rho:         np.ndarray
    m:           np.ndarray
    t:           float
    # mass that entered through the two boundaries since initialisation
    mass_inflow: float = 0.0

    def __post_init__(self):
        n = self.grid.n_cells
        if self.rho.shape != (n,) or self.m.shape != (n,):
            raise ConfigError("state", f"arrays must have length {n}")

    @property
    def u(self) -> np.ndarray:
        return self.m / self.rho


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float
    cfl:     float = 0.45
    order:   int = 2
    t_end:   float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ConfigError("epsilon", f"viscosity must be positive, got {self.epsilon!r}")
        if not 0.0 < self.cfl <= MAX_CFL:
            raise ConfigError("cfl", f"must lie in (0, {MAX_CFL}], got {self.cfl!r}")
        if self.order not in (1, 2):
            raise ConfigError("order", f"must be 1 or 2, got {self.order!r}")
        if not self.t_end > 0.0:
            raise ConfigError("t_end", f"must be positive, got {self.t_end!r}")


@dataclass
class RunMonitor:
    """Runtime bounds a healthy run keeps; checked, never assumed."""
    min_density:   float = math.inf
    band_low:      float = math.inf   # min ρ/ρ̄
    band_high:     float = 0.0        # max ρ/ρ̄
    initial_speed: Optional[float] = None
    max_speed:     float = 0.0
    steps:         int = 0

    @property
    def speed_growth(self) -> float:
        if not self.initial_speed:
            return 1.0
        return self.max_speed / self.initial_speed

    def observe_band(self, state: FieldState, aw: ApproxWave):
        rho_bar = np.asarray(eval_approx_wave(aw, cell_centers(state.grid), state.t).rho)
        ratio = state.rho / rho_bar
        self.band_low = min(self.band_low, float(ratio.min()))
        self.band_high = max(self.band_high, float(ratio.max()))


# ─── Initial data ─────────────────────────────────────────────────────────────

def init_from_wave(aw: ApproxWave, grid: Grid) -> FieldState:
    """Cell averages of (ρ̄, ρ̄ū)(·, 0) by 3-point Gauss quadrature per cell."""
    reach = TAIL_DELTAS * aw.delta
    if grid.x_left > -reach or grid.x_right < reach:
        raise ConfigError(
            "grid",
            f"domain [{grid.x_left:g}, {grid.x_right:g}] does not cover the initial "
            f"transition [-{reach:g}, {reach:g}]",
        )
    nodes, weights = np.polynomial.legendre.leggauss(3)
    xc = cell_centers(grid)
    rho = np.zeros_like(xc)
    m = np.zeros_like(xc)
    for node, weight in zip(nodes, weights):
        s = eval_approx_wave(aw, xc + 0.5 * grid.dx * node, 0.0)
        r = np.asarray(s.rho)
        rho += 0.5 * weight * r
        m += 0.5 * weight * r * np.asarray(s.u)
    return FieldState(grid=grid, rho=rho, m=m, t=0.0)


def mass_total(state: FieldState) -> float:
    return float(np.sum(state.rho) * state.grid.dx)


# ─── Spatial operator ─────────────────────────────────────────────────────────

def minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _extend(state_rho, state_u, ghost_rho, ghost_u):
    g = NUM_GHOSTS
    rho = np.concatenate([ghost_rho[:g], state_rho, ghost_rho[g:]])
    u = np.concatenate([ghost_u[:g], state_u, ghost_u[g:]])
    return rho, u


def _faces(q: np.ndarray, n: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Left/right states at the n+1 faces of the interior cells."""
    if order == 1:
        return q[1:n + 2], q[2:n + 3]
    slope = minmod(q[1:-1] - q[:-2], q[2:] - q[1:-1])
    left = q[1:n + 2] + 0.5 * slope[0:n + 1]
    right = q[2:n + 3] - 0.5 * slope[1:n + 2]
    return left, right


def _rhs(grid: Grid, rho: np.ndarray, m: np.ndarray, t: float,
         config: SolverConfig, aw: ApproxWave):
    """
    Semi-discrete right-hand side: (dρ/dt, dm/dt, mass inflow rate).
    """
    gamma = aw.gas.gamma
    n, dx = grid.n_cells, grid.dx
    ghost = eval_approx_wave(aw, _ghost_centers(grid), t)
    ext_rho, ext_u = _extend(rho, m / rho, np.asarray(ghost.rho), np.asarray(ghost.u))

    rl, rr = _faces(ext_rho, n, config.order)
    ul, ur = _faces(ext_u, n, config.order)
    cl, cr = rl ** (0.5 * (gamma - 1.0)), rr ** (0.5 * (gamma - 1.0))
    ml, mr = rl * ul, rr * ur
    fl_mass, fr_mass = ml, mr
    fl_mom = ml * ul + rl ** gamma / gamma
    fr_mom = mr * ur + rr ** gamma / gamma
    a = np.maximum(np.abs(ul) + cl, np.abs(ur) + cr)

    f_mass = 0.5 * (fl_mass + fr_mass) - 0.5 * a * (rr - rl)
    f_mom = 0.5 * (fl_mom + fr_mom) - 0.5 * a * (mr - ml)
    # viscous flux ε·u_x at the same faces
    f_mom -= config.epsilon * (ext_u[2:n + 3] - ext_u[1:n + 2]) / dx

    drho = -(f_mass[1:] - f_mass[:-1]) / dx
    dm = -(f_mom[1:] - f_mom[:-1]) / dx
    inflow = f_mass[0] - f_mass[-1]
    return drho, dm, inflow


def _check_density(rho: np.ndarray, t: float):
    bad = ~(rho > 0.0)
    if np.any(bad):
        cell = int(np.argmax(bad))
        raise VacuumBreachError(cell=cell, time=t, value=float(rho[cell]))


def stable_dt(state: FieldState, config: SolverConfig, gamma: float) -> Tuple[float, float]:
    """(dt, max characteristic speed) for the current state."""
    rho = state.rho
    speed = float(np.max(np.abs(state.m / rho) + rho ** (0.5 * (gamma - 1.0))))
    dx = state.grid.dx
    dt_wave = dx / speed
    dt_visc = dx * dx * float(rho.min()) / (2.0 * config.epsilon)
    dt = config.cfl * min(dt_wave, dt_visc)
    if not np.isfinite(dt) or dt <= DT_FLOOR * max(1.0, abs(state.t)):
        raise StiffnessError(dt=dt, time=state.t)
    return dt, speed


def step(state: FieldState, config: SolverConfig, aw: ApproxWave,
         dt: Optional[float] = None, monitor: Optional[RunMonitor] = None) -> FieldState:
    """One explicit step (forward Euler for order 1, Heun for order 2)."""
    _check_density(state.rho, state.t)
    dt_max, speed = stable_dt(state, config, aw.gas.gamma)
    dt = dt_max if dt is None else dt
    grid, t = state.grid, state.t

    d0, m0, in0 = _rhs(grid, state.rho, state.m, t, config, aw)
    rho1 = state.rho + dt * d0
    m1 = state.m + dt * m0
    _check_density(rho1, t + dt)
    if config.order == 1:
        rho_new, m_new, inflow = rho1, m1, dt * in0
    else:
        d1, m1dot, in1 = _rhs(grid, rho1, m1, t + dt, config, aw)
        rho_new = 0.5 * state.rho + 0.5 * (rho1 + dt * d1)
        m_new = 0.5 * state.m + 0.5 * (m1 + dt * m1dot)
        inflow = 0.5 * dt * (in0 + in1)
        _check_density(rho_new, t + dt)

    if monitor is not None:
        if monitor.initial_speed is None:
            monitor.initial_speed = speed
        monitor.max_speed = max(monitor.max_speed, speed)
        monitor.min_density = min(monitor.min_density, float(rho_new.min()))
        monitor.steps += 1
    return replace(state, rho=rho_new, m=m_new, t=t + dt,
                   mass_inflow=state.mass_inflow + inflow)


def advance_to(state: FieldState, config: SolverConfig, aw: ApproxWave,
               t_target: float, monitor: Optional[RunMonitor] = None) -> FieldState:
    """Step until t_target, shortening the last step to land on it exactly."""
    if t_target < state.t:
        raise ConfigError("t_target", f"cannot advance backwards from t={state.t} to {t_target}")
    start, steps = state.t, 0
    while state.t < t_target:
        dt, _ = stable_dt(state, config, aw.gas.gamma)
        last = state.t + dt >= t_target
        if last:
            dt = t_target - state.t
        state = step(state, config, aw, dt=dt, monitor=monitor)
        steps += 1
        if last:
            state = replace(state, t=t_target)
    LOG.debug("advanced t=%g -> %g in %d steps", start, t_target, steps)
    return state


def write_snapshot(path, state: FieldState):
    """CSV snapshot with columns x, rho, m, u at 17 significant digits."""
    frame = pd.DataFrame({
        "x": cell_centers(state.grid), "rho": state.rho, "m": state.m, "u": state.u,
    })
    frame.to_csv(path, index=False, float_format="%.17g")
