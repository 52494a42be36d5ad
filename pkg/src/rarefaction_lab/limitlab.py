# src/rarefaction_lab/limitlab.py
"""
Experiment harness for the vanishing-viscosity limit: one viscous run per
ε, sup-norm errors against the exact vacuum rarefaction, the scaled
perturbation energy, and log-log rate fits across an ε sweep.

Scaled variables are y = x/ε, τ = t/ε. Integrals over y are computed on
the x-grid by ∫f dy = ε⁻¹∫f dx with derivatives ∂_y = ε∂_x.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DomainError, FitError
from .gasdyn import (
    CutoffWave, GasModel, RightState, build_cutoff_wave, build_exact_wave,
    eval_cutoff_wave, eval_exact_wave,
)
from .nssolver import (
    FieldState, RunMonitor, SolverConfig, advance_to, cell_centers,
    init_from_wave, make_grid_for,
)
from .smoothwave import (
    ApproxWave, RateLaw, Schedule, build_approx_wave, eval_approx_wave,
    make_schedule, perturbation_rates, rate_exponents,
)

LOG = logging.getLogger(__name__)

DEFAULT_SAMPLES = 8
ENERGY_SUBSTEPS = 4      # energy checkpoints per sample interval
SPEED_SLACK     = 1.10


# ─── Sweep configuration and records ──────────────────────────────────────────

@dataclass(frozen=True)
class SweepConfig:
    gamma:           float
    rho_plus:        float
    u_plus:          float
    epsilons:        Tuple[float, ...]
    h:               float
    t_end:           float
    c_mu:            float = 1.0
    cells_per_delta: float = 50.0
    order:           int = 2
    cfl:             float = 0.45
    sample_times:    Tuple[float, ...] = ()

    def __post_init__(self):
        if not 0.0 < self.h < self.t_end:
            raise ConfigError("h", f"need 0 < h < t_end, got h={self.h}, t_end={self.t_end}")
        if len(self.epsilons) == 0:
            raise ConfigError("epsilons", "at least one viscosity is required")
        if any(b >= a for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise ConfigError("epsilons", "must be strictly decreasing")
        if not self.cells_per_delta > 0:
            raise ConfigError("cells_per_delta", "must be positive")
        if not self.sample_times:
            times = tuple(np.linspace(self.h, self.t_end, DEFAULT_SAMPLES).tolist())
            object.__setattr__(self, "sample_times", times)
        elif any(not self.h <= s <= self.t_end for s in self.sample_times):
            raise ConfigError("sample_times", f"must lie in [h, t_end] = [{self.h}, {self.t_end}]")
        # γ and ρ₊ are validated by their own types
        for eps in self.epsilons:
            try:
                make_schedule(self.gas, eps, self.c_mu, self.right)
            except DomainError as e:
                raise ConfigError("epsilons", f"infeasible schedule at epsilon={eps:g}: {e}") from e

    @property
    def gas(self) -> GasModel:
        try:
            return GasModel(self.gamma)
        except DomainError as e:
            raise ConfigError("gamma", str(e)) from e

    @property
    def right(self) -> RightState:
        try:
            return RightState(self.rho_plus, self.u_plus)
        except DomainError as e:
            raise ConfigError("rho_plus", str(e)) from e


def _same(a, b) -> bool:
    return a == b or (isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b))


@dataclass
class SweepRecord:
    epsilon:           float
    mu:                float
    delta:             float
    err_rho_inf:       float
    err_m_inf:         float
    energy_peak:       float
    dissipation_total: float
    runtime:           float
    phi_inf:           float = 0.0
    psi_inf:           float = 0.0
    bound_ratio:       float = 0.0
    a_priori_ok:       bool = True
    band_low:          float = math.nan
    band_high:         float = math.nan
    min_density:       float = math.nan
    speed_growth:      float = 1.0
    n_cells:           int = 0
    steps:             int = 0
    snapshot:          Optional[Dict[str, np.ndarray]] = field(default=None, repr=False, compare=False)

    def same_result(self, other: "SweepRecord") -> bool:
        """Field-by-field equality ignoring wall-clock runtime."""
        skip = {"runtime", "snapshot"}
        return all(_same(getattr(self, k), getattr(other, k)) for k in self.__dataclass_fields__ if k not in skip)


class RateFit(NamedTuple):
    slope:        float
    intercept:    float
    residual:     float
    ratio_series: Tuple[float, ...]


@dataclass
class EnergyReport:
    t:                float
    e_quadratic:      float
    e_gradient:       float
    dissipation:      float
    dissipation_rate: float
    relative_entropy: float
    peak:             float   # running max of e_total over the chain of reports
    bound_ratio:      float

    @property
    def e_total(self) -> float:
        return self.e_quadratic + self.e_gradient


# ─── Perturbation fields ──────────────────────────────────────────────────────

@dataclass
class PerturbationFields:
    """(φ, ψ) = (ρ, u) − (ρ̄, ū) on cell centers, with the wave sampled alongside."""
    x:          np.ndarray
    dx:         float
    epsilon:    float
    phi:        np.ndarray
    psi:        np.ndarray
    rho:        np.ndarray
    u:          np.ndarray
    rho_bar:    np.ndarray
    u_bar:      np.ndarray
    rho_bar_x:  np.ndarray
    u_bar_x:    np.ndarray
    u_bar_xx:   np.ndarray

    def d_x(self, f: np.ndarray) -> np.ndarray:
        return np.gradient(f, self.dx)

    def d_y(self, f: np.ndarray) -> np.ndarray:
        return self.epsilon * self.d_x(f)

    def integral_dy(self, f: np.ndarray) -> float:
        return float(np.sum(f) * self.dx / self.epsilon)


def perturbation_fields(state: FieldState, aw: ApproxWave, epsilon: float) -> PerturbationFields:
    x = cell_centers(state.grid)
    s = eval_approx_wave(aw, x, state.t)
    rho_bar, u_bar = np.asarray(s.rho), np.asarray(s.u)
    u = state.u
    return PerturbationFields(
        x=x, dx=state.grid.dx, epsilon=epsilon,
        phi=state.rho - rho_bar, psi=u - u_bar, rho=state.rho, u=u,
        rho_bar=rho_bar, u_bar=u_bar, rho_bar_x=np.asarray(s.rho_x),
        u_bar_x=np.asarray(s.u_x), u_bar_xx=np.asarray(s.u_xx),
    )


def relative_entropy(fields: PerturbationFields, gas: GasModel) -> np.ndarray:
    """ρE with E = Φ(ρ, ρ̄) + ψ²/2, Φ = (p(ρ) − p(ρ̄) − p'(ρ̄)φ)/((γ−1)ρ)."""
    g = gas.gamma
    rho, rho_bar = fields.rho, fields.rho_bar
    excess = (rho ** g - rho_bar ** g) / g - rho_bar ** (g - 1.0) * fields.phi
    big_phi = excess / ((g - 1.0) * rho)
    return rho * (big_phi + 0.5 * fields.psi ** 2)


def energy_functional(fields: PerturbationFields, aw: ApproxWave, t: float,
                      previous: Optional[EnergyReport] = None) -> EnergyReport:
    """
    Weighted energy of the perturbation at time t. The dissipation
    integral is accumulated from `previous` by the trapezoid rule in τ.
    """
    g = aw.gas.gamma
    eps = fields.epsilon
    rb = fields.rho_bar
    phi, psi = fields.phi, fields.psi
    phi_y, psi_y = fields.d_y(phi), fields.d_y(psi)
    psi_yy = fields.d_y(psi_y)
    ub_y = eps * fields.u_bar_x

    e_quad = fields.integral_dy(rb * psi ** 2 + rb ** (g - 2.0) * phi ** 2)
    e_grad = fields.integral_dy(phi_y ** 2 + psi_y ** 2)
    rate = fields.integral_dy(
        psi_y ** 2
        + rb ** (g - 2.0) * ub_y * phi ** 2
        + rb * ub_y * psi ** 2
        + rb ** (g - 3.0) * phi_y ** 2
        + psi_yy ** 2 / rb
    )
    dissipation = 0.0
    if previous is not None:
        d_tau = (t - previous.t) / eps
        dissipation = previous.dissipation + 0.5 * (previous.dissipation_rate + rate) * d_tau

    bound = perturbation_rates(aw.gas).energy(eps)
    peak = max(e_quad + e_grad, previous.peak if previous is not None else 0.0)
    return EnergyReport(
        t=t, e_quadratic=e_quad, e_gradient=e_grad, dissipation=dissipation,
        dissipation_rate=rate,
        relative_entropy=fields.integral_dy(relative_entropy(fields, aw.gas)),
        peak=peak,
        bound_ratio=(peak + dissipation) / bound,
    )


def source_terms(fields: PerturbationFields, gas: GasModel) -> Tuple[np.ndarray, np.ndarray]:
    """f and g of the scaled perturbation system, per cell."""
    eps = fields.epsilon
    ub_y = eps * fields.u_bar_x
    rb_y = eps * fields.rho_bar_x
    ub_yy = eps * eps * fields.u_bar_xx
    rho, rb = fields.rho, fields.rho_bar
    dp = lambda r: r ** (gas.gamma - 1.0)
    f = ub_y * fields.phi + rb_y * fields.psi
    g = -ub_yy + rho * fields.psi * ub_y + rb_y * (dp(rho) - rho / rb * dp(rb))
    return f, g


class ReformulatedResidual(NamedTuple):
    x:        np.ndarray
    residual: np.ndarray
    l1:       float


def reformulated_residual(before: FieldState, after: FieldState, aw: ApproxWave,
                          epsilon: float) -> ReformulatedResidual:
    """
    Residual of φ_τ + ρψ_y + uφ_y + f at the midpoint time of two solver
    states on the same grid, φ_τ by a centered difference.
    """
    if before.grid != after.grid or not after.t > before.t:
        raise DomainError("need two states on one grid with increasing time")
    a = perturbation_fields(before, aw, epsilon)
    b = perturbation_fields(after, aw, epsilon)
    t_mid = 0.5 * (before.t + after.t)
    s = eval_approx_wave(aw, a.x, t_mid)
    mid = PerturbationFields(
        x=a.x, dx=a.dx, epsilon=epsilon,
        phi=0.5 * (a.phi + b.phi), psi=0.5 * (a.psi + b.psi),
        rho=0.5 * (a.rho + b.rho), u=0.5 * (a.u + b.u),
        rho_bar=np.asarray(s.rho), u_bar=np.asarray(s.u), rho_bar_x=np.asarray(s.rho_x),
        u_bar_x=np.asarray(s.u_x), u_bar_xx=np.asarray(s.u_xx),
    )
    phi_tau = epsilon * (b.phi - a.phi) / (after.t - before.t)
    f, _ = source_terms(mid, aw.gas)
    res = phi_tau + mid.rho * mid.d_y(mid.psi) + mid.u * mid.d_y(mid.phi) + f
    return ReformulatedResidual(x=a.x, residual=res, l1=float(np.sum(np.abs(res)) * a.dx))


class APrioriCheck(NamedTuple):
    phi_inf:  float
    psi_y_l2: float
    phi_ok:   bool
    psi_ok:   bool

    @property
    def ok(self) -> bool:
        return self.phi_ok and self.psi_ok


def a_priori_check(fields: PerturbationFields, schedule: Schedule) -> APrioriCheck:
    """sup|φ| ≤ ε^a and ‖ψ_y‖_{L²(dy)} ≤ 1."""
    phi_inf = float(np.max(np.abs(fields.phi)))
    psi_y_l2 = math.sqrt(fields.integral_dy(fields.d_y(fields.psi) ** 2))
    return APrioriCheck(phi_inf, psi_y_l2, phi_inf <= schedule.delta, psi_y_l2 <= 1.0)


# ─── Cut-off gap ──────────────────────────────────────────────────────────────

class GapReport(NamedTuple):
    density:  float
    momentum: float

    @property
    def total(self) -> float:
        return max(self.density, self.momentum)


def default_xi_grid(cw: CutoffWave, n: int = 10001) -> np.ndarray:
    lo = cw.base.u_minus - 1.0
    hi = cw.base.head_speed + 1.0
    return np.linspace(lo, hi, n)


def cutoff_gap(cw: CutoffWave, xi: Optional[np.ndarray] = None) -> GapReport:
    """sup over ξ of |(ρ_μ, m_μ) − (ρ, m)|, componentwise."""
    grid = default_xi_grid(cw) if xi is None else np.asarray(xi, dtype=float)
    rho_mu, _, m_mu = eval_cutoff_wave(cw, grid)
    rho, _, m = eval_exact_wave(cw.base, grid)
    return GapReport(
        density=float(np.max(np.abs(np.asarray(rho_mu) - np.asarray(rho)))),
        momentum=float(np.max(np.abs(np.asarray(m_mu) - np.asarray(m)))),
    )


# ─── Rate fitting ─────────────────────────────────────────────────────────────

def fit_rate(epsilons: Sequence[float], errors: Sequence[float], law: RateLaw) -> RateFit:
    """
    Least-squares line through (log ε, log err), plus the ratio series
    err / law(ε) whose boundedness is what the theory predicts.
    """
    eps = np.asarray(epsilons, dtype=float)
    err = np.asarray(errors, dtype=float)
    if eps.shape != err.shape or eps.size < 3:
        raise FitError(f"need at least 3 (epsilon, error) pairs, got {eps.size}")
    if np.any(~np.isfinite(err)) or np.any(err <= 0.0):
        raise FitError("errors must be finite and positive to take logarithms")
    if np.any(~((eps > 0.0) & (eps < 1.0))):
        raise FitError("epsilons must lie in (0, 1)")
    lx, ly = np.log(eps), np.log(err)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ratios = err / np.asarray(law(eps))
    return RateFit(
        slope=float(slope), intercept=float(intercept),
        residual=float(np.sqrt(np.mean(resid ** 2))),
        ratio_series=tuple(float(r) for r in ratios),
    )


def fit_records(records: Sequence[SweepRecord], gas: GasModel) -> Dict[str, RateFit]:
    """
    Density and momentum error fits, plus the sup-norm perturbation fits
    for φ and ψ when every record carries a positive value for them.
    """
    rates = rate_exponents(gas)
    eps = [r.epsilon for r in records]
    fits = {
        "density":  fit_rate(eps, [r.err_rho_inf for r in records], rates.density),
        "momentum": fit_rate(eps, [r.err_m_inf for r in records], rates.momentum),
    }
    laws = perturbation_rates(gas)
    for name, law in (("phi", laws.phi), ("psi", laws.psi)):
        values = [getattr(r, f"{name}_inf") for r in records]
        if all(math.isfinite(v) and v > 0.0 for v in values):
            fits[name] = fit_rate(eps, values, law)
        else:
            LOG.info("no %s fit: some records lack a positive %s_inf", name, name)
    return fits


# ─── One viscous run ──────────────────────────────────────────────────────────

def build_case(config: SweepConfig, epsilon: float) -> Tuple[Schedule, ApproxWave]:
    gas, right = config.gas, config.right
    schedule = make_schedule(gas, epsilon, config.c_mu, right)
    exact = build_exact_wave(gas, right)
    cutoff = build_cutoff_wave(exact, schedule.mu)
    return schedule, build_approx_wave(cutoff, schedule.delta)


def _checkpoints(config: SweepConfig) -> List[float]:
    marks = set(config.sample_times)
    marks.update(np.linspace(0.0, config.t_end, ENERGY_SUBSTEPS * len(config.sample_times) + 1)[1:].tolist())
    return sorted(marks)


def run_case(config: SweepConfig, epsilon: float, keep_snapshot: bool = False) -> SweepRecord:
    """
    Viscous run at one ε from well-prepared data, with the sup over the
    sample times of the errors against the exact vacuum wave.
    """
    started = time.perf_counter()
    schedule, aw = build_case(config, epsilon)
    exact = aw.cutoff.base
    solver = SolverConfig(epsilon=epsilon, cfl=config.cfl, order=config.order, t_end=config.t_end)
    grid = make_grid_for(aw, config.t_end, config.cells_per_delta)
    LOG.info("case epsilon=%g: mu=%.5g delta=%.5g cells=%d", epsilon, schedule.mu, schedule.delta, grid.n_cells)

    state = init_from_wave(aw, grid)
    x = cell_centers(grid)
    monitor = RunMonitor()
    energy = energy_functional(perturbation_fields(state, aw, epsilon), aw, 0.0)
    err_rho = err_m = phi_inf = psi_inf = 0.0
    a_priori_ok = True
    samples = set(config.sample_times)
    snapshot = None

    for mark in _checkpoints(config):
        state = advance_to(state, solver, aw, mark, monitor)
        fields = perturbation_fields(state, aw, epsilon)
        energy = energy_functional(fields, aw, mark, previous=energy)
        if mark not in samples:
            continue
        rho_ex, _, m_ex = (np.asarray(a) for a in eval_exact_wave(exact, x / mark))
        err_rho = max(err_rho, float(np.max(np.abs(state.rho - rho_ex))))
        err_m = max(err_m, float(np.max(np.abs(state.m - m_ex))))
        check = a_priori_check(fields, schedule)
        phi_inf = max(phi_inf, check.phi_inf)
        psi_inf = max(psi_inf, float(np.max(np.abs(fields.psi))))
        if not check.ok:
            a_priori_ok = False
            LOG.warning("epsilon=%g t=%g: a priori bound violated (sup|phi|=%.3g vs eps^a=%.3g, |psi_y|=%.3g)",
                        epsilon, mark, check.phi_inf, schedule.delta, check.psi_y_l2)
        monitor.observe_band(state, aw)
        if keep_snapshot and mark == config.sample_times[-1]:
            snapshot = {"x": x.copy(), "rho_eps": state.rho.copy(), "rho_exact": rho_ex,
                        "m_eps": state.m.copy(), "m_exact": m_ex}

    if monitor.min_density < 0.5 * schedule.mu:
        LOG.warning("epsilon=%g: density fell to %.3g, below mu/2=%.3g", epsilon, monitor.min_density, 0.5 * schedule.mu)
    if monitor.band_low < 0.5 or monitor.band_high > 1.5:
        LOG.warning("epsilon=%g: rho/rho_bar left [1/2, 3/2]: [%.3g, %.3g]", epsilon, monitor.band_low, monitor.band_high)
    if monitor.speed_growth > SPEED_SLACK:
        LOG.warning("epsilon=%g: characteristic speed grew by factor %.3g", epsilon, monitor.speed_growth)

    runtime = time.perf_counter() - started
    LOG.info("case epsilon=%g done: err_rho=%.4g err_m=%.4g steps=%d (%.1fs)",
             epsilon, err_rho, err_m, monitor.steps, runtime)
    return SweepRecord(
        epsilon=epsilon, mu=schedule.mu, delta=schedule.delta,
        err_rho_inf=err_rho, err_m_inf=err_m,
        energy_peak=energy.peak, dissipation_total=energy.dissipation, runtime=runtime,
        phi_inf=phi_inf, psi_inf=psi_inf, bound_ratio=energy.bound_ratio,
        a_priori_ok=a_priori_ok, band_low=monitor.band_low, band_high=monitor.band_high,
        min_density=monitor.min_density,
        speed_growth=monitor.speed_growth, n_cells=grid.n_cells, steps=monitor.steps,
        snapshot=snapshot,
    )
