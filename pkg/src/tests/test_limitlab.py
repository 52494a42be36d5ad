# src/tests/test_limitlab.py

import math

import numpy as np
import pytest

from rarefaction_lab.errors import ConfigError, DomainError, FitError
from rarefaction_lab.gasdyn import GasModel, RightState, build_cutoff_wave, build_exact_wave
from rarefaction_lab.limitlab import (
    PerturbationFields, SweepConfig, SweepRecord, a_priori_check, cutoff_gap,
    energy_functional, fit_rate, fit_records, perturbation_fields, reformulated_residual,
    relative_entropy, run_case, source_terms,
)
from rarefaction_lab.nssolver import (
    FieldState, Grid, SolverConfig, advance_to, cell_centers, init_from_wave,
)
from rarefaction_lab.smoothwave import (
    RateLaw, build_approx_wave, eval_approx_wave, make_schedule, perturbation_rates,
    rate_exponents,
)

EPS = 1e-3


def _wave(gamma=2.0, mu=0.3, delta=0.25, rho_plus=1.0, u_plus=0.0):
    exact = build_exact_wave(GasModel(gamma), RightState(rho_plus, u_plus))
    return build_approx_wave(build_cutoff_wave(exact, mu), delta)


def _synthetic(phi, psi, x, epsilon=EPS, rho_bar=None, u_bar_x=None):
    n = x.size
    rb = np.ones(n) if rho_bar is None else rho_bar
    return PerturbationFields(
        x=x, dx=float(x[1] - x[0]), epsilon=epsilon,
        phi=phi, psi=psi, rho=rb + phi, u=psi,
        rho_bar=rb, u_bar=np.zeros(n), rho_bar_x=np.zeros(n),
        u_bar_x=np.zeros(n) if u_bar_x is None else u_bar_x, u_bar_xx=np.zeros(n),
    )


def _point_state(aw, grid, t):
    s = eval_approx_wave(aw, cell_centers(grid), t)
    rho = np.asarray(s.rho)
    return FieldState(grid=grid, rho=rho, m=rho * np.asarray(s.u), t=t)


def _small_config(**overrides):
    params = dict(gamma=2.0, rho_plus=1.0, u_plus=0.0, epsilons=(0.05, 0.02), h=0.1,
                  t_end=0.2, c_mu=0.1, cells_per_delta=5.0)
    params.update(overrides)
    return SweepConfig(**params)


# ─── Perturbation fields and energy ───────────────────────────────────────────

def test_fields_vanish_on_the_wave_itself():
    aw = _wave()
    grid = Grid(-16.0, 16.0, 400)
    fields = perturbation_fields(_point_state(aw, grid, 0.4), aw, EPS)
    assert np.max(np.abs(fields.phi)) == 0.0
    assert np.max(np.abs(fields.psi)) <= 1e-14
    report = energy_functional(fields, aw, 0.4)
    assert report.e_quadratic <= 1e-20


def test_quadratic_integral_of_sine():
    n = 64
    x = (np.arange(n) + 0.5) * 2.0 * math.pi / n
    fields = _synthetic(np.sin(x), np.zeros(n), x)
    report = energy_functional(fields, _wave(), 0.0)
    assert report.e_quadratic == pytest.approx(math.pi / EPS, rel=1e-12)


def test_zero_fields_give_zero_energy():
    x = np.linspace(0.0, 1.0, 50)
    report = energy_functional(_synthetic(np.zeros(50), np.zeros(50), x), _wave(), 0.0)
    assert report.e_quadratic == 0.0
    assert report.e_gradient == 0.0
    assert report.dissipation == 0.0
    assert report.dissipation_rate == 0.0
    assert report.relative_entropy == 0.0
    assert report.bound_ratio == 0.0


def test_energy_is_quadratic():
    x = np.linspace(-3.0, 3.0, 301)
    phi, psi = 0.01 * np.exp(-x ** 2), 0.02 * x * np.exp(-x ** 2)
    ux = 0.5 * np.exp(-x ** 2)
    one = energy_functional(_synthetic(phi, psi, x, u_bar_x=ux), _wave(), 0.0)
    two = energy_functional(_synthetic(2 * phi, 2 * psi, x, u_bar_x=ux), _wave(), 0.0)
    assert two.e_quadratic == pytest.approx(4 * one.e_quadratic, rel=1e-12)
    assert two.e_gradient == pytest.approx(4 * one.e_gradient, rel=1e-12)
    assert two.dissipation_rate == pytest.approx(4 * one.dissipation_rate, rel=1e-12)


def test_energy_components_nonnegative_for_random_fields():
    rng = np.random.default_rng(7)
    x = np.linspace(-2.0, 2.0, 201)
    for _ in range(5):
        phi = rng.normal(scale=0.05, size=x.size)
        psi = rng.normal(scale=0.1, size=x.size)
        rb = rng.uniform(0.3, 1.0, size=x.size)
        ux = rng.uniform(0.0, 2.0, size=x.size)
        fields = _synthetic(phi, psi, x, rho_bar=rb, u_bar_x=ux)
        first = energy_functional(fields, _wave(), 0.0)
        second = energy_functional(fields, _wave(), 0.1, previous=first)
        for value in (second.e_quadratic, second.e_gradient, second.dissipation,
                      second.dissipation_rate, second.relative_entropy, second.bound_ratio):
            assert value >= 0.0


def test_dissipation_accumulates_by_trapezoid_in_scaled_time():
    x = np.linspace(-3.0, 3.0, 301)
    fields = _synthetic(0.01 * np.exp(-x ** 2), 0.01 * np.exp(-x ** 2), x, u_bar_x=np.ones(301))
    aw = _wave()
    first = energy_functional(fields, aw, 0.0)
    second = energy_functional(fields, aw, 0.1, previous=first)
    assert second.dissipation == pytest.approx(first.dissipation_rate * 0.1 / EPS, rel=1e-12)
    psi_y_only = fields.integral_dy(fields.d_y(fields.psi) ** 2) * 0.1 / EPS
    assert second.dissipation >= psi_y_only


def test_bound_ratio_uses_energy_law():
    x = np.linspace(-3.0, 3.0, 301)
    fields = _synthetic(0.01 * np.exp(-x ** 2), np.zeros(301), x)
    aw = _wave()
    report = energy_functional(fields, aw, 0.0)
    law = RateLaw(0.5 - 1.0 / 6.0, -0.5)
    assert report.bound_ratio == pytest.approx(report.e_total / law(EPS), rel=1e-12)


def test_bound_ratio_keeps_running_peak_across_reports():
    x = np.linspace(-3.0, 3.0, 301)
    aw = _wave()
    law = RateLaw(0.5 - 1.0 / 6.0, -0.5)
    loud = energy_functional(_synthetic(np.exp(-x ** 2), np.zeros(301), x), aw, 0.0)
    quiet = _synthetic(np.zeros(301), np.zeros(301), x)
    second = energy_functional(quiet, aw, 0.1, previous=loud)
    third = energy_functional(quiet, aw, 0.2, previous=second)
    assert loud.e_total > 0.0
    assert third.e_total == 0.0
    assert third.peak == loud.e_total
    assert third.bound_ratio == pytest.approx((loud.e_total + third.dissipation) / law(EPS), rel=1e-12)


def test_scaled_gradient_integral_matches_y_grid():
    eps = 0.01
    x = np.linspace(-10.0, 10.0, 4001)
    phi = np.exp(-x ** 2)
    fields = _synthetic(phi, np.zeros_like(phi), x, epsilon=eps)
    via_x = fields.integral_dy(fields.d_y(phi) ** 2)

    y = x / eps
    dy = y[1] - y[0]
    resampled = np.exp(-(eps * y) ** 2)
    direct = float(np.sum(np.gradient(resampled, dy) ** 2) * dy)
    assert via_x == pytest.approx(direct, rel=1e-8)
    assert via_x == pytest.approx(eps * math.sqrt(math.pi / 2.0), rel=1e-4)


def test_relative_entropy_is_zero_at_the_wave_and_positive_elsewhere():
    x = np.linspace(-1.0, 1.0, 101)
    gas = GasModel(1.4)
    zero = _synthetic(np.zeros(101), np.zeros(101), x)
    assert np.all(relative_entropy(zero, gas) == 0.0)
    bumped = _synthetic(0.2 * np.cos(x), 0.1 * np.sin(x), x, rho_bar=np.full(101, 0.7))
    assert np.all(relative_entropy(bumped, gas) >= 0.0)


# ─── Source terms and reformulated residual ───────────────────────────────────

def test_source_terms_reduce_to_curvature_without_perturbation():
    aw = _wave()
    grid = Grid(-16.0, 16.0, 400)
    state = _point_state(aw, grid, 0.5)
    fields = perturbation_fields(state, aw, EPS)
    fields.phi[:] = 0.0
    fields.psi[:] = 0.0
    fields.rho[:] = fields.rho_bar
    f, g = source_terms(fields, aw.gas)
    assert np.all(f == 0.0)
    assert g == pytest.approx(-EPS ** 2 * fields.u_bar_xx, rel=1e-15, abs=0.0)


def test_source_terms_vanish_on_constant_wave():
    x = np.linspace(0.0, 1.0, 20)
    fields = _synthetic(np.full(20, 0.1), np.full(20, -0.2), x)
    f, g = source_terms(fields, GasModel(2.0))
    assert np.all(f == 0.0)
    assert np.all(g == 0.0)


def test_reformulated_residual_needs_ordered_states():
    aw = _wave()
    state = init_from_wave(aw, Grid(-16.0, 16.0, 400))
    with pytest.raises(DomainError):
        reformulated_residual(state, state, aw, EPS)


def test_reformulated_residual_converges_under_refinement():
    aw = _wave()
    config = SolverConfig(epsilon=EPS, t_end=1.0)
    t_mid = 0.5
    norms = []
    for n in (1600, 3200, 6400):
        grid = Grid(-16.0, 16.0, n)
        lag = grid.dx
        before = advance_to(init_from_wave(aw, grid), config, aw, t_mid - lag)
        after = advance_to(before, config, aw, t_mid + lag)
        norms.append(reformulated_residual(before, after, aw, EPS).l1)
    orders = [math.log2(norms[i] / norms[i + 1]) for i in range(2)]
    assert min(orders) >= 1.5


# ─── A priori monitor and cut-off gap ─────────────────────────────────────────

def test_a_priori_check_flags():
    x = np.linspace(-3.0, 3.0, 301)
    sched = make_schedule(GasModel(2.0), 1e-6)
    quiet = a_priori_check(_synthetic(1e-3 * np.exp(-x ** 2), np.zeros(301), x), sched)
    assert quiet.ok
    loud = a_priori_check(_synthetic(0.5 * np.exp(-x ** 2), np.zeros(301), x), sched)
    assert not loud.phi_ok
    assert loud.phi_inf == pytest.approx(0.5, rel=1e-3)


def test_cutoff_gap_equals_cut_level_for_gamma_three():
    exact = build_exact_wave(GasModel(3.0), RightState(1.0, 0.0))
    gap = cutoff_gap(build_cutoff_wave(exact, 0.02))
    half = cutoff_gap(build_cutoff_wave(exact, 0.01))
    assert gap.density == pytest.approx(0.02, abs=1e-9)
    assert gap.density / half.density == pytest.approx(2.0, abs=1e-9)
    assert gap.total >= gap.density


def test_cutoff_gap_halves_with_cut_level_for_gamma_two():
    exact = build_exact_wave(GasModel(2.0), RightState(1.0, 0.0))
    gaps = [cutoff_gap(build_cutoff_wave(exact, mu)).density for mu in (0.2, 0.1, 0.05)]
    for a, b in zip(gaps, gaps[1:]):
        assert 1.8 <= a / b <= 2.2


def test_cutoff_gap_vanishes_with_cut_level():
    exact = build_exact_wave(GasModel(2.0), RightState(1.0, 0.0))
    assert cutoff_gap(build_cutoff_wave(exact, 1e-8)).total <= 1e-7


# ─── Rate fits ────────────────────────────────────────────────────────────────

EPSILONS = [1e-2, 5e-3, 2e-3, 1e-3, 5e-4]


def test_fit_recovers_exact_power():
    law = rate_exponents(GasModel(2.0)).density
    fit = fit_rate(EPSILONS, [e ** (1.0 / 6.0) for e in EPSILONS], law)
    assert fit.slope == pytest.approx(1.0 / 6.0, abs=1e-10)
    assert fit.intercept == pytest.approx(0.0, abs=1e-9)
    assert fit.residual < 1e-12


def test_fit_ratio_series_recovers_constant():
    law = rate_exponents(GasModel(2.0)).momentum
    errors = [3.0 * e ** 0.125 * abs(math.log(e)) ** -0.5 for e in EPSILONS]
    fit = fit_rate(EPSILONS, errors, law)
    assert fit.ratio_series == pytest.approx([3.0] * len(EPSILONS), abs=1e-9)


def test_fit_is_scale_invariant():
    law = RateLaw(0.2, 1.0)
    errors = [e ** 0.2 * abs(math.log(e)) * (1 + 0.1 * i) for i, e in enumerate(EPSILONS)]
    base = fit_rate(EPSILONS, errors, law)
    scaled = fit_rate(EPSILONS, [7.0 * e for e in errors], law)
    assert scaled.slope == pytest.approx(base.slope, abs=1e-12)
    assert scaled.intercept - base.intercept == pytest.approx(math.log(7.0), abs=1e-12)


@pytest.mark.parametrize("eps,errs", [
    ([1e-2, 1e-3], [0.1, 0.05]),
    ([1e-2, 1e-3, 1e-4], [0.1, 0.0, 0.01]),
    ([1e-2, 1e-3, 1e-4], [0.1, float("nan"), 0.01]),
    ([1.0, 1e-3, 1e-4], [0.1, 0.05, 0.01]),
])
def test_fit_rejects_degenerate_input(eps, errs):
    with pytest.raises(FitError):
        fit_rate(eps, errs, RateLaw(0.1, 0.0))


def test_fit_records_uses_log_augmented_branch_for_gamma_three():
    records = [
        SweepRecord(epsilon=e, mu=0.1, delta=0.1, err_rho_inf=e ** (1 / 7) * abs(math.log(e)),
                    err_m_inf=2.0 * e ** (1 / 7) * abs(math.log(e)), energy_peak=0.0,
                    dissipation_total=0.0, runtime=0.0)
        for e in EPSILONS
    ]
    fits = fit_records(records, GasModel(3.0))
    assert fits["density"].ratio_series == pytest.approx([1.0] * 5, rel=1e-12)
    assert fits["momentum"].ratio_series == pytest.approx([2.0] * 5, rel=1e-12)
    assert "phi" not in fits and "psi" not in fits


@pytest.mark.parametrize("gamma,phi_law,psi_law", [
    (2.0, (1 / 6, -0.25), (1 / 8, -0.5)),
    (3.0, (1 / 7, -0.5), (1 / 7, -0.5)),
    (5.0, (1 / 9, -1.0), (6 / 36, -0.5)),
])
def test_fit_records_fits_perturbation_sup_norms(gamma, phi_law, psi_law):
    def law(e, exponent, log_power):
        return e ** exponent * abs(math.log(e)) ** log_power

    records = [
        SweepRecord(epsilon=e, mu=0.1, delta=0.1, err_rho_inf=e, err_m_inf=e, energy_peak=0.0,
                    dissipation_total=0.0, runtime=0.0,
                    phi_inf=1.5 * law(e, *phi_law), psi_inf=0.5 * law(e, *psi_law))
        for e in EPSILONS
    ]
    fits = fit_records(records, GasModel(gamma))
    assert fits["phi"].ratio_series == pytest.approx([1.5] * 5, rel=1e-12)
    assert fits["psi"].ratio_series == pytest.approx([0.5] * 5, rel=1e-12)


# ─── Sweep configuration and single runs ──────────────────────────────────────

def test_sweep_config_defaults_sample_times():
    config = _small_config()
    assert len(config.sample_times) == 8
    assert config.sample_times[0] == pytest.approx(0.1)
    assert config.sample_times[-1] == pytest.approx(0.2)
    assert config.order == 2
    assert config.cfl == 0.45


@pytest.mark.parametrize("overrides,key", [
    ({"h": 0.3}, "h"),
    ({"epsilons": (0.02, 0.05)}, "epsilons"),
    ({"epsilons": ()}, "epsilons"),
    ({"c_mu": 1.0}, "epsilons"),
    ({"gamma": 1.0}, "gamma"),
    ({"rho_plus": -1.0}, "rho_plus"),
    ({"sample_times": (0.05, 0.2)}, "sample_times"),
])
def test_sweep_config_validation(overrides, key):
    with pytest.raises(ConfigError) as exc:
        _small_config(**overrides)
    assert exc.value.key == key


def test_run_case_is_deterministic_and_complete():
    config = _small_config()
    first = run_case(config, 0.05, keep_snapshot=True)
    second = run_case(config, 0.05)
    assert first.same_result(second)
    assert first.err_rho_inf > 0.0
    assert first.err_m_inf > 0.0
    assert first.energy_peak >= 0.0
    assert first.dissipation_total >= 0.0
    assert first.n_cells > 0
    assert first.steps > 0
    assert first.runtime >= 0.0
    assert first.mu == pytest.approx(0.1 * 0.05 ** (1 / 6) * abs(math.log(0.05)))
    energy_law = perturbation_rates(GasModel(2.0)).energy
    assert first.bound_ratio == pytest.approx(
        (first.energy_peak + first.dissipation_total) / energy_law(0.05), rel=1e-12)
    assert 0.0 < first.min_density < math.inf
    assert set(first.snapshot) == {"x", "rho_eps", "rho_exact", "m_eps", "m_exact"}
    assert first.snapshot["x"].size == first.n_cells
    assert second.snapshot is None
