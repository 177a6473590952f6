import numpy as np
import pytest
from numpy.testing import assert_allclose

from conditions.criteria import check_dissipativity
from config.model_file import bundled_model
from core.grid import GridFunction, trapz_values
from equilibrium.solver import trivial_equilibrium
from linearization.coefficients import linearize
from schemas.errors import BlowUpError, DomainError
from simulator.upwind import (
    boundary_inflow,
    default_perturbation,
    fit_rate,
    initial_state,
    measure_rate,
    perturbation_history,
    simulate,
    step,
)
from spectral.special import dominant_root
from tests.conftest import first_positive, make_model


@pytest.fixture(scope="module")
def sec5_512():
    model = bundled_model("sec5", grid_n=512)
    return model, first_positive(model)


def test_step_uses_cfl_time_step_and_renewal():
    model = make_model(beta="1/2", gamma="1 - s/2", mu="1 + s", grid_n=64)
    u0 = GridFunction.from_callable(model.grid, lambda s: 1 + s)
    state = initial_state(model, u0)
    nxt = step(model, state)
    h = model.grid.h
    assert nxt.dt_last == pytest.approx(0.9 / (1.0 / h + 2.0))
    assert nxt.t == pytest.approx(nxt.dt_last)
    assert nxt.u.values[0] == pytest.approx(boundary_inflow(model, state))
    # interior: u_i - dt/h (γ_i u_i - γ_{i-1} u_{i-1}) - dt μ_i u_i
    s, u, dt = model.grid.nodes, u0.values, nxt.dt_last
    flux = (1 - s / 2) * u
    i = 10
    expected = u[i] - dt / h * (flux[i] - flux[i - 1]) - dt * (1 + s[i]) * u[i]
    assert nxt.u.values[i] == pytest.approx(expected)


def test_scheme_preserves_sign():
    model = make_model(beta="2*(1+s)*exp(-Q)", gamma="1 - s/2", mu="1", grid_n=128)
    u0 = GridFunction.from_callable(model.grid, lambda s: np.where(s < 0.3, 1.0, 0.0))
    traj = simulate(model, u0, T=3.0)
    assert np.all(traj.snapshots >= 0.0)


def test_simulate_records_and_stops_at_T():
    model = make_model(beta="1/2", grid_n=64)
    u0 = GridFunction.constant(model.grid, 1.0)
    traj = simulate(model, u0, T=2.0, record_every=0.5)
    assert traj.times[0] == 0.0
    assert traj.times[-1] == pytest.approx(2.0, abs=1e-12)
    assert traj.final.t == pytest.approx(2.0, abs=1e-12)
    assert traj.snapshots.shape == (len(traj.times), 65)
    assert len(traj.times) >= 5
    assert traj.steps > 0


def test_initial_state_rejects_foreign_grid():
    model = make_model(grid_n=64)
    with pytest.raises(DomainError):
        initial_state(model, GridFunction.constant(make_model(grid_n=32).grid, 1.0))


def test_blow_up_is_reported():
    model = make_model(beta="1000", gamma="1", mu="1", grid_n=64, q_validation_max=0.0)
    u0 = GridFunction.constant(model.grid, 1.0)
    with pytest.raises(BlowUpError) as info:
        simulate(model, u0, T=50.0)
    assert info.value.t > 0
    assert info.value.exit_code == 3


def test_equilibrium_is_nearly_stationary(sec5_512):
    model, eq = sec5_512
    traj = simulate(model, eq.u_star, T=5.0)
    assert np.max(np.abs(traj.final.u.values - eq.u_star.values)) <= 0.02


def test_fit_rate_exact_exponential():
    times = np.linspace(0.0, 10.0, 201)
    fit = fit_rate(times, np.exp(-0.7 * times), 10.0)
    assert fit.rate == pytest.approx(-0.7, abs=1e-10)
    assert fit.window == (5.0, 10.0)
    assert fit.samples == 101


def test_fit_rate_falls_back_to_live_span():
    times = np.linspace(0.0, 10.0, 201)
    norms = 1e-3 * np.exp(-5.0 * times)
    fit = fit_rate(times, norms, 10.0)
    assert fit.rate == pytest.approx(-5.0, abs=1e-8)
    assert fit.window[1] <= 4.15
    assert fit.samples >= 8


def test_fit_rate_without_signal():
    times = np.linspace(0.0, 1.0, 50)
    fit = fit_rate(times, np.full(50, 1e-13), 1.0)
    assert fit.rate is None
    assert fit.samples == 0


def test_vanished_perturbation_gives_minus_infinity():
    model = make_model(beta="1/2", grid_n=64)
    eq = trivial_equilibrium(model)
    assert measure_rate(model, eq, eps=1e-13, T=0.5) == float("-inf")


def test_zero_perturbation_is_rejected():
    model = make_model(beta="1/2", grid_n=64)
    eq = trivial_equilibrium(model)
    with pytest.raises(DomainError):
        measure_rate(model, eq, v0=GridFunction.constant(model.grid, 0.0))


def test_default_perturbation_vanishes_at_ends():
    model = make_model(m=2.0, grid_n=64)
    v = default_perturbation(model).values
    assert v[0] == 0.0
    assert abs(v[-1]) < 1e-15
    assert v.max() == pytest.approx(1.0)


def test_perturbation_history_shapes(sec5_512):
    model, eq = sec5_512
    times, norms, steps = perturbation_history(model, eq, default_perturbation(model), 1e-4, 1.0)
    assert len(times) == len(norms) == steps + 1
    assert times[-1] == pytest.approx(1.0)
    assert norms[0] == pytest.approx(1e-4 * 2 / np.pi, rel=1e-4)


def test_trivial_equilibrium_decays():
    model = make_model(beta="1/2", gamma="1", mu="1", grid_n=512)
    eq = trivial_equilibrium(model)
    rate = measure_rate(model, eq, v0=GridFunction.from_callable(model.grid, lambda s: 1 - s / 2), T=6.0)
    assert rate <= -0.45
    assert rate == pytest.approx(-2.2564, abs=0.3)


def test_sec5_rate_is_negative(sec5_512):
    model, eq = sec5_512
    root = dominant_root(linearize(model, eq), (-5.0, 5.0))
    rate = measure_rate(model, eq, T=20.0)
    assert rate < 0
    assert rate == pytest.approx(root, abs=max(0.05, 0.15 * abs(root)))


@pytest.mark.slow
def test_sec5_rate_matches_dominant_root():
    model = bundled_model("sec5", grid_n=4096)
    eq = first_positive(model)
    root = dominant_root(linearize(model, eq), (-5.0, 5.0))
    rate = measure_rate(model, eq, T=40.0)
    assert rate < 0
    assert abs(rate - root) <= max(0.05, 0.1 * abs(root))


@pytest.mark.slow
def test_sec6_rate_respects_decay_certificate():
    model = bundled_model("sec6", grid_n=4096)
    eq = first_positive(model)
    kappa = check_dissipativity(linearize(model, eq)).kappa_max
    rate = measure_rate(model, eq, T=40.0)
    assert rate <= -kappa + 0.05


def test_reference_trajectory_cancels_scheme_drift(sec5_512):
    model, eq = sec5_512
    times, norms, _ = perturbation_history(model, eq, default_perturbation(model), 0.0, 2.0)
    assert_allclose(norms, 0.0, atol=0.0)


def _mass(model, values):
    return float(trapz_values(values, model.grid.h))


def _l1(model, values):
    return _mass(model, np.abs(values))


def _bump(s):
    return np.exp(-200.0 * (s - 0.3) ** 2)


def test_pure_transport_is_first_order():
    errors = []
    for n in (128, 256, 512):
        model = make_model(beta="0", gamma="1", mu="0", grid_n=n)
        traj = simulate(model, GridFunction.from_callable(model.grid, _bump), T=0.2)
        exact = _bump(model.grid.nodes - 0.2)
        errors.append(_l1(model, traj.final.u.values - exact))
    orders = [np.log2(errors[i] / errors[i + 1]) for i in range(2)]
    assert min(orders) >= 0.8
    assert errors[-1] <= 0.02


def test_mass_decays_like_exp_minus_t():
    model = make_model(beta="0", gamma="1", mu="1", grid_n=512)
    u0 = GridFunction.from_callable(model.grid, _bump)
    traj = simulate(model, u0, T=0.3, record_every=0.1)
    mass0 = _mass(model, u0.values)
    for t, snap in zip(traj.times, traj.snapshots):
        assert _mass(model, snap) == pytest.approx(mass0 * np.exp(-t), rel=2e-3)
    peak = model.grid.nodes[np.argmax(traj.final.u.values)]
    assert peak == pytest.approx(0.6, abs=0.01)


def test_mass_never_increases_without_fertility():
    model = make_model(beta="0", gamma="1 - s/2", mu="0.5", grid_n=128)
    state = initial_state(model, default_perturbation(model))
    masses = [_mass(model, state.u.values)]
    for _ in range(300):
        state = step(model, state)
        masses.append(_mass(model, state.u.values))
    assert np.all(np.diff(masses) <= 1e-15)
    assert masses[-1] < masses[0]


def test_boundary_inflow_examples(sec5_512):
    model, eq = sec5_512
    assert boundary_inflow(model, initial_state(model, eq.u_star)) == pytest.approx(1.0, abs=1e-4)
    zero = GridFunction.constant(model.grid, 0.0)
    assert boundary_inflow(model, initial_state(model, zero)) == 0.0
    unit = make_model(beta="1", grid_n=64)
    assert boundary_inflow(unit, initial_state(unit, GridFunction.constant(unit.grid, 1.0))) == pytest.approx(1.0)


def test_rate_is_insensitive_to_halving_eps(sec5_512):
    model, eq = sec5_512
    eps = model.simulation.eps * max(1.0, eq.u_star.max_abs())
    full = measure_rate(model, eq, eps=eps, T=10.0)
    half = measure_rate(model, eq, eps=eps / 2, T=10.0)
    assert abs(full - half) <= 0.02


@pytest.mark.slow
def test_sec5_equilibrium_stays_put():
    model = bundled_model("sec5", grid_n=2048)
    eq = first_positive(model)
    traj = simulate(model, eq.u_star, T=10.0, record_every=0.5)
    assert traj.times[-1] == pytest.approx(10.0)
    drift = [_l1(model, snap - eq.u_star.values) for snap in traj.snapshots]
    assert max(drift) <= 1e-3


@pytest.mark.slow
@pytest.mark.parametrize("name", ["sec5", "sec6"])
def test_rate_is_grid_consistent(name):
    rates = []
    for n in (2048, 4096):
        model = bundled_model(name, grid_n=n)
        rates.append(measure_rate(model, first_positive(model), T=20.0))
    assert abs(rates[0] - rates[1]) <= 0.05
