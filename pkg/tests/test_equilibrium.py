import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from config.model_file import bundled_model
from core.grid import GridFunction, environment
from equilibrium.solver import (
    equilibrium_from_profile,
    equilibrium_report,
    model_equilibria,
    net_reproduction,
    solve_equilibrium,
    survival,
    trivial_equilibrium,
)
from exprlang import parse
from schemas.errors import ModelError, NonConvergenceError
from schemas.schema import ProfileOverride
from tests.conftest import make_model


def test_survival_closed_form():
    model = make_model(gamma="1 - s/2", mu="1", grid_n=4096)
    Q = GridFunction.constant(model.grid, 0.3)
    pi = survival(model, Q)
    assert_allclose(pi.values, 1 - model.grid.nodes / 2, atol=1e-8)


def test_survival_trivial_cases():
    model = make_model(mu="0", gamma="1")
    pi = survival(model, GridFunction.constant(model.grid, 0.0))
    assert np.all(pi.values == 1.0)
    other = make_model(gamma="2 + s*Q", mu="1 + s", q_validation_max=1.0)
    pi = survival(other, GridFunction.constant(other.grid, 0.7))
    assert pi.values[0] == 1.0
    assert np.all(pi.values > 0.0)


def test_survival_is_monotone_in_mu():
    low = make_model(gamma="1 - s/4", mu="1")
    high = make_model(gamma="1 - s/4", mu="1 + s*s")
    Q = GridFunction.constant(low.grid, 0.0)
    assert np.all(survival(high, Q).values <= survival(low, Q).values)


def test_survival_rejects_nonpositive_growth():
    model = make_model(gamma="1 - Q", q_validation_max=0.5)
    with pytest.raises(ModelError):
        survival(model, GridFunction.constant(model.grid, 2.0))


def test_survival_rejects_foreign_grid(sec5):
    other = make_model(grid_n=64)
    with pytest.raises(ModelError):
        survival(sec5, GridFunction.constant(other.grid, 0.0))


def test_net_reproduction_sec5_environment(sec5):
    s = sec5.grid.nodes
    Q = GridFunction(sec5.grid, s**2 / 8 - s / 2 + 0.75)
    assert net_reproduction(sec5, Q) == pytest.approx(1.0, abs=1e-6)


def test_net_reproduction_closed_form():
    model = make_model(beta="1", grid_n=2048)
    zero = GridFunction.constant(model.grid, 0.0)
    assert net_reproduction(model, zero) == pytest.approx(1 - math.exp(-1), abs=1e-7)
    assert net_reproduction(make_model(beta="0"), GridFunction.constant(make_model().grid, 0.0)) == 0.0


def test_net_reproduction_is_linear_in_fertility():
    base = make_model(beta="(1+s)*exp(-Q)", gamma="1 - s/2")
    doubled = make_model(beta="2*(1+s)*exp(-Q)", gamma="1 - s/2")
    Q = GridFunction.from_callable(base.grid, lambda s: 0.5 - 0.2 * s)
    assert net_reproduction(doubled, Q) == pytest.approx(2 * net_reproduction(base, Q), rel=1e-13)


def test_sec5_equilibrium(sec5, sec5_eq):
    s = sec5.grid.nodes
    assert sec5_eq.b == pytest.approx(1.0, abs=1e-6)
    assert_allclose(sec5_eq.u_star.values, 1 - s / 2, atol=1e-6)
    assert_allclose(sec5_eq.Q_star.values, s**2 / 8 - s / 2 + 0.75, atol=1e-6)
    assert abs(sec5_eq.net_reproduction_residual) <= 1e-8
    assert sec5_eq.fixed_point_iterations > 0


def test_sec6_has_the_same_equilibrium(sec6, sec6_eq):
    assert sec6_eq.b == pytest.approx(1.0, abs=1e-6)
    assert_allclose(sec6_eq.u_star.values, 1 - sec6.grid.nodes / 2, atol=1e-6)


def test_solver_always_lists_the_trivial_equilibrium(sec5):
    eqs = solve_equilibrium(sec5)
    assert eqs[0].trivial
    assert np.all(eqs[0].Q_star.values == 0.0)
    assert len([eq for eq in eqs if not eq.trivial]) == 1


def test_equilibrium_is_a_fixed_point(sec5, sec5_eq, sigma_model, sigma_c):
    w = GridFunction.constant(sec5.grid, 1.0)
    Q_again = environment(sec5_eq.u_star, sec5.alpha, w)
    assert_allclose(Q_again.values, sec5_eq.Q_star.values, atol=1e-9)
    u_again = sec5_eq.b * survival(sec5, sec5_eq.Q_star).values
    assert_allclose(u_again, sec5_eq.u_star.values, atol=1e-12)

    # σ* ≢ 0: o ponto fixo também vale quando γ e μ dependem de Q
    w = GridFunction.constant(sigma_model.grid, 1.0)
    Q_again = environment(sigma_c.u_star, sigma_model.alpha, w)
    assert_allclose(Q_again.values, sigma_c.Q_star.values, atol=1e-9)


def test_without_fertility_only_trivial():
    model = make_model(beta="0", solver={"b_range": (0.1, 2.0), "scan_points": 8})
    eqs = solve_equilibrium(model)
    assert len(eqs) == 1 and eqs[0].trivial
    assert eqs[0].net_reproduction_residual == -1.0


def test_refinement_changes_b_at_second_order():
    bs = []
    for n in (128, 256, 512):
        model = bundled_model("sec5", grid_n=n)
        eqs = solve_equilibrium(model)
        bs.append([eq.b for eq in eqs if not eq.trivial][0])
    ratio = (bs[0] - bs[1]) / (bs[1] - bs[2])
    assert 3.0 <= ratio <= 5.0


def test_residual_above_root_tolerance_is_logged(caplog):
    model = make_model(
        beta="(1+s)*exp(-Q)", gamma="1 - s/2", solver={"root_tol": 1e-30, "b_range": (0.01, 3.0), "scan_points": 8}
    )
    with caplog.at_level(logging.WARNING, logger="equilibrium.solver"):
        eqs = solve_equilibrium(model)
    positive = [eq for eq in eqs if not eq.trivial]
    assert len(positive) == 1
    assert abs(positive[0].net_reproduction_residual) <= 1e-10
    logged = any("resíduo" in r.getMessage() for r in caplog.records)
    assert logged == (abs(positive[0].net_reproduction_residual) > 1e-30)


def test_default_root_tolerance_is_met(sec5, caplog):
    with caplog.at_level(logging.WARNING, logger="equilibrium.solver"):
        eqs = solve_equilibrium(sec5)
    assert all(abs(eq.net_reproduction_residual) <= sec5.solver.root_tol for eq in eqs if not eq.trivial)
    assert not any("resíduo" in r.getMessage() for r in caplog.records)


def test_inner_loop_failure_reports_b():
    model = make_model(
        beta="(1+s)*exp(-Q)", gamma="1 - s/2", solver={"max_iter": 1, "b_range": (0.5, 1.0), "scan_points": 4}
    )
    with pytest.raises(NonConvergenceError) as info:
        solve_equilibrium(model)
    assert info.value.b > 0
    assert info.value.exit_code == 3


def test_invalid_range(sec5):
    with pytest.raises(ModelError):
        solve_equilibrium(sec5, b_range=(1.0, 0.5))


def test_trivial_equilibrium_carries_R0(sec5):
    eq = trivial_equilibrium(sec5)
    assert eq.trivial
    assert eq.net_reproduction_residual + 1.0 == pytest.approx(1560 / 997, abs=1e-6)


def test_report(sec5, sec5_eq):
    report = equilibrium_report(sec5, sec5_eq)
    assert report.P_star == pytest.approx(0.75, abs=1e-6)
    assert report.Q_star_max == pytest.approx(0.75, abs=1e-6)
    assert report.R_trivial == pytest.approx(1560 / 997, abs=1e-6)
    assert report.net_reproduction == pytest.approx(1.0, abs=1e-8)
    assert not report.trivial
    assert report.s[0] == 0.0 and report.s[-1] == 1.0
    assert len(report.s) == len(report.u_star) == len(report.Q_star)


def test_profile_equilibrium():
    model = make_model(beta="0.1 + 0.1*Q", equilibrium_override=ProfileOverride(b=0.1, profile=parse("exp(-s)")))
    eqs = model_equilibria(model)
    assert eqs[0].trivial
    eq = eqs[1]
    assert eq.synthetic
    assert eq.b == pytest.approx(0.1)
    assert_allclose(eq.u_star.values, 0.1 * np.exp(-model.grid.nodes))
    # o resíduo é informado honestamente
    assert abs(eq.net_reproduction_residual) > 0.5


def test_profile_must_be_nonnegative_and_Q_free():
    model = make_model(beta="1")
    with pytest.raises(ModelError):
        equilibrium_from_profile(model, 1.0, parse("s - 1/2"))
    with pytest.raises(ModelError):
        equilibrium_from_profile(model, 1.0, parse("1 + Q"))
