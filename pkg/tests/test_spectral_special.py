import numpy as np
import pytest
from numpy.testing import assert_allclose

from equilibrium.solver import trivial_equilibrium
from linearization.coefficients import linearize
from schemas.errors import DomainError, WrongRegimeError
from spectral.special import (
    K,
    K0_parts,
    K_many,
    K_prime,
    capital_pi,
    classify_special,
    default_search,
    dominant_root,
)
from tests.conftest import make_model


def test_K0_of_sec5(sec5_c):
    parts = K0_parts(sec5_c)
    assert parts["K0"] == pytest.approx(434 / 997, abs=1e-6)
    assert parts["coupling"] == pytest.approx(-563 / 997, abs=1e-6)
    assert parts["R_star"] == pytest.approx(1.0, abs=1e-6)
    assert K(sec5_c, 0.0) == pytest.approx(parts["K0"], rel=1e-14)


def test_capital_pi(sec5_c):
    s = 0.6
    assert capital_pi(sec5_c, 0.0, s) == pytest.approx(1 - s / 2, abs=1e-6)
    # Π(λ,s) = Π(0,s)·exp(-λΓ(s)), Γ(s) = -2 log(1 - s/2)
    expected = (1 - s / 2) * (1 - s / 2) ** (2 * 1.5)
    assert capital_pi(sec5_c, 1.5, s) == pytest.approx(expected, abs=1e-6)
    assert capital_pi(sec5_c, 3.0, 0.0) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        capital_pi(sec5_c, 0.0, 1.5)


def test_K_is_decreasing_on_sec5(sec5_c):
    values = K_many(sec5_c, np.linspace(-5, 5, 41))
    assert np.all(np.diff(values) < 0)


@pytest.mark.parametrize("lam", [-2.0, 0.0, 0.7, 3.0])
def test_K_prime_matches_finite_difference(sec5_c, lam):
    d = 1e-5
    numeric = (K(sec5_c, lam + d) - K(sec5_c, lam - d)) / (2 * d)
    assert K_prime(sec5_c, lam) == pytest.approx(numeric, rel=1e-5)
    assert K_prime(sec5_c, lam) < 0


def test_dominant_root_of_sec5(sec5_c):
    root = dominant_root(sec5_c, (-5.0, 5.0))
    assert root is not None and root < 0
    assert K(sec5_c, root) == pytest.approx(1.0, abs=1e-8)


def test_no_root_in_window(sec5_c):
    assert dominant_root(sec5_c, (1.0, 5.0)) is None


def test_sec5_is_stable(sec5_c):
    verdict = classify_special(sec5_c, (-5.0, 5.0))
    assert verdict.verdict == "Stable"
    assert verdict.criterion == "special-case-theorem"
    ev = verdict.evidence
    assert ev["betaQ_max"] < 0
    # mínimo do polinômio reduzido (480/997)(5/12 + 3s/2 + s²/2 - s³/12), em s = 0
    assert ev["positivity_margin"] == pytest.approx((480 / 997) * 5 / 12, abs=1e-5)
    assert ev["dominant_root"] < 0


def test_increasing_fertility_is_unstable(unstable_c):
    verdict = classify_special(unstable_c)
    assert verdict.verdict == "Unstable"
    assert verdict.evidence["betaQ_min"] > 0
    assert verdict.evidence["K0"] > 1
    assert verdict.evidence["dominant_root"] > 0


def test_unstable_equilibrium_matches_closed_form(unstable_c):
    assert unstable_c.b == pytest.approx(440 / 563, abs=1e-6)
    assert K0_parts(unstable_c)["K0"] == pytest.approx(1.458, abs=5e-3)


def test_mixed_sign_fertility_derivative_is_inconclusive(scramble_c):
    # β_Q ≤ 0 mas a segunda condição de positividade falha em s = 0
    verdict = classify_special(scramble_c)
    assert verdict.verdict == "Inconclusive"
    assert verdict.evidence["positivity_margin"] < 0


def test_trivial_equilibrium_classification():
    model = make_model(beta="1/2", gamma="1", mu="1", grid_n=1024)
    c = linearize(model, trivial_equilibrium(model))
    verdict = classify_special(c)
    assert verdict.criterion == "trivial-K0"
    assert verdict.verdict == "Stable"
    assert verdict.evidence["K0"] == pytest.approx(0.5 * (1 - np.exp(-1)), abs=1e-6)
    # (e^y - 1)/y = 2 com y = -(1 + λ)
    assert verdict.evidence["dominant_root"] == pytest.approx(-2.2564, abs=1e-3)


def test_trivial_equilibrium_with_high_fertility_is_unstable():
    model = make_model(beta="3", gamma="1", mu="1")
    c = linearize(model, trivial_equilibrium(model))
    assert classify_special(c).verdict == "Unstable"


def test_default_search_covers_decay(sec5_c):
    lo, hi = default_search(sec5_c)
    assert hi == 10.0
    assert lo < -10.0


def test_wrong_regime(sigma_c):
    with pytest.raises(WrongRegimeError):
        K(sigma_c, 0.0)
    with pytest.raises(WrongRegimeError):
        dominant_root(sigma_c)
    with pytest.raises(WrongRegimeError):
        classify_special(sigma_c)
    with pytest.raises(WrongRegimeError):
        capital_pi(sigma_c, 0.0, 0.5)


def test_verdict_serializes_missing_root(sec5_c):
    verdict = classify_special(sec5_c, (1.0, 5.0))
    assert verdict.evidence["dominant_root"] is None
    assert verdict.model_dump(mode="json")["evidence"]["dominant_root"] is None
    assert_allclose(verdict.evidence["K0"], 434 / 997, atol=1e-6)
