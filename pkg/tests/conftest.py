import numpy as np
import pytest

from config.model_file import bundled_model
from equilibrium.solver import positive_equilibria, solve_equilibrium
from exprlang import parse
from linearization.coefficients import linearize
from schemas.schema import ModelSpec


def make_model(beta="0", gamma="1", mu="1", w="1", alpha=0.5, m=1.0, grid_n=256, **kwargs) -> ModelSpec:
    """Modelo a partir de fontes textuais; malha pequena por padrão."""
    return ModelSpec(
        m=m,
        alpha=alpha,
        w=parse(w),
        beta=parse(beta),
        gamma=parse(gamma),
        mu=parse(mu),
        grid_n=grid_n,
        **kwargs,
    )


def first_positive(model: ModelSpec):
    eqs = positive_equilibria(model)
    assert eqs, "esperado ao menos um equilíbrio positivo"
    return eqs[0]


@pytest.fixture(scope="session")
def sec5():
    return bundled_model("sec5")


@pytest.fixture(scope="session")
def sec6():
    return bundled_model("sec6")


@pytest.fixture(scope="session")
def scramble():
    return bundled_model("scramble")


@pytest.fixture(scope="session")
def unstable():
    return bundled_model("contest_unstable")


@pytest.fixture(scope="session")
def sec5_eq(sec5):
    return first_positive(sec5)


@pytest.fixture(scope="session")
def sec6_eq(sec6):
    return first_positive(sec6)


@pytest.fixture(scope="session")
def sec5_c(sec5, sec5_eq):
    return linearize(sec5, sec5_eq)


@pytest.fixture(scope="session")
def sec6_c(sec6, sec6_eq):
    return linearize(sec6, sec6_eq)


@pytest.fixture(scope="session")
def scramble_c(scramble):
    return linearize(scramble, first_positive(scramble))


@pytest.fixture(scope="session")
def unstable_c(unstable):
    return linearize(unstable, first_positive(unstable))


@pytest.fixture(scope="session")
def sigma_model():
    """Crescimento dependente de Q: σ* ≢ 0."""
    model = make_model(
        beta="1.5*(1+s)*exp(-Q)",
        gamma="1 - s/2 - Q/4",
        mu="1 + Q/2",
        grid_n=512,
        q_validation_max=1.5,
        solver={"b_range": (0.05, 2.0)},
    )
    return model


@pytest.fixture(scope="session")
def sigma_c(sigma_model):
    eqs = solve_equilibrium(sigma_model)
    positive = [eq for eq in eqs if not eq.trivial]
    assert positive
    return linearize(sigma_model, positive[0])


def s_nodes(model: ModelSpec) -> np.ndarray:
    return model.grid.nodes
