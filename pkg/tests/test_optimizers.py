import math

import numpy as np
import pytest

from cs_qaoa_lab.optimizers import PowellConfig, SaConfig, anneal_binary, powell_minimize


def test_powell_finds_quadratic_minimum():
    target = np.array([0.3, -1.2, 2.0])
    result = powell_minimize(lambda x: float(np.sum((x - target) ** 2)), np.zeros(3), PowellConfig(ftol=1e-10, xtol=1e-8))
    assert np.allclose(result.x, target, atol=1e-4)
    assert result.fun == pytest.approx(0.0, abs=1e-8)
    assert result.n_evaluations == len(result.trace)


def test_powell_keeps_start_without_improvement():
    start = np.array([1.0, 2.0])
    result = powell_minimize(lambda x: 5.0, start)
    assert np.array_equal(result.x, start)
    assert result.fun == 5.0


def test_powell_rejects_non_finite_objective():
    with pytest.raises(ValueError):
        powell_minimize(lambda x: math.nan, np.zeros(2))


def test_powell_handles_empty_vector():
    result = powell_minimize(lambda x: 1.5, np.zeros(0))
    assert result.fun == 1.5
    assert result.n_evaluations == 1


@pytest.mark.parametrize("kwargs", [{"ftol": 0.0}, {"xtol": -1.0}, {"max_iter": 0}])
def test_powell_config_validation(kwargs):
    with pytest.raises(ValueError):
        PowellConfig(**kwargs)


def test_geometric_cooling_schedule():
    temps = SaConfig(n_loop=5, t_initial=1.0, t_final=1e-4).temperatures()
    assert temps[0] == pytest.approx(1.0)
    assert temps[-1] == pytest.approx(1e-4)
    assert np.allclose(temps[1:] / temps[:-1], 0.1)
    assert SaConfig(n_loop=1).temperatures().tolist() == [1.0]


@pytest.mark.parametrize("kwargs", [{"n_loop": 0}, {"t_initial": 0.1, "t_final": 1.0}, {"t_final": 0.0}])
def test_sa_config_validation(kwargs):
    with pytest.raises(ValueError):
        SaConfig(**kwargs)


def test_annealing_minimizes_separable_cost():
    weights = np.array([3.0, -1.0, 2.0, -4.0, 0.5, -0.5])
    result = anneal_binary(lambda b: float(weights @ b), weights.size, SaConfig(n_loop=100), np.random.default_rng(0))
    assert result.x.tolist() == [0, 1, 0, 1, 0, 1]
    assert result.fun == pytest.approx(-5.5)
    assert result.n_evaluations == 1 + 100 * weights.size


def test_annealing_is_seeded():
    def cost(bits):
        return float(np.sum(bits[:-1] != bits[1:])) - bits[0]

    a = anneal_binary(cost, 8, SaConfig(n_loop=20), np.random.default_rng(4))
    b = anneal_binary(cost, 8, SaConfig(n_loop=20), np.random.default_rng(4))
    assert a.x.tolist() == b.x.tolist()
    assert a.trace == b.trace


def test_annealing_validates_start():
    with pytest.raises(ValueError):
        anneal_binary(lambda b: 0.0, 0, SaConfig(), np.random.default_rng(0))
    with pytest.raises(ValueError):
        anneal_binary(lambda b: 0.0, 3, SaConfig(), np.random.default_rng(0), x0=[0, 1])
