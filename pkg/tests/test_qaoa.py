import math

import numpy as np
import pytest

from cs_qaoa_lab.compression import build_onehot_binary, identity
from cs_qaoa_lab.encoders import encode
from cs_qaoa_lab.instances import brute_force, toy_problem
from cs_qaoa_lab.noise import count_two_qubit_gates
from cs_qaoa_lab.problems import feasible_mask
from cs_qaoa_lab.qaoa import (
    Fluctuation,
    QaoaConfig,
    build_state,
    energy_fluctuation,
    evaluate,
    evaluate_qaoa,
    noisy_circuit,
    optimize_qaoa,
    prepare_initial,
    layer_two_qubit_gates,
    run_trajectory,
    scan_penalty,
    solve_qaoa,
    success_probability,
    tune_penalty,
)
from cs_qaoa_lab.qubo import IsingModel, assemble, qubo_to_ising
from cs_qaoa_lab.simulator import Statevector

TOY_OPTIMA = (2,)


@pytest.fixture
def toy_ising():
    obj, cst, _ = encode(toy_problem())
    return qubo_to_ising(assemble(obj, cst, 5.0, normalize=False))


@pytest.fixture
def toy_mask():
    return feasible_mask(toy_problem())


def _cs_config(ising, layers, form="permutation", **kwargs):
    return QaoaConfig(ising, layers, mode="cs", compressor=build_onehot_binary([0, 1], form=form), **kwargs)


def test_toy_diagonal(toy_ising):
    assert toy_ising.diagonal().tolist() == pytest.approx([5.0, 2.0, 1.0, 8.0])
    assert brute_force(toy_problem()).optima == TOY_OPTIMA


def test_zero_layers_x_mode(toy_ising, toy_mask):
    result = evaluate_qaoa(QaoaConfig(toy_ising, 0), [], [], TOY_OPTIMA, toy_mask)
    assert result.p_suc == pytest.approx(0.25)
    assert result.energy == pytest.approx(4.0)
    assert result.infeasible_mass == pytest.approx(0.5)
    assert result.p_dis == 0.0


def test_zero_layers_cs_mode_is_uniform_over_feasible(toy_ising, toy_mask):
    result = evaluate_qaoa(_cs_config(toy_ising, 0), [], [], TOY_OPTIMA, toy_mask)
    assert result.p_suc == pytest.approx(0.5)
    assert result.energy == pytest.approx(1.5)
    assert result.infeasible_mass == pytest.approx(0.0, abs=1e-12)


def test_optimize_rejects_zero_layers(toy_ising):
    with pytest.raises(ValueError):
        optimize_qaoa(QaoaConfig(toy_ising, 0), TOY_OPTIMA)


def test_cs_mode_reaches_the_optimum(toy_ising, toy_mask):
    config = _cs_config(toy_ising, 1, n_starts=3)
    result = optimize_qaoa(config, TOY_OPTIMA, feasible_mask=toy_mask)
    assert result.energy == pytest.approx(1.0, abs=0.02)
    assert result.p_suc > 0.95
    assert result.layer_discards == pytest.approx([0.0], abs=1e-12)
    assert len(result.trace) == 3
    assert result.metadata["mode"] == "cs"


def test_x_mode_improves_on_uniform(toy_ising):
    result = optimize_qaoa(QaoaConfig(toy_ising, 1, n_starts=3), TOY_OPTIMA)
    assert result.p_suc > 0.25
    assert result.energy < 4.0


def test_cs_projection_never_discards_feasible_mass(toy_ising, rng):
    config = _cs_config(toy_ising, 3)
    for _ in range(10):
        betas, gammas = rng.uniform(0, 2 * math.pi, 3), rng.uniform(0, 2 * math.pi, 3)
        state, discards = build_state(config, betas, gammas)
        assert discards == pytest.approx([0.0, 0.0, 0.0], abs=1e-12)
        assert state.probabilities()[[0, 3]].sum() == pytest.approx(0.0, abs=1e-12)


def test_xy_matches_cs_on_a_single_pair(toy_ising, rng):
    xy = QaoaConfig(toy_ising, 2, mode="xy", groups=((0, 1),))
    cs = _cs_config(toy_ising, 2)
    for _ in range(5):
        betas, gammas = rng.uniform(0, 2 * math.pi, 2), rng.uniform(0, 2 * math.pi, 2)
        a, _ = build_state(xy, betas, gammas)
        b, _ = build_state(cs, betas, gammas)
        assert np.allclose(a.amplitudes, b.amplitudes)


def test_initial_states(toy_ising):
    assert np.allclose(prepare_initial(QaoaConfig(toy_ising, 1)).probabilities(), 0.25)
    w = prepare_initial(QaoaConfig(toy_ising, 1, mode="xy", groups=((0, 1),))).probabilities()
    assert w.tolist() == pytest.approx([0.0, 0.5, 0.5, 0.0])
    cs = prepare_initial(_cs_config(toy_ising, 1)).probabilities()
    assert cs[0] == 0.0 and cs.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("mode", ["x", "cs"])
def test_gate_circuit_matches_dense_evolution(toy_ising, rng, mode):
    if mode == "cs":
        config = _cs_config(toy_ising, 2, form="gate")
    else:
        config = QaoaConfig(toy_ising, 2)
    betas, gammas = [0.3, 1.1], [0.7, -0.4]
    dense, _ = build_state(config, betas, gammas)
    discard = config.compressor.discard if config.compressor else ()
    gate, probs = run_trajectory(prepare_initial(config), noisy_circuit(config, betas, gammas), discard, rng)
    assert np.allclose(gate.amplitudes, dense.amplitudes)
    assert len(probs) == (2 if mode == "cs" else 0)


def test_cs_circuit_marks_follow_each_compression(toy_ising):
    config = _cs_config(toy_ising, 2, form="gate")
    circuit = noisy_circuit(config, [0.1, 0.2], [0.3, 0.4])
    assert len(circuit.layer_marks) == 2
    assert noisy_circuit(QaoaConfig(toy_ising, 2), [0.1, 0.2], [0.3, 0.4]).layer_marks == ()


def test_noisy_evaluation_is_seeded(toy_ising):
    config = _cs_config(toy_ising, 1, form="gate", epsilon=0.1, trajectories=8, seed=5)
    first = evaluate(config, [0.4], [0.9])
    second = evaluate(config, [0.4], [0.9])
    assert first.energy == second.energy
    assert first.kept == second.kept
    assert 0.0 <= first.p_dis <= 1.0
    assert len(first.layer_discards) == 1
    assert len(first.states) == 8


def test_noisy_cs_mode_needs_gate_form(toy_ising):
    config = _cs_config(toy_ising, 1, epsilon=0.1)
    with pytest.raises(ValueError):
        evaluate(config, [0.4], [0.9])


def test_angle_count_is_checked(toy_ising):
    with pytest.raises(ValueError):
        build_state(QaoaConfig(toy_ising, 2), [0.1], [0.2, 0.3])


def test_success_probability():
    state = Statevector.uniform(2)
    assert success_probability(state, [1, 2]) == pytest.approx(0.5)
    assert success_probability(state, [1], discards=[0.5, 0.5]) == pytest.approx(0.0625)
    invalid = Statevector(2, np.zeros(4, dtype=np.complex128), valid=False)
    assert success_probability(invalid, [1]) == 0.0
    with pytest.raises(ValueError):
        success_probability(state, [])


@pytest.mark.parametrize(
    "kwargs",
    [
        {"layers": -1},
        {"mode": "z"},
        {"mode": "cs"},
        {"mode": "cs", "compressor": identity(3)},
        {"mode": "xy"},
        {"xy_scope": "ring"},
        {"trajectories": 0},
        {"n_starts": 0},
    ],
)
def test_config_validation(toy_ising, kwargs):
    kwargs = {"layers": 1} | kwargs
    with pytest.raises(ValueError):
        QaoaConfig(toy_ising, **kwargs)


def test_global_xy_size_cap():
    obj, cst, _ = encode(toy_problem())
    wide = qubo_to_ising(assemble(obj, cst, 1.0))
    QaoaConfig(wide, 1, mode="xy", xy_scope="global")
    big = IsingModel(11, np.zeros((11, 11)), np.ones(11))
    with pytest.raises(ValueError):
        QaoaConfig(big, 1, mode="xy", xy_scope="global")


def test_scan_penalty_converges_on_peak():
    calls = []

    def run(a):
        calls.append(a)
        return -((a - 3.0) ** 2), f"A={a}"

    scan = scan_penalty(run, 0.0, 10.0, precision=0.1)
    assert abs(scan.penalty - 3.0) < 0.1
    assert scan.bracket <= 0.1
    assert scan.payload == f"A={scan.penalty}"
    assert len(calls) == len(set(calls)) == len(scan.evaluated)


def test_scan_penalty_prefers_smaller_on_ties():
    scan = scan_penalty(lambda a: (1.0, None), 1.0, 4.0, precision=0.5)
    assert scan.penalty == 1.0


def test_scan_penalty_single_point():
    scan = scan_penalty(lambda a: (a, a), 2.0, 2.0, precision=0.1)
    assert scan.penalty == 2.0
    assert scan.bracket == 0.0


@pytest.mark.parametrize("args", [(0.0, 1.0, 0.0, 5), (2.0, 1.0, 0.1, 5), (0.0, 1.0, 0.1, 3)])
def test_scan_penalty_validation(args):
    lower, upper, precision, grid = args
    with pytest.raises(ValueError):
        scan_penalty(lambda a: (0.0, None), lower, upper, precision, grid)


def test_tune_penalty_ties_at_zero_layers(toy_ising):
    penalty, result = tune_penalty(toy_problem(), QaoaConfig(toy_ising, 0), precision=0.5, lower=1.0, upper=4.0)
    assert penalty == 1.0
    assert result.p_suc == pytest.approx(0.25)
    assert result.metadata["layers"] == 0


def test_tune_penalty_cs_mode(toy_ising):
    config = _cs_config(toy_ising, 1, n_starts=2)
    penalty, result = tune_penalty(toy_problem(), config, precision=5.0, lower=0.0, upper=10.0)
    assert 0.0 <= penalty <= 10.0
    assert result.p_suc >= 0.5 - 1e-9
    assert result.p_dis == pytest.approx(0.0, abs=1e-12)


def test_solve_qaoa_dispatches_on_layers(toy_ising, toy_mask):
    flat = solve_qaoa(_cs_config(toy_ising, 0), TOY_OPTIMA, feasible_mask=toy_mask)
    assert flat.p_suc == pytest.approx(0.5)
    assert flat.trace == [pytest.approx(1.5)]
    tuned = solve_qaoa(_cs_config(toy_ising, 1, n_starts=2), TOY_OPTIMA, feasible_mask=toy_mask)
    assert len(tuned.trace) == 2


def test_layer_two_qubit_gates(toy_ising):
    couplings = len(list(toy_ising.couplings()))
    assert couplings == 1
    assert layer_two_qubit_gates(QaoaConfig(toy_ising, 1)) == couplings
    config = _cs_config(toy_ising, 1, form="gate")
    per_compressor = count_two_qubit_gates(config.compressor.circuit())
    assert layer_two_qubit_gates(config) == couplings + 2 * per_compressor


def test_energy_fluctuation_is_seeded(toy_ising):
    config = QaoaConfig(toy_ising, 1)
    a = energy_fluctuation(config, 40, np.random.default_rng(2))
    b = energy_fluctuation(config, 40, np.random.default_rng(2))
    assert a == b
    assert a.delta_e > 0.0
    assert a.ratio == pytest.approx(a.delta_e / abs(a.e_ave))
    assert not a.undefined


def test_cs_fluctuation_stays_in_feasible_band(toy_ising):
    fluct = energy_fluctuation(_cs_config(toy_ising, 1), 40, np.random.default_rng(2))
    assert 1.0 <= fluct.e_ave <= 2.0
    assert fluct.delta_e < 0.6


def test_fluctuation_edge_cases(toy_ising):
    assert Fluctuation(1.0, 0.0, None).undefined
    with pytest.raises(ValueError):
        energy_fluctuation(QaoaConfig(toy_ising, 1), 1)
