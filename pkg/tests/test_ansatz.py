import numpy as np
import pytest

from cs_qaoa_lab.ansatz import (
    AnsatzParams,
    TrainingBudget,
    active_qubits,
    c_ansatz_circuit,
    c_param_count,
    compressor_from_params,
    d_param_count,
    d_slots,
    decode_d_ansatz,
    train_c_ansatz,
    train_d_ansatz,
    train_with_escalation,
    trained_stage,
)
from cs_qaoa_lab.compression import build_onehot_binary, compose_constraints, identity, survival_rate
from cs_qaoa_lab.constraints import ConstraintSpec, build_hcs
from cs_qaoa_lab.errors import TrainingThresholdError
from cs_qaoa_lab.gates import CNOT, CSWAP, ControlledRY, PauliX
from cs_qaoa_lab.optimizers import PowellConfig, SaConfig

# 0 <= x1 + x2 + x3 <= 1 compressed to two qubits in one layer
KNOWN_N3 = (0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 0, 0, 1)


def test_parameter_counts():
    assert d_param_count(3, 2, 1) == 13
    assert d_param_count(4, 3, 1) == 29
    assert d_param_count(5, 4, 2) == 1 + 2 * (30 + 20 + 5)
    assert c_param_count(3, 1) == 9
    assert c_param_count(4, 2) == 4 + 2 * 9


def test_d_slots_order():
    slots = d_slots(3, 2, 1)
    assert len(slots) == 13
    assert slots[0] == ("x", (0,))
    assert slots[1:4] == (("cswap", (0, 1, 2)), ("cswap", (1, 0, 2)), ("cswap", (2, 0, 1)))
    assert slots[4] == ("cnot", (0, 1))
    assert slots[-1] == ("x", (2,))


def test_decode_known_parameters():
    circuit = decode_d_ansatz(KNOWN_N3, 3, 2, 1)
    assert circuit.gates == (CSWAP(1, 0, 2), CNOT(0, 1), CNOT(0, 2), CNOT(1, 2), PauliX(2))


def test_decode_maps_to_register_qubits():
    circuit = decode_d_ansatz(KNOWN_N3, 3, 2, 1, qubits=(4, 6, 5))
    assert circuit.gates[0] == CSWAP(6, 4, 5)
    with pytest.raises(ValueError):
        decode_d_ansatz(KNOWN_N3[:-1], 3, 2, 1)


def test_known_parameters_compress_feasible_states():
    params = AnsatzParams("D", KNOWN_N3, 3, 2, 1)
    compressor = compressor_from_params(params)
    assert compressor.label().tolist() == [4, 2, 0, 1]
    mask = ConstraintSpec.between(range(3), 0, 1).satisfied_mask(3)
    assert survival_rate(compressor, mask) == 1.0


def test_c_ansatz_structure():
    circuit = c_ansatz_circuit(np.zeros(c_param_count(4, 1)), (0, 1, 2, 3), 1)
    controlled = [g for g in circuit.gates if isinstance(g, ControlledRY)]
    assert [(g.c, g.q) for g in controlled] == [(0, 1), (1, 2), (2, 3), (0, 2), (1, 3)]
    with pytest.raises(ValueError):
        c_ansatz_circuit(np.zeros(3), (0, 1, 2), 1)


def test_ansatz_params_validate():
    with pytest.raises(ValueError):
        AnsatzParams("D", KNOWN_N3[:5], 3, 2, 1)
    with pytest.raises(ValueError):
        AnsatzParams("E", KNOWN_N3, 3, 2, 1)


def test_d_training_reaches_full_survival():
    rng = np.random.default_rng(3)
    hcs = build_hcs(ConstraintSpec.between(range(3), 0, 1), rng)
    budget = TrainingBudget("D", layers=1, sa=SaConfig(n_loop=200))
    result = train_with_escalation(hcs, budget, rng)
    assert result.passed
    assert result.p_sur == 1.0
    assert result.compressor.m == 2
    assert set(result.compressor.label().tolist()) == {0, 1, 2, 4}
    assert result.attempts[-1]["p_sur"] == 1.0


def test_d_training_with_identity_target_skips_search(rng):
    hcs = build_hcs(ConstraintSpec.between(range(3), 0, 3), rng)
    result = train_d_ansatz(hcs, 1, SaConfig(n_loop=5), rng)
    assert result.params is None
    assert result.compressor.m == 3
    assert result.p_sur == 1.0


def test_c_training_returns_valid_result(rng):
    hcs = build_hcs(ConstraintSpec.between(range(3), 0, 1), rng)
    result = train_c_ansatz(hcs, 1, 2, rng, PowellConfig(max_iter=20))
    assert result.params is not None
    assert len(result.params.values) == 9
    assert 0.0 <= result.p_sur <= 1.0 + 1e-12
    assert np.isfinite(result.energy)


def test_training_rejects_bad_budgets(rng):
    hcs = build_hcs(ConstraintSpec.between(range(3), 0, 1), rng)
    with pytest.raises(ValueError):
        train_c_ansatz(hcs, 0, 1, rng)
    with pytest.raises(ValueError):
        train_c_ansatz(hcs, 1, 0, rng)
    with pytest.raises(ValueError):
        train_d_ansatz(hcs, 0, SaConfig(), rng)
    with pytest.raises(ValueError):
        TrainingBudget("Q")


def test_budget_escalation():
    d_budget = TrainingBudget("D", sa=SaConfig(n_loop=50))
    assert d_budget.escalated().sa.n_loop == 100
    assert d_budget.effective_threshold == 1.0
    c_budget = TrainingBudget("C", n_rep=3)
    assert c_budget.escalated().n_rep == 6
    assert c_budget.effective_threshold == 0.98
    assert TrainingBudget("C", threshold=0.5).effective_threshold == 0.5


def test_active_qubits_follow_entangling_stages():
    base = build_onehot_binary([0, 1, 2], n_qubits=5)
    assert active_qubits(base, [2, 3]) == (1, 2, 3)
    assert active_qubits(identity(5), [3, 4]) == (3, 4)


def test_trained_stage_composes_with_deterministic_ones():
    rng = np.random.default_rng(5)
    specs = [ConstraintSpec.one_hot([0, 1]), ConstraintSpec.between([2, 3, 4], 0, 1)]
    budget = TrainingBudget("D", sa=SaConfig(n_loop=200))
    compressor = compose_constraints(specs, ["onehot", trained_stage(budget)], rng=rng)
    mask = specs[0].satisfied_mask(5) & specs[1].satisfied_mask(5)
    assert compressor.m == 3
    assert survival_rate(compressor, mask) == 1.0


def test_trained_stage_raises_below_threshold(rng):
    # an impossible threshold forces every escalation to fail
    budget = TrainingBudget("D", sa=SaConfig(n_loop=2), threshold=1.5, max_escalations=0)
    with pytest.raises(TrainingThresholdError) as info:
        compose_constraints([ConstraintSpec.between(range(3), 0, 1)], [trained_stage(budget)], rng=rng)
    assert info.value.stage == 0
