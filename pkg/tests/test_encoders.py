import itertools

import numpy as np
import pytest

from cs_qaoa_lab.constraints import ConstraintSpec
from cs_qaoa_lab.encoders import encode, encode_linear, encode_maxkcut, encode_qap, encode_qkp
from cs_qaoa_lab.instances import toy_problem
from cs_qaoa_lab.problems import LinearCop, MaxKCut, Qap, Qkp, feasible_mask
from cs_qaoa_lab.qubo import Qubo, assemble, index_to_bits


def test_toy_penalized_values():
    obj, cst, layout = encode(toy_problem())
    # index bit 0 is x_A, bit 1 is x_B
    assert assemble(obj, cst, 5.0, normalize=False).values().tolist() == [5.0, 2.0, 1.0, 8.0]
    assert cst.values().tolist() == [1.0, 0.0, 0.0, 1.0]
    assert layout.groups == ((0, 1),)


def test_maxkcut_objective_is_minus_cut():
    instance = MaxKCut(4, ((0, 1), (0, 2), (1, 2), (2, 3), (1, 3)), 3)
    obj, cst, layout = encode_maxkcut(instance)
    mask = feasible_mask(instance)
    values = obj.values()
    penalties = cst.values()
    for index in np.flatnonzero(mask):
        bits = index_to_bits(int(index), instance.n_qubits)
        assert values[index] == -instance.cut_size(bits)
        assert penalties[index] == 0.0
    assert np.all(penalties[~mask] >= 1.0)
    assert layout.fixed == ((0, 0),)
    assert layout.qubit(3, 2) == instance.qubit(3, 2)


def test_maxkcut_needs_two_subsets():
    with pytest.raises(ValueError):
        encode_maxkcut(MaxKCut(3, ((0, 1),), 1))


def test_qap_objective_matches_assignment_cost():
    flow = np.array([[0, 2, 1], [2, 0, 3], [1, 3, 0]])
    dist = np.array([[0, 5, 4], [5, 0, 1], [4, 1, 0]])
    instance = Qap(flow, dist)
    obj, cst, layout = encode_qap(instance)
    values, penalties = obj.values(), cst.values()
    for perm in itertools.permutations(range(3)):
        index = sum(1 << instance.qubit(i, a) for i, a in enumerate(perm))
        assert values[index] == pytest.approx(instance.assignment_cost(perm))
        assert penalties[index] == 0.0
    assert np.all(penalties[~feasible_mask(instance)] >= 1.0)
    assert layout.groups == instance.location_groups()


def test_qap_requires_symmetric_matrices():
    with pytest.raises(ValueError):
        encode_qap(Qap(np.array([[0, 1], [2, 0]]), np.array([[0, 1], [1, 0]])))


def test_qkp_encoding():
    instance = Qkp(np.array([[3, 2, 0], [0, 1, 4], [0, 0, 5]]), np.array([1, 2, 2]), 3.0)
    obj, cst, _ = encode_qkp(instance)
    assert obj.evaluate([1, 1, 1]) == -15.0
    assert obj.evaluate([1, 0, 1]) == -8.0
    assert cst.evaluate([1, 1, 0]) == pytest.approx(1.0)
    assert cst.evaluate([1, 1, 1]) == pytest.approx((5 / 3) ** 2)


def test_linear_equality_penalty():
    spec = ConstraintSpec.between([0, 1, 2], 2, 2, [1, 2, 1])
    _, cst, layout = encode_linear(LinearCop(Qubo.zeros(3), (spec,)))
    for index in range(8):
        bits = index_to_bits(index, 3)
        g = bits[0] + 2 * bits[1] + bits[2]
        assert cst.values()[index] == pytest.approx((g - 2) ** 2)
    assert layout.groups == ()


def test_encode_rejects_unknown_instances():
    with pytest.raises(ValueError):
        encode("not an instance")
