import numpy as np
import pytest

from cs_qaoa_lab.qubo import (
    IsingModel,
    Qubo,
    assemble,
    bit_columns,
    bits_to_index,
    energy_of,
    index_to_bits,
    qubo_to_ising,
)


def _random_qubo(n, rng):
    return Qubo.from_matrix(rng.integers(-5, 6, size=(n, n)), offset=float(rng.integers(-3, 4)))


def test_bit_order_is_little_endian():
    assert bits_to_index([1, 0, 1]) == 5
    assert index_to_bits(6, 3) == (0, 1, 1)
    assert bit_columns(2).tolist() == [[0, 1, 0, 1], [0, 0, 1, 1]]
    with pytest.raises(ValueError):
        bits_to_index([0, 2])


def test_from_matrix_folds_lower_triangle():
    qubo = Qubo.from_matrix([[1, 2], [3, 4]])
    assert qubo.coefficients.tolist() == [[1, 5], [0, 4]]


def test_from_terms_accumulates_and_orders():
    qubo = Qubo.from_terms(2, [(1, 0, 2.0), (0, 1, 1.0), (1, 1, -1.0)], offset=3.0)
    assert qubo.coefficients.tolist() == [[0, 3], [0, -1]]
    assert qubo.evaluate([1, 1]) == pytest.approx(5.0)


def test_rejects_lower_triangular_entries():
    with pytest.raises(ValueError):
        Qubo(2, np.array([[0.0, 0.0], [1.0, 0.0]]))
    with pytest.raises(ValueError):
        Qubo.from_matrix([[1, 2, 3]])


def test_values_match_pointwise_evaluation(rng):
    qubo = _random_qubo(4, rng)
    values = qubo.values()
    for index in range(16):
        assert values[index] == pytest.approx(qubo.evaluate(index))
        assert energy_of(qubo, index_to_bits(index, 4)) == pytest.approx(values[index])


def test_ising_conversion_preserves_energies(rng):
    qubo = _random_qubo(5, rng)
    ising = qubo_to_ising(qubo)
    assert np.allclose(ising.diagonal(), qubo.values())
    assert energy_of(ising, 19) == pytest.approx(qubo.evaluate(19))


def test_ising_of_single_linear_term():
    ising = qubo_to_ising(Qubo.from_terms(1, [(0, 0, 2.0)]))
    assert ising.h.tolist() == [1.0]
    assert ising.H0 == pytest.approx(1.0)


def test_assemble_normalizes_to_unit_coupling(rng):
    objective = _random_qubo(3, rng)
    constraint = Qubo.from_terms(3, [(0, 0, -1), (1, 1, -1), (2, 2, -1), (0, 1, 2), (0, 2, 2), (1, 2, 2)], 1.0)
    raw = assemble(objective, constraint, 4.0, normalize=False)
    normed = assemble(objective, constraint, 4.0)
    assert qubo_to_ising(normed).max_coupling() == pytest.approx(1.0)
    assert np.allclose(normed.values() * normed.normalization, raw.values())
    assert not normed.unnormalized


def test_assemble_all_zero_couplings_is_flagged():
    zero = Qubo.zeros(2)
    out = assemble(zero, zero, 3.0)
    assert out.unnormalized
    assert out.normalization == 1.0


def test_assemble_validates_inputs():
    with pytest.raises(ValueError):
        assemble(Qubo.zeros(2), Qubo.zeros(2), -1.0)
    with pytest.raises(ValueError):
        assemble(Qubo.zeros(2), Qubo.zeros(3), 1.0)


def test_dict_forms_reload(rng):
    qubo = _random_qubo(3, rng)
    again = Qubo.from_dict(qubo.to_dict())
    assert np.allclose(again.values(), qubo.values())
    ising = qubo_to_ising(qubo)
    assert np.allclose(IsingModel.from_dict(ising.to_dict()).diagonal(), ising.diagonal())
