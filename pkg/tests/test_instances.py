import json
import math

import numpy as np
import pytest

from cs_qaoa_lab.constraints import ConstraintSpec
from cs_qaoa_lab.errors import InstanceFormatError, SizeCapError
from cs_qaoa_lab.instances import (
    MAX_ORACLE_QUBITS,
    OracleReport,
    accept_instance,
    brute_force,
    derive_qkp,
    enumerate_feasible,
    gen_maxkcut,
    gen_qap,
    gen_qkp_benchmark,
    load_instance,
    load_qkp,
    save_instance,
    toy_problem,
    write_qkp,
)
from cs_qaoa_lab.problems import LinearCop, MaxKCut, Qap, Qkp
from cs_qaoa_lab.qubo import Qubo


def test_gen_maxkcut_is_seeded():
    a = gen_maxkcut(6, 3, seed=11)
    b = gen_maxkcut(6, 3, seed=11)
    assert a.edges == b.edges
    assert a.n_qubits == 15
    assert all(u < v for u, v in a.edges)


def test_gen_maxkcut_edge_probability_extremes():
    assert gen_maxkcut(5, 3, seed=0, edge_probability=0.0).edges == ()
    assert len(gen_maxkcut(5, 3, seed=0, edge_probability=1.0).edges) == 10


def test_gen_qap_ranges():
    instance = gen_qap(4, seed=2)
    assert np.array_equal(instance.flow, instance.flow.T)
    assert np.all(np.diag(instance.flow) == 0)
    off = ~np.eye(4, dtype=bool)
    assert instance.flow[off].min() >= 1 and instance.flow[off].max() <= 5
    assert instance.distance[off].min() >= 1 and instance.distance[off].max() <= 10
    assert np.array_equal(gen_qap(4, seed=2).distance, instance.distance)


def test_load_qkp(fixtures_path):
    bench = load_qkp(fixtures_path / "qkp_n10.txt")
    assert bench.label == "qkp_n10"
    assert (bench.n, bench.capacity) == (10, 37)
    assert bench.weights.tolist() == [5, 3, 8, 2, 7, 4, 6, 1, 9, 3]
    assert bench.profits[2, 2:].tolist() == [15, 3, 0, 2, 0, 0, 7, 1]
    assert bench.profits[9, 9] == 10
    assert np.all(np.tril(bench.profits, -1) == 0)


def test_derive_qkp_scales_capacity(fixtures_path):
    bench = load_qkp(fixtures_path / "qkp_n10.txt")
    instance = derive_qkp(bench, 7)
    assert instance.n_items == 7
    assert instance.capacity == 25.0
    assert instance.label == "qkp_n10[:7]"
    with pytest.raises(ValueError):
        derive_qkp(bench, 11)


def test_load_qkp_reports_physical_line(fixtures_path):
    with pytest.raises(InstanceFormatError) as info:
        load_qkp(fixtures_path / "bad_qkp.txt")
    assert info.value.line == 4
    assert "line 4" in str(info.value)


@pytest.mark.parametrize(
    "text,line",
    [
        ("3\n0\n1 2 3\n1 2 3\n4 5\n6\n", 2),
        ("3\n10\n1 x 3\n", 3),
        ("3\n10\n1 0 3\n1 2 3\n4 5\n6\n", 3),
        ("3\n10\n1 2 3\n1 2 3\n4 5\n", 6),
        ("2\n10\n", 3),
    ],
)
def test_load_qkp_rejects_malformed_files(tmp_path, text, line):
    path = tmp_path / "broken.txt"
    path.write_text(text)
    with pytest.raises(InstanceFormatError) as info:
        load_qkp(path)
    assert info.value.line == line


def test_load_qkp_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_qkp(tmp_path / "absent.txt")


def test_written_benchmark_reloads(tmp_path):
    bench = gen_qkp_benchmark(6, seed=4)
    path = tmp_path / "bench" / f"{bench.label}.txt"
    write_qkp(bench, path)
    again = load_qkp(path)
    assert again.capacity == bench.capacity
    assert np.array_equal(again.weights, bench.weights)
    assert np.array_equal(again.profits, bench.profits)


def test_gen_qkp_benchmark_ranges():
    bench = gen_qkp_benchmark(12, seed=1, density=0.25)
    assert bench.label == "n_12_1"
    assert bench.weights.min() >= 1 and bench.weights.max() <= 50
    assert bench.profits.max() <= 100
    assert np.all(np.tril(bench.profits, -1) == 0)
    assert 1 <= bench.capacity <= int(bench.weights.sum())
    with pytest.raises(ValueError):
        gen_qkp_benchmark(5, seed=1, density=0.0)


def test_brute_force_toy():
    report = brute_force(toy_problem())
    # x_A = 0, x_B = 1 costs 1
    assert report.optima == (2,)
    assert report.value == 1.0
    assert report.n_feasible == 2
    assert report.p_f == 0.5


def test_brute_force_triangle_three_cut():
    report = brute_force(MaxKCut(3, ((0, 1), (1, 2), (0, 2)), 3))
    assert report.value == -3.0
    assert report.optima == (20, 34)
    assert report.p_f == pytest.approx(9 / 64)


def test_brute_force_keeps_exact_ties():
    objective = Qubo.from_terms(3, [(0, 0, 1.0), (1, 1, 1.0), (2, 2, 2.0)])
    instance = LinearCop(objective, (ConstraintSpec.between([0, 1, 2], 1, 1),))
    report = brute_force(instance)
    assert report.optima == (1, 2)
    assert report.value == 1.0


def test_brute_force_without_feasible_states():
    instance = LinearCop(Qubo.zeros(2), (ConstraintSpec.between([0, 1], 1, 1, [2, 2]),))
    report = brute_force(instance)
    assert report.optima == ()
    assert report.value == math.inf
    assert report.p_f == 0.0
    assert enumerate_feasible(instance) == ()


def test_size_cap():
    instance = gen_maxkcut(14, 2, seed=0)
    assert instance.n_qubits == 26 > MAX_ORACLE_QUBITS
    with pytest.raises(SizeCapError):
        brute_force(instance)
    with pytest.raises(SizeCapError):
        enumerate_feasible(instance)


def test_accept_instance_window():
    assert accept_instance(OracleReport((0,), 0.0, 2, 3))
    assert not accept_instance(OracleReport((0,), 0.0, 1, 4))
    assert not accept_instance(OracleReport((0,), 0.0, 5, 3))
    assert OracleReport((), math.inf, 0, 2).to_dict()["p_f"] == 0.0


def test_save_and_load_instance(tmp_path):
    instance = gen_qap(3, seed=5)
    path = tmp_path / "inst" / "qap.json"
    save_instance(instance, path)
    loaded = load_instance(path)
    assert isinstance(loaded, Qap)
    assert np.array_equal(loaded.flow, instance.flow)


def test_load_bare_graph(fixtures_path):
    instance = load_instance(fixtures_path / "triangle.json", k=4)
    assert isinstance(instance, MaxKCut)
    assert instance.k == 4
    assert len(instance.edges) == 3


def test_load_bare_qap(tmp_path):
    path = tmp_path / "bare.json"
    path.write_text(json.dumps({"f": [[0, 1], [1, 0]], "d": [[0, 2], [2, 0]]}))
    assert isinstance(load_instance(path), Qap)


def test_load_qkp_text_as_instance(fixtures_path):
    instance = load_instance(fixtures_path / "qkp_n10.txt")
    assert isinstance(instance, Qkp)
    assert instance.capacity == 37.0


def test_load_instance_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_instance(tmp_path / "absent.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{\n  \"vertices\": 3,\n  oops\n}")
    with pytest.raises(InstanceFormatError) as info:
        load_instance(broken)
    assert info.value.line == 3
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]")
    with pytest.raises(InstanceFormatError):
        load_instance(listing)
    partial = tmp_path / "partial.json"
    partial.write_text(json.dumps({"kind": "qkp", "weights": [1, 2]}))
    with pytest.raises(InstanceFormatError):
        load_instance(partial)
