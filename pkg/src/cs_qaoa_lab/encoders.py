"""COP -> (objective QUBO, constraint QUBO, variable layout)."""

from __future__ import annotations

from cs_qaoa_lab.constraints import ConstraintSpec
from cs_qaoa_lab.problems import CopInstance, LinearCop, MaxKCut, Qap, Qkp, VariableLayout
from cs_qaoa_lab.qubo import Qubo

Encoding = tuple[Qubo, Qubo, VariableLayout]


def _onehot_penalty_terms(group: tuple[int, ...]) -> list[tuple[int, int, float]]:
    """(sum x - 1)^2 without its constant 1."""
    terms = [(q, q, -1.0) for q in group]
    for a in range(len(group)):
        for b in range(a + 1, len(group)):
            terms.append((group[a], group[b], 2.0))
    return terms


def encode_maxkcut(instance: MaxKCut) -> Encoding:
    """Objective is minus the cut size; vertex 0 sits in subset 0.

    Edges touching vertex 0 contribute x_{w,0} (same subset as vertex 0);
    the remaining edges contribute sum_s x_{u,s} x_{v,s}. The constant -|E|
    makes Q_obj equal minus the number of cut edges on feasible states.
    """
    if instance.k < 2:
        raise ValueError(f"Max-k cut needs k >= 2, got k={instance.k}")
    n = instance.n_qubits
    terms: list[tuple[int, int, float]] = []
    for u, v in instance.edges:
        if u == 0:
            terms.append((instance.qubit(v, 0), instance.qubit(v, 0), 1.0))
        else:
            terms += [(instance.qubit(u, s), instance.qubit(v, s), 1.0) for s in range(instance.k)]
    obj = Qubo.from_terms(n, terms, -float(len(instance.edges)))

    groups = instance.groups()
    cst_terms = [t for g in groups for t in _onehot_penalty_terms(g)]
    cst = Qubo.from_terms(n, cst_terms, float(len(groups)))

    labels = tuple((v, s) for v in range(1, instance.n_vertices) for s in range(instance.k))
    return obj, cst, VariableLayout(labels, groups, fixed=((0, 0),))


def encode_qap(instance: Qap) -> Encoding:
    """Objective sums f_ij d_ab x_{i,a} x_{j,b} over ordered pairs i != j, a != b."""
    f, d = instance.flow, instance.distance
    if (f != f.T).any() or (d != d.T).any():
        raise ValueError("QAP flow and distance matrices must be symmetric")
    n_f = instance.n_f
    terms = []
    for i in range(n_f):
        for j in range(n_f):
            if i == j or f[i, j] == 0.0:
                continue
            for a in range(n_f):
                for b in range(n_f):
                    if a != b and d[a, b] != 0.0:
                        terms.append((instance.qubit(i, a), instance.qubit(j, b), float(f[i, j] * d[a, b])))
    obj = Qubo.from_terms(instance.n_qubits, terms)

    groups = (*instance.location_groups(), *instance.facility_groups())
    cst = Qubo.from_terms(
        instance.n_qubits,
        [t for g in groups for t in _onehot_penalty_terms(g)],
        float(len(groups)),
    )
    labels = tuple((i, a) for i in range(n_f) for a in range(n_f))
    return obj, cst, VariableLayout(labels, instance.location_groups())


def encode_qkp(instance: Qkp) -> Encoding:
    """Objective -sum p_ij x_i x_j; constraint (sum w_i x_i / C)^2 with no slack."""
    if instance.capacity <= 0:
        raise ValueError(f"QKP capacity must be positive, got {instance.capacity}")
    n = instance.n_items
    obj = Qubo(n, -instance.profits.copy())
    scaled = instance.weights / instance.capacity
    cst_terms = [(i, i, float(scaled[i] ** 2)) for i in range(n)]
    cst_terms += [(i, j, float(2.0 * scaled[i] * scaled[j])) for i in range(n) for j in range(i + 1, n)]
    cst = Qubo.from_terms(n, cst_terms)
    return obj, cst, VariableLayout(tuple((i,) for i in range(n)))


def _equality_penalty_terms(spec: ConstraintSpec) -> tuple[list[tuple[int, int, float]], float]:
    """(sum a_i x_i + c - t)^2 expanded with x_i^2 = x_i."""
    shift = spec.constant - spec.lower  # type: ignore[operator]
    a = spec.weights
    v = spec.variables
    terms = [(v[i], v[i], float(a[i] ** 2 + 2.0 * shift * a[i])) for i in range(len(v))]
    terms += [(v[i], v[j], float(2.0 * a[i] * a[j])) for i in range(len(v)) for j in range(i + 1, len(v))]
    return terms, float(shift**2)


def encode_linear(instance: LinearCop) -> Encoding:
    n = instance.n_qubits
    terms: list[tuple[int, int, float]] = []
    offset = 0.0
    for spec in instance.equalities:
        t, c = _equality_penalty_terms(spec)
        terms += t
        offset += c
    groups = tuple(spec.variables for spec in instance.equalities if spec.kind == "one-hot")
    layout = VariableLayout(tuple((i,) for i in range(n)), groups)
    return instance.objective, Qubo.from_terms(n, terms, offset), layout


def encode(instance: CopInstance) -> Encoding:
    if isinstance(instance, MaxKCut):
        return encode_maxkcut(instance)
    if isinstance(instance, Qap):
        return encode_qap(instance)
    if isinstance(instance, Qkp):
        return encode_qkp(instance)
    if isinstance(instance, LinearCop):
        return encode_linear(instance)
    raise ValueError(f"Unsupported instance type {type(instance).__name__}")
