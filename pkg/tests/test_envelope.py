"""Envelope machinery: corner lift, rank descent, multiplication tables.

Oracle strategy: the lift dimensions follow from block orthogonality
(2 dim E + 2, checked against hand-built embeddings), and the envelopes of
the worked examples are known subalgebras reachable without the solver:
the diagonal algebra for diagonal systems, the ambient identity map for
rigid systems, a one-dimensional corner for span{E_12}. Multiplication
tables are compared against directly expanded matrix products.
"""

import json

import numpy as np
import pytest
from conftest import random_unitary

from ellis_envelope.channels import (
    ChannelMap,
    check_structure,
    compose,
    random_unital_channel,
)
from ellis_envelope.envelope import (
    ChoiEffrosTable,
    _compression_objective,
    choi_effros_table,
    compute_envelope,
    corner_extract,
    descend_to_minimal,
    lift_map,
    paulsen_lift,
    probe_minimality,
    rigidity_check,
    seed_idempotent,
)
from ellis_envelope.linalg import SubspaceBasis, frobenius, subspace_equal
from ellis_envelope.spectrahedron import OperatorSubspace, build_system_set, sample

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
E12 = np.array([[0, 1], [0, 0]], dtype=complex)


def diag_units(n):
    return [np.diag(np.eye(n)[i]).astype(complex) for i in range(n)]


def matrix_units(n):
    out = []
    for i in range(n):
        for j in range(n):
            u = np.zeros((n, n), dtype=complex)
            u[i, j] = 1.0
            out.append(u)
    return out


def corner_embed(x):
    n = x.shape[0]
    z = np.zeros((2 * n, 2 * n), dtype=complex)
    z[:n, n:] = x
    return z


@pytest.fixture(scope="module")
def d2_space():
    return OperatorSubspace.from_matrices(diag_units(2))


@pytest.fixture(scope="module")
def d2_set(d2_space):
    return build_system_set(d2_space)


@pytest.fixture(scope="module")
def d2_result(d2_space):
    return compute_envelope(d2_space, seed=0)


# ------------------------------------------------------------------------
# corner lift


def test_lift_dimensions_are_two_dim_plus_two():
    cases = [
        ([I2], 4),
        ([E12], 4),
        (matrix_units(2), 10),
    ]
    for mats, want in cases:
        lifted = paulsen_lift(OperatorSubspace.from_matrices(mats))
        assert lifted.ambient == 2 * mats[0].shape[0]
        assert lifted.dim == want
        assert lifted.unital and lifted.selfadjoint


def test_lift_contains_corner_embeddings():
    space = OperatorSubspace.from_matrices([E12, I2 + 0.3 * SX])
    lifted = paulsen_lift(space)
    for x in space.basis.mats:
        z = corner_embed(x)
        assert lifted.basis.distance(z) <= 1e-12
        assert lifted.basis.distance(z.conj().T) <= 1e-12
    assert lifted.basis.distance(np.eye(4, dtype=complex)) <= 1e-12


def test_lift_map_is_ucp_and_fixes_block_projections():
    rng = np.random.default_rng(7)
    phi = random_unital_channel(rng, 2)
    big = lift_map(phi)
    rep = check_structure(big)
    assert rep.cp and rep.unital
    p0 = np.diag([1, 1, 0, 0]).astype(complex)
    p1 = np.diag([0, 0, 1, 1]).astype(complex)
    assert frobenius(big.apply(p0) - p0) <= 1e-12
    assert frobenius(big.apply(p1) - p1) <= 1e-12


def test_lift_corner_roundtrip_is_exact():
    rng = np.random.default_rng(3)
    for k in range(4):
        phi = random_unital_channel(rng, 2, n_kraus=2 + k)
        back = corner_extract(lift_map(phi))
        assert frobenius(back.choi - phi.choi) <= 1e-10


def test_corner_of_ambient_identity_is_identity():
    back = corner_extract(ChannelMap.identity(4))
    assert frobenius(back.superop - np.eye(4)) <= 1e-12


def test_corner_of_diagonal_pinching_is_zero():
    back = corner_extract(ChannelMap.pinching(4))
    assert frobenius(back.superop) <= 1e-12


def test_corner_extract_rejects_block_swappers():
    swap = np.zeros((4, 4), dtype=complex)
    swap[:2, 2:] = np.eye(2)
    swap[2:, :2] = np.eye(2)
    with pytest.raises(ValueError, match="corner projection"):
        corner_extract(ChannelMap.conjugation(swap))


def test_corner_extract_rejects_leakage():
    # transpose fixes both diagonal projections but reflects the corner
    # into the opposite block, so all corner mass leaks
    with pytest.raises(ValueError, match="leakage"):
        corner_extract(ChannelMap.transpose_map(4))


def test_corner_extract_needs_even_ambient():
    with pytest.raises(ValueError, match="M_.2n."):
        corner_extract(ChannelMap.identity(3))


# ------------------------------------------------------------------------
# probe machinery


def test_compression_objective_is_exact_pullback(d2_set):
    rng = np.random.default_rng(5)
    e = ChannelMap.pinching(2)
    theta = sample(d2_set, seed=9)
    for _ in range(4):
        w = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        w = w + w.conj().T
        compressed = compose(e, compose(theta, e))
        lhs = np.vdot(w, compressed.choi)
        rhs = np.vdot(_compression_objective(e, w), theta.choi)
        assert abs(lhs - rhs) <= 1e-10


def test_probe_scores_are_sorted_and_exact(d2_set):
    e = ChannelMap.pinching(2)
    found = probe_minimality(e, d2_set, n_samples=6, seed=0)
    scores = [v for v, _ in found]
    assert scores == sorted(scores, reverse=True)
    v, theta = found[0]
    se = e.superop
    assert abs(v - frobenius(se @ theta.superop @ se - se)) <= 1e-12


def test_seed_idempotent_from_sampled_member(d2_set):
    theta = sample(d2_set, seed=2)
    e = seed_idempotent(theta, d2_set)
    assert frobenius(e.superop @ e.superop - e.superop) <= 1e-7
    assert d2_set.membership(e).ok


def test_descent_rejects_non_idempotent_start(d2_set):
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError, match="idempotent member"):
        descend_to_minimal(d2_set, random_unital_channel(rng, 2))


def test_descent_from_identity_reaches_pinching(d2_set):
    # identity is a member of every system set and has full rank 4; the
    # probes must strictly descend it to the rank-2 diagonal projection
    res = descend_to_minimal(d2_set, ChannelMap.identity(2), seed=0)
    assert res.certificate == "certified"
    assert res.idempotent.rank() == 2
    assert res.trace[0] == (0, 4, 0.0)
    ranks = [rk for _, rk, _ in res.trace]
    assert ranks == sorted(ranks, reverse=True)
    assert frobenius(res.idempotent.superop - ChannelMap.pinching(2).superop) <= 1e-6


def test_descent_budget_exhaustion_is_unverified(d2_set):
    res = descend_to_minimal(d2_set, ChannelMap.identity(2), seed=0, budget=1)
    assert res.certificate == "unverified"
    assert res.violation > 1e-6


# ------------------------------------------------------------------------
# worked envelopes


def test_envelope_of_diagonal_system_is_diagonal_algebra(d2_result, d2_space):
    res = d2_result
    assert res.mode == "system"
    assert res.certificate == "certified"
    assert res.rank == 2
    assert res.corner_map is None
    assert subspace_equal(res.envelope_space, d2_space.basis, tol=1e-7)
    assert res.inclusion_residual <= 1e-8
    assert res.rigidity_violation <= 1e-6
    assert res.choi_effros.ok
    assert res.descent_trace[-1][1] == 2


def test_envelope_of_diagonal_system_m3():
    space = OperatorSubspace.from_matrices(diag_units(3))
    res = compute_envelope(space, seed=0)
    assert res.certificate == "certified"
    assert res.rank == 3
    assert subspace_equal(res.envelope_space, space.basis, tol=1e-7)


def test_envelope_of_rigid_system_is_identity():
    space = OperatorSubspace.from_matrices([I2, SX, SZ])
    res = compute_envelope(space, seed=0)
    assert res.certificate == "certified"
    assert res.rank == 4
    assert frobenius(res.idempotent.superop - np.eye(4)) <= 1e-6
    assert res.rigidity_violation <= 1e-6


def test_envelope_of_full_matrix_algebra_is_identity():
    space = OperatorSubspace.from_matrices(matrix_units(2))
    res = compute_envelope(space, seed=0)
    assert res.certificate == "certified"
    assert res.rank == 4
    assert frobenius(res.idempotent.superop - np.eye(4)) <= 1e-7


def test_envelope_of_trivial_system_is_scalars():
    res = compute_envelope(OperatorSubspace.from_matrices([I2]), seed=0)
    assert res.certificate == "certified"
    assert res.rank == 1
    assert res.envelope_space.distance(I2 / np.sqrt(2.0)) <= 1e-7
    # any two minimal unital idempotents are similar: e = f.e and f = e.f
    e = res.idempotent
    f = ChannelMap.trace_state(2)
    assert frobenius(compose(f, e).superop - e.superop) <= 1e-6
    assert frobenius(compose(e, f).superop - f.superop) <= 1e-6


def test_envelope_space_mode_one_corner():
    space = OperatorSubspace.from_matrices([E12])
    res = compute_envelope(space, mode="auto", seed=0)
    assert res.mode == "space"
    assert res.certificate == "certified"
    assert res.rank == 1
    assert res.corner_map is not None
    assert res.corner_map.dim_in == 2
    assert res.idempotent.dim_in == 4
    # members of the lifted set fix both block projections and the span of
    # E_12, so their ranks are at least 4; the descent must end there
    assert res.idempotent.rank() == 4
    assert res.inclusion_residual <= 1e-6
    assert res.rigidity_violation <= 1e-6


def test_envelope_mode_validation(d2_space):
    with pytest.raises(ValueError, match="unknown mode"):
        compute_envelope(d2_space, mode="banana")


def test_space_mode_refuses_nothing_system_mode_requires_flags():
    space = OperatorSubspace.from_matrices([E12])
    with pytest.raises(ValueError, match="corner lift"):
        compute_envelope(space, mode="system")


def test_rigidity_check_fresh_seed(d2_result, d2_set):
    assert rigidity_check(d2_result, d2_set, seed=5) <= 1e-6


def test_envelope_is_deterministic(d2_space):
    a = compute_envelope(d2_space, seed=3)
    b = compute_envelope(d2_space, seed=3)
    assert a.descent_trace == b.descent_trace
    assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)


def test_envelope_to_json_shape(d2_result):
    obj = d2_result.to_json()
    for key in (
        "mode",
        "rank",
        "certificate",
        "rigidity_violation",
        "inclusion_residual",
        "idempotent",
        "envelope_basis",
        "descent_trace",
        "choi_effros",
        "seed",
        "tol",
    ):
        assert key in obj
    assert "corner_map" not in obj  # system mode
    json.dumps(obj)  # json-serializable throughout


# ------------------------------------------------------------------------
# multiplication tables


def test_choi_effros_identity_gives_matrix_units_table():
    e = ChannelMap.identity(2)
    basis = SubspaceBasis(np.stack(matrix_units(2)))
    table = choi_effros_table(e, basis)
    mats = matrix_units(2)
    want = np.zeros((4, 4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            prod = mats[i] @ mats[j]
            for k in range(4):
                want[i, j, k] = np.trace(mats[k].conj().T @ prod)
    assert np.max(np.abs(table.coefficients - want)) <= 1e-12
    assert table.associativity_residual <= 1e-12
    assert table.unit_residual <= 1e-12
    assert table.closure_residual <= 1e-12
    assert table.ok


def test_choi_effros_pinching_gives_diagonal_product():
    e = ChannelMap.pinching(3)
    basis = SubspaceBasis(np.stack(diag_units(3)))
    table = choi_effros_table(e, basis)
    want = np.zeros((3, 3, 3), dtype=complex)
    for i in range(3):
        want[i, i, i] = 1.0
    assert np.max(np.abs(table.coefficients - want)) <= 1e-12
    assert table.associativity_residual <= 1e-12
    assert table.ok


def test_choi_effros_requires_fixed_basis():
    basis = SubspaceBasis(np.stack([E12]))
    with pytest.raises(ValueError, match="not fixed"):
        choi_effros_table(ChannelMap.pinching(2), basis)


def test_choi_effros_json_roundtrippable():
    table = choi_effros_table(
        ChannelMap.pinching(2), SubspaceBasis(np.stack(diag_units(2)))
    )
    obj = table.to_json()
    assert obj["associativity_residual"] <= 1e-12
    json.dumps(obj)
    assert isinstance(table, ChoiEffrosTable)
