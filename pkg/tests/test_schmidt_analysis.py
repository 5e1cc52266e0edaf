import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

import StateFactory
from Schmidt.Certificates import (
    SchmidtProjectorSet,
    construct_projectors,
    merge_rows,
    refine_to_support,
    verify_schmidt_projectors,
)
from Schmidt.Commutant import commutant_partition, correlation_operators
from Schmidt.Connectivity import (
    UnionFind,
    basis_connectivity_partition,
    connectivity_certificate,
)
from Schmidt.SchmidtOps import (
    analyze,
    generic_partition,
    qubit_ghz_check,
    s_local_analyze,
    two_block_check,
)
from Tensors.TensorOps import (
    Projector,
    StateVector,
    apply_local_unitaries,
    haar_state,
    random_local_unitaries,
    schmidt_decompose,
    schmidt_in_basis,
)
from tests.conftest import ket

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
PLUS = np.array([1.0, 1.0]) / np.sqrt(2)
MINUS = np.array([1.0, -1.0]) / np.sqrt(2)
RESIDUAL = 1e-8


def _diag(*entries) -> Projector:
    return Projector(np.diag(entries).astype(float))


def _rows(*rows, dims):
    return SchmidtProjectorSet(rows=tuple(tuple(r) for r in rows), dims=dims)


def _generalized_ghz(n: int, alpha: float, beta: float) -> StateVector:
    dims = (2,) * n
    return StateVector.from_amplitudes(dims, ket(dims, (0,) * n, (1,) * n, coeffs=[alpha, beta]))


def _scrambled(state: StateVector, seed: int) -> StateVector:
    return apply_local_unitaries(state, random_local_unitaries(state.dims, np.random.default_rng(seed)))


def _assert_certified(state, report):
    check = verify_schmidt_projectors(state, report.certificate)
    assert check, check.failures
    assert check.reconstruction_residual <= RESIDUAL
    assert check.orthogonality_residual <= RESIDUAL


# ────────────────────────────────────────────────────────────────
# correlation operators and commutant
# ----------------------------------------------------------------
def test_correlation_operator_of_ghz(ghz3):
    corr = correlation_operators(ghz3, 0)
    op = corr.operators[corr.labels.index("party 1: |0><0|")]
    assert_allclose(np.sort(np.linalg.eigvalsh(op)), [0.0, 0.5], atol=1e-14)
    assert corr.basis.shape == (2, 2)


def test_correlation_operators_of_product_are_scalars(product3):
    corr = correlation_operators(product3, 0)
    assert all(op.shape == (1, 1) for op in corr.operators)


def test_correlation_operator_of_w_couples_both_vectors(w3):
    corr = correlation_operators(w3, 0)
    op = corr.operators[corr.labels.index("party 1: |0><1|")]
    assert abs(op[0, 1]) + abs(op[1, 0]) == pytest.approx(1 / 3, abs=1e-12)


def test_correlation_operators_need_three_parties(bell):
    with pytest.raises(ValueError, match="n >= 3"):
        correlation_operators(bell, 0)


def test_commutant_of_distinct_diagonal_splits():
    blocks = commutant_partition([np.diag([0.3, 0.7])], 2)
    assert sorted(q.rank for q in blocks) == [1, 1]


def test_commutant_of_sigma_x_is_plus_minus():
    blocks = commutant_partition([SIGMA_X], 2)
    found = sorted((q.matrix for q in blocks), key=lambda m: -m[0, 1].real)
    assert_allclose(found[0], np.outer(PLUS, PLUS), atol=1e-9)
    assert_allclose(found[1], np.outer(MINUS, MINUS), atol=1e-9)


def test_commutant_of_ghz_operators_is_computational(ghz3):
    corr = correlation_operators(ghz3, 0)
    blocks = commutant_partition(corr.operators, 2)
    assert len(blocks) == 2
    lifted = sorted(
        (corr.basis @ q.matrix @ corr.basis.conj().T for q in blocks),
        key=lambda m: -m[0, 0].real,
    )
    assert_allclose(lifted[0], np.diag([1.0, 0.0]), atol=1e-9)
    assert_allclose(lifted[1], np.diag([0.0, 1.0]), atol=1e-9)


def test_commutant_of_irreducible_family_is_trivial():
    rng = np.random.default_rng(1)
    ops = [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(2)]
    blocks = commutant_partition(ops, 3)
    assert len(blocks) == 1
    assert_allclose(blocks[0].matrix, np.eye(3), atol=1e-12)


def test_commutant_respects_hidden_block_structure():
    rng = np.random.default_rng(2)
    u = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))[0]
    ops = []
    for _ in range(3):
        a = np.zeros((4, 4), dtype=complex)
        a[:2, :2] = rng.standard_normal((2, 2))
        a[2:, 2:] = rng.standard_normal((2, 2))
        ops.append(u @ a @ u.conj().T)
    blocks = commutant_partition(ops, 4)
    assert sorted(q.rank for q in blocks) == [2, 2]


# ────────────────────────────────────────────────────────────────
# certificates
# ----------------------------------------------------------------
def test_construct_projectors_ghz(ghz3):
    schmidt = schmidt_in_basis(ghz3, 0, np.eye(2))
    cert = construct_projectors(ghz3, 0, [[0], [1]], schmidt)
    for row, diag in zip(cert.rows, ([1.0, 0.0], [0.0, 1.0])):
        for proj in row:
            assert_allclose(proj.matrix, np.diag(diag), atol=1e-12)
    assert verify_schmidt_projectors(ghz3, cert)


def test_construct_projectors_excludes_unused_basis_vector():
    state = StateFactory.completely_gsd((3, 3, 3), (0.6, 0.4))
    cert = construct_projectors(state, 0, [[0], [1]])
    for row, diag in zip(cert.rows, ([1.0, 0, 0], [0, 1.0, 0])):
        for proj in row:
            assert_allclose(proj.matrix, np.diag(diag), atol=1e-12)


def test_construct_projectors_two_blocks_of_three(gsd333):
    cert = construct_projectors(gsd333, 0, [[0, 1], [2]])
    assert [proj.rank for proj in cert.rows[0]] == [2, 2, 2]
    assert [proj.rank for proj in cert.rows[1]] == [1, 1, 1]
    assert verify_schmidt_projectors(gsd333, cert)


def test_construct_projectors_needs_two_blocks(ghz3):
    with pytest.raises(ValueError, match="L >= 2"):
        construct_projectors(ghz3, 0, [[0, 1]])
    with pytest.raises(ValueError, match="not a partition"):
        construct_projectors(ghz3, 0, [[0], [0]])


def test_verify_ghz_rows(ghz3):
    p0, p1 = _diag(1, 0), _diag(0, 1)
    assert verify_schmidt_projectors(ghz3, _rows([p0] * 3, [p1] * 3, dims=(2, 2, 2)))


def test_verify_rejects_plus_minus_rows(ghz3):
    pp, pm = Projector(np.outer(PLUS, PLUS)), Projector(np.outer(MINUS, MINUS))
    check = verify_schmidt_projectors(ghz3, _rows([pp] * 3, [pm] * 3, dims=(2, 2, 2)))
    assert not check
    assert not check.reconstructs
    assert check.orthogonal


def test_verify_rejects_single_identity_row(w3):
    check = verify_schmidt_projectors(w3, _rows([Projector.identity(2)] * 3, dims=(2, 2, 2)))
    assert not check
    assert not check.enough_rows
    assert check.reconstructs


def test_verify_reports_dimension_mismatch(ghz3):
    check = verify_schmidt_projectors(StateFactory.ghz(2), _rows([_diag(1, 0)] * 3, [_diag(0, 1)] * 3, dims=(2, 2, 2)))
    assert not check
    assert "dimensions" in check.failures[0]


def test_refine_to_support_trims_rows_outside_the_support():
    state = StateFactory.completely_gsd((3, 3, 3), (0.6, 0.4))
    wide = _rows([_diag(1, 0, 0)] * 3, [_diag(0, 1, 1)] * 3, dims=(3, 3, 3))
    before = verify_schmidt_projectors(state, wide)
    assert before
    # rows sum to I, the support misses |2⟩
    assert before.refinement_residual == pytest.approx(1.0, abs=1e-9)

    refined = refine_to_support(state, wide)
    after = verify_schmidt_projectors(state, refined)
    assert after
    assert after.refinement_residual <= 1e-9
    assert all(row[i].rank == 1 for row in refined.rows for i in range(3))


def test_merged_rows_stay_certified(gsd333):
    cert = analyze(gsd333).certificate
    for groups in ([[0, 1], [2]], [[0], [1, 2]], [[0, 2], [1]]):
        merged = merge_rows(cert, groups)
        assert merged.L == 2
        assert verify_schmidt_projectors(gsd333, merged)


# ────────────────────────────────────────────────────────────────
# connectivity oracle
# ----------------------------------------------------------------
def test_union_find_groups():
    uf = UnionFind(5)
    uf.union(3, 1)
    uf.union(4, 0)
    assert uf.groups() == [[0, 4], [1, 3], [2]]


def test_connectivity_ghz(ghz3):
    comps = basis_connectivity_partition(ghz3)
    assert comps == [[(0, 0, 0)], [(1, 1, 1)]]
    cert = connectivity_certificate(ghz3, comps)
    assert verify_schmidt_projectors(ghz3, cert)


def test_connectivity_w(w3):
    assert len(basis_connectivity_partition(w3)) == 1


def test_connectivity_shared_first_coordinate():
    state = StateVector.from_amplitudes((2, 2), ket((2, 2), (0, 0), (0, 1)))
    assert len(basis_connectivity_partition(state)) == 1
    with pytest.raises(ValueError, match="2 components"):
        connectivity_certificate(state, basis_connectivity_partition(state))


# ────────────────────────────────────────────────────────────────
# analyze: examples
# ----------------------------------------------------------------
def test_analyze_ghz(ghz3):
    report = analyze(ghz3)
    assert report.undetermined
    assert report.schmidt_number == 2
    assert report.path == "qubit-fastpath"
    _assert_certified(ghz3, report)


def test_analyze_product(product3):
    report = analyze(product3)
    assert report.verdict == "determined"
    assert report.schmidt_number == 1
    assert report.certificate is None


def test_analyze_w(w3):
    report = analyze(w3)
    assert not report.undetermined
    assert report.schmidt_number == 1


def test_analyze_completely_gsd(gsd333):
    report = analyze(gsd333)
    assert report.undetermined
    assert report.schmidt_number == 3
    assert report.path == "generic"
    assert not report.lower_bound
    assert report.partition == ((0,), (1,), (2,))
    _assert_certified(gsd333, report)
    # heaviest block first
    assert_allclose(report.certificate.block_weights(gsd333), [0.5, 0.3, 0.2], atol=1e-12)


def test_analyze_bipartite(bell):
    report = analyze(bell)
    assert report.path == "bipartite"
    assert report.schmidt_number == 2
    _assert_certified(bell, report)


def test_analyze_bipartite_rank_three():
    state = StateFactory.haar((3, 4), seed=8)
    report = analyze(state)
    assert report.schmidt_number == 3
    _assert_certified(state, report)


def test_analyze_equal_weights_takes_commutant_path():
    state = _scrambled(StateFactory.completely_gsd((3, 3, 3), (1 / 3, 1 / 3, 1 / 3)), seed=4)
    report = analyze(state)
    assert report.path == "degenerate-commutant"
    assert report.lower_bound
    assert report.schmidt_number == 3
    _assert_certified(state, report)


def test_analyze_dicke_is_determined():
    report = analyze(StateFactory.dicke(4, 2))
    assert not report.undetermined
    assert report.path == "qubit-fastpath"
    assert not report.lower_bound


def test_qubit_verdicts_are_exact(ghz3):
    report = analyze(ghz3)
    assert not report.lower_bound
    doc = report.to_dict()
    assert doc["lower_bound"] is False
    assert doc["ghz_form"]["alpha"] == pytest.approx(1 / np.sqrt(2))
    assert len(doc["ghz_form"]["bases"]) == 3


@pytest.mark.parametrize("n", [3, 4])
def test_equal_weight_ghz_is_certified_for_every_seed(n):
    # both pivot weights equal: the basis comes from the correlations alone
    state = _scrambled(_generalized_ghz(n, 1.0, 1.0), seed=n)
    for seed in range(4):
        report = analyze(state, seed=seed)
        assert report.undetermined
        assert not report.lower_bound
        assert report.path == "qubit-fastpath"
        _assert_certified(state, report)
        assert report.ghz_form.residual <= 1e-9


def test_qutrit_reports_carry_no_ghz_form(gsd333, ghz3):
    assert analyze(gsd333).ghz_form is None
    assert analyze(gsd333).to_dict()["ghz_form"] is None
    assert s_local_analyze(ghz3, [0, 1]).ghz_form is None


def test_analyze_report_serializes_one_based(gsd333):
    doc = analyze(gsd333).to_dict()
    assert doc["pivot"] == 1
    assert doc["partition"] == [[1], [2], [3]]
    assert doc["certificate"]["parties"] == [1, 2, 3]
    assert len(doc["certificate"]["rows"]) == 3


def test_generic_partition_examples(w3, gsd333):
    assert generic_partition(w3, 0) == ((0, 1),)
    assert generic_partition(gsd333, 0) == ((0,), (1,), (2,))
    dims = (2, 2, 2)
    split = StateVector.from_amplitudes(
        dims, ket(dims, (0, 0, 0), (1, 1, 1), coeffs=[np.sqrt(0.6), np.sqrt(0.4)])
    )
    assert generic_partition(split, 0) == ((0,), (1,))


def test_generic_partition_refuses_degenerate_pivot(ghz3):
    with pytest.raises(ValueError, match="degenerate"):
        generic_partition(ghz3, 0)


def test_two_block_check(ghz3, gsd333, w3):
    assert two_block_check(ghz3).L == 2
    merged = two_block_check(gsd333)
    assert merged.L == 2
    assert [merged.rows[1][i].rank for i in range(3)] == [2, 2, 2]
    assert two_block_check(w3) is None


def test_qubit_ghz_check_examples(ghz3, w3):
    form = qubit_ghz_check(ghz3)
    assert form.alpha == pytest.approx(1 / np.sqrt(2))
    assert form.beta == pytest.approx(1 / np.sqrt(2))
    assert form.residual <= 1e-9
    assert qubit_ghz_check(w3) is None


def test_qubit_ghz_check_plus_minus():
    dims = (2, 2)
    amps = 0.8 * np.kron(PLUS, PLUS) + 0.6 * np.kron(MINUS, MINUS)
    form = qubit_ghz_check(StateVector(dims, amps))
    assert form.alpha == pytest.approx(0.8)
    assert form.beta == pytest.approx(0.6)
    for basis in form.bases:
        assert abs(np.vdot(PLUS, basis[:, 0])) == pytest.approx(1.0)
        assert abs(np.vdot(MINUS, basis[:, 1])) == pytest.approx(1.0)


def test_qubit_ghz_check_rejects_qutrits(gsd333):
    with pytest.raises(ValueError, match="dimension 2"):
        qubit_ghz_check(gsd333)


# ────────────────────────────────────────────────────────────────
# S-local analysis
# ----------------------------------------------------------------
def test_s_local_ghz_pair(ghz3):
    report = s_local_analyze(ghz3, [0, 1])
    assert report.undetermined
    assert report.schmidt_number == 2
    rows = report.certificate.rows
    assert all(row[2].rank == 2 for row in rows)
    _assert_certified(ghz3, report)


def test_s_local_zero_bell(zero_bell):
    inside = s_local_analyze(zero_bell, [1, 2])
    assert inside.undetermined
    _assert_certified(zero_bell, inside)
    assert not s_local_analyze(zero_bell, [0, 1]).undetermined
    # on all three parties the rank-1 first party settles it
    assert not analyze(zero_bell).undetermined


def test_s_local_needs_two_parties(ghz3):
    with pytest.raises(ValueError, match="at least 2"):
        s_local_analyze(ghz3, [1])


def test_pivot_outside_subset_is_rejected(ghz3):
    with pytest.raises(ValueError, match="not in the party subset"):
        s_local_analyze(ghz3, [0, 1], pivot=2)


# ────────────────────────────────────────────────────────────────
# acceptance: qubit characterization
# ----------------------------------------------------------------
@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_generalized_ghz_is_undetermined(n):
    rng = np.random.default_rng(100 + n)
    for trial in range(5):
        alpha, beta = rng.uniform(0.2, 1.0, 2)
        if trial == 0:
            beta = alpha
        state = _scrambled(_generalized_ghz(n, alpha, beta), seed=1000 * n + trial)
        report = analyze(state)
        assert report.undetermined
        assert report.schmidt_number == 2
        _assert_certified(state, report)

        form = qubit_ghz_check(state)
        norm = np.hypot(alpha, beta)
        assert form.alpha == pytest.approx(max(alpha, beta) / norm, abs=1e-8)
        assert form.beta == pytest.approx(min(alpha, beta) / norm, abs=1e-8)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_w_dicke_and_haar_qubits_are_determined(n):
    assert not analyze(StateFactory.w(n)).undetermined
    assert qubit_ghz_check(StateFactory.w(n)) is None
    assert not analyze(StateFactory.dicke(n, 2)).undetermined
    rng = np.random.default_rng(n)
    for _ in range(100):
        state = haar_state((2,) * n, rng)
        report = analyze(state)
        assert not report.undetermined
        assert report.path == "qubit-fastpath"


# ────────────────────────────────────────────────────────────────
# acceptance: completely GSD families
# ----------------------------------------------------------------
@pytest.mark.parametrize("d", [3, 4])
@pytest.mark.parametrize("m", [2, 3, 4])
def test_completely_gsd_schmidt_number(d, m):
    if m > d:
        pytest.skip("m terms need m <= d")
    rng = np.random.default_rng(10 * d + m)
    lambdas = rng.dirichlet(np.ones(m))
    state = _scrambled(StateFactory.completely_gsd((d, d, d), lambdas), seed=d * m)
    report = analyze(state)
    assert report.schmidt_number == m
    _assert_certified(state, report)


# ────────────────────────────────────────────────────────────────
# acceptance: planted certificates
# ----------------------------------------------------------------
PLANTED_DIMS = [(3, 3, 3), (4, 4, 4), (3, 4, 3), (3, 3, 3, 3), (4, 4, 4, 4)]


@pytest.mark.parametrize("seed", range(50))
def test_planted_blocks_are_recovered(seed):
    rng = np.random.default_rng(seed)
    dims = PLANTED_DIMS[seed % len(PLANTED_DIMS)]
    blocks = int(rng.integers(2, 4))
    plain = StateFactory.planted(dims, blocks, seed=seed)
    assert len(basis_connectivity_partition(plain)) == blocks

    state = _scrambled(plain, seed=10_000 + seed)
    report = analyze(state)
    assert report.schmidt_number == blocks
    _assert_certified(state, report)


# ────────────────────────────────────────────────────────────────
# properties
# ----------------------------------------------------------------
@pytest.mark.parametrize("seed", range(100))
def test_generic_path_matches_component_count(seed):
    rng = np.random.default_rng(seed)
    if seed % 2:
        state = _scrambled(StateFactory.planted((3, 3, 3), int(rng.integers(2, 4)), seed=seed), seed=seed)
    else:
        state = haar_state((2, 3, 3), rng)
    schmidt = schmidt_decompose(state, 0)
    assert schmidt.is_generic()
    components = generic_partition(state, 0, schmidt=schmidt)
    report = analyze(state, pivot=0)
    assert report.undetermined == (len(components) >= 2)
    assert report.schmidt_number == max(1, len(components))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_verdict_is_local_unitary_invariant(seed):
    rng = np.random.default_rng(seed)
    base = StateFactory.planted((3, 3, 3), int(rng.integers(1, 4)), seed=seed % 10_000)
    other = _scrambled(base, seed=seed % 99_991)
    a, b = analyze(base), analyze(other)
    assert a.verdict == b.verdict
    assert a.schmidt_number == b.schmidt_number
