"""Tests for the witness engine."""

import pytest
import numpy as np

import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../../..')))

from src.core.bipartite import BipartiteDims, PureVector, Subspace, direct_sum, orthogonal_complement, schmidt
from src.core.detection import random_hermitian, random_spectral_observable, random_subspace
from src.core.errors import WitnessHypothesisError
from src.core.optimization import OptimizerConfig, OptimizerTrace
from src.core.subspace_lab import tiles_upb, upb_complement
from src.core.witness_engine import (
    build_witness,
    check_necessary,
    eigenvalue_conditions,
    epsilon_min,
    example_c3c4,
    is_k_witness,
    k_sup_norm,
    min_over_sk,
    projector_witness,
    spectral_split,
    spectral_structure_checks,
    upb_epsilon_bound,
    upb_witness,
)

SQRT2 = np.sqrt(2.0)


@pytest.fixture
def cfg():
    """Optimizer configuration with a reduced budget."""
    return OptimizerConfig(starts=8)


@pytest.fixture
def two_qubits():
    return BipartiteDims(d1=2, d2=2)


@pytest.fixture
def bell_span(two_qubits):
    return Subspace(two_qubits, np.array([1, 0, 0, 1]) / SQRT2)


@pytest.fixture
def max_entangled_3x3():
    """span{(e1f1 + e2f2 + e3f3)/sqrt(3)}."""
    dims = BipartiteDims(d1=3, d2=3)
    return Subspace(dims, np.eye(3).reshape(-1) / np.sqrt(3))


def split_parts(v_minus: Subspace, v_zero: Subspace = None):
    """V_plus, V_zero, V_minus and projector parts for a given negative space."""
    dims = v_minus.ambient_dims
    v_zero = v_zero or Subspace.zero(dims)
    v_plus = orthogonal_complement(direct_sum(v_zero, v_minus))
    return v_plus, v_zero, v_minus, v_plus.projector(), v_minus.projector()


def test_spectral_split_of_projector_witness(two_qubits, bell_span):
    split = spectral_split(projector_witness(bell_span, 0.5), two_qubits)
    assert split.signature == (3, 1, 0)
    assert split.lambda_minus_max == pytest.approx(0.5)
    assert split.lambda_plus_min == pytest.approx(0.5)
    np.testing.assert_allclose(split.reconstruct(), projector_witness(bell_span, 0.5), atol=1e-12)


def test_spectral_split_zero_band(two_qubits):
    w = np.diag([1.0, -1.0, 0.0, 1e-12]).astype(complex)
    split = spectral_split(w, two_qubits)
    assert split.signature == (1, 1, 2)
    assert split.v_zero.dim == 2


def test_spectral_split_rejects_non_hermitian(two_qubits):
    w = np.zeros((4, 4), dtype=complex)
    w[0, 1] = 1.0
    with pytest.raises(ValueError, match="observable is not Hermitian"):
        spectral_split(w, two_qubits)


def test_epsilon_min_fixed_points(bell_span, max_entangled_3x3, cfg):
    """Squared top Schmidt coefficient of a single vector."""
    assert abs(epsilon_min(bell_span, cfg) - 0.5) < 1e-6
    assert abs(epsilon_min(max_entangled_3x3, cfg) - 1 / 3) < 1e-6


@pytest.mark.parametrize("d1,d2", [(2, 2), (2, 3), (3, 3), (3, 4)])
def test_epsilon_min_of_single_vector_is_top_schmidt_weight(d1, d2, cfg):
    dims = BipartiteDims(d1=d1, d2=d2)
    for seed in range(20):
        v = random_subspace(dims, 1, seed=seed)
        top = schmidt(v.basis[0]).coefficients[0] ** 2
        assert abs(epsilon_min(v, cfg) - top) < 1e-8


def test_epsilon_min_with_product_vector(two_qubits, cfg):
    """span{singlet, Bell} holds a product vector, so its sup norm is 1."""
    v = Subspace(two_qubits, np.column_stack([np.array([0, 1, -1, 0]) / SQRT2,
                                               np.array([1, 0, 0, 1]) / SQRT2]))
    assert abs(epsilon_min(v, cfg) - 1.0) < 1e-6


def test_epsilon_min_empty(two_qubits, cfg):
    with pytest.raises(ValueError, match="empty subspace"):
        epsilon_min(Subspace.zero(two_qubits), cfg)


def test_k_sup_norm_matches_epsilon_min(bell_span, max_entangled_3x3, cfg):
    assert abs(k_sup_norm(bell_span, 1, cfg) - 0.5) < 1e-6
    assert abs(k_sup_norm(max_entangled_3x3, 2, cfg) - 2 / 3) < 1e-6


def test_projector_witness_rejects_bad_epsilon(bell_span):
    for epsilon in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            projector_witness(bell_span, epsilon)


def test_tight_witness_boundary(two_qubits, bell_span, cfg):
    """epsilon * I - P_Bell turns into a witness at epsilon = 1/2."""
    below = is_k_witness(projector_witness(bell_span, 0.5 - 1e-4), two_qubits, 1, cfg)
    assert not below.is_witness
    assert below.violating_vector is not None
    assert below.reason.startswith("negative expectation")

    above = is_k_witness(projector_witness(bell_span, 0.5 + 1e-4), two_qubits, 1, cfg)
    assert above.is_witness
    assert above.detecting_vector is not None
    assert above.condition1.holds and above.condition2.holds and above.condition3.holds

    value, argmin = min_over_sk(projector_witness(bell_span, 0.5), two_qubits, 1, cfg)
    assert abs(value) < 1e-6
    assert abs(argmin.norm - 1) < 1e-10


@pytest.mark.slow
@pytest.mark.parametrize("d1,d2", [(2, 2), (2, 3), (3, 3)])
def test_projector_witness_tight_on_random_vectors(d1, d2, cfg):
    """eps * I - P_psi is a witness 1e-4 above the top Schmidt weight and not 1e-4 below."""
    dims = BipartiteDims(d1=d1, d2=d2)
    failures = []
    checked = 0
    for seed in range(50):
        v = random_subspace(dims, 1, seed=seed)
        top = float(schmidt(v.basis[0]).coefficients[0] ** 2)
        # nearly product vectors leave no room above the boundary
        if top > 1 - 1e-3:
            continue
        checked += 1
        above = is_k_witness(projector_witness(v, top + 1e-4), dims, 1, cfg, with_conditions=False)
        below = is_k_witness(projector_witness(v, top - 1e-4), dims, 1, cfg, with_conditions=False)
        if not above.is_witness or below.is_witness:
            failures.append(seed)
    assert checked >= 45
    assert failures == []


@pytest.mark.parametrize("d1,d2", [(3, 3), (3, 4)])
def test_min_over_sk_nonincreasing_in_k(d1, d2):
    """S_k grows with k, so the minimum can only go down; at k = d1 it is lambda_min."""
    cfg = OptimizerConfig(starts=16)
    dims = BipartiteDims(d1=d1, d2=d2)
    for seed in range(5):
        w = random_hermitian(dims, seed=seed)
        values = [min_over_sk(w, dims, k, cfg)[0] for k in range(1, d1 + 1)]
        for smaller, larger in zip(values, values[1:]):
            assert larger <= smaller + 1e-8
        assert values[-1] == pytest.approx(np.linalg.eigvalsh(w)[0], abs=1e-10)


def test_is_k_witness_positive_observable(two_qubits, cfg):
    report = is_k_witness(np.eye(4), two_qubits, 1, cfg)
    assert not report.is_witness
    assert report.reason == "no negative eigenvalue"
    assert report.sk_positive


def test_is_k_witness_full_rank_k(two_qubits, bell_span, cfg):
    """For k = d1 there is nothing left to detect."""
    report = is_k_witness(projector_witness(bell_span, 0.6), two_qubits, 2, cfg)
    assert not report.is_witness
    assert report.min_over_sk == pytest.approx(-0.4)
    assert report.condition1 is None


def test_is_k_witness_k_out_of_range(two_qubits, cfg):
    with pytest.raises(ValueError, match="k out of range"):
        is_k_witness(np.eye(4), two_qubits, 3, cfg)


def test_is_k_witness_report_serializes(two_qubits, bell_span, cfg):
    report = is_k_witness(projector_witness(bell_span, 0.7), two_qubits, 1, cfg)
    data = report.to_dict()
    assert data["is_witness"] is True
    assert data["signature"] == [3, 1, 0]
    assert len(data["detecting_vector"]["coords"]) == 4


def test_check_necessary_flags_product_negative_vector(two_qubits, cfg):
    """A product negative eigenvector breaks the second condition."""
    split = spectral_split(np.diag([-1.0, 1.0, 1.0, 1.0]).astype(complex), two_qubits)
    conditions = check_necessary(split, 1, cfg)
    assert conditions.condition1.holds
    assert not conditions.condition2.holds
    assert conditions.condition2.counterexample is not None
    assert not conditions.all_hold


def test_check_necessary_flags_tilde_subspace_reaching_v_minus(two_qubits, cfg):
    """Kernel span{e1 f1} with V_minus = span{(e1 f2 + e2 f1)/sqrt(2)} breaks the third condition."""
    e = np.eye(4)
    v_zero = Subspace(two_qubits, e[:, 0])
    v_minus = Subspace(two_qubits, (e[:, 1] + e[:, 2]) / SQRT2)
    _, _, _, w_plus, w_minus = split_parts(v_minus, v_zero)
    w = w_plus - w_minus

    conditions = check_necessary(spectral_split(w, two_qubits), 1, cfg)
    assert conditions.condition1.holds
    assert not conditions.condition3.holds
    assert conditions.condition3.counterexample is not None
    assert "reaches V_minus" in conditions.condition3.detail
    assert len(conditions.kernel_vectors) >= 1
    assert not conditions.all_hold

    report = is_k_witness(w, two_qubits, 1, cfg)
    assert not report.is_witness
    assert not report.condition3.holds


def test_eigenvalue_conditions_values(two_qubits, bell_span, cfg):
    split = spectral_split(projector_witness(bell_span, 0.6), two_qubits)
    eig = eigenvalue_conditions(split, cfg)
    assert eig.necessary_fraction == pytest.approx(0.6)
    assert eig.epsilon_minus == pytest.approx(0.5, abs=1e-6)
    assert eig.necessary_holds and eig.sufficient_holds

    split = spectral_split(projector_witness(bell_span, 0.4), two_qubits)
    eig = eigenvalue_conditions(split, cfg)
    assert not eig.necessary_holds and not eig.sufficient_holds


def test_eigenvalue_conditions_need_both_parts(two_qubits, cfg):
    with pytest.raises(ValueError, match="V_plus is empty"):
        eigenvalue_conditions(spectral_split(-np.eye(4), two_qubits), cfg)
    with pytest.raises(ValueError, match="V_minus is empty"):
        eigenvalue_conditions(spectral_split(np.eye(4), two_qubits), cfg)


def test_eigenvalue_conditions_product_kernel(two_qubits, cfg):
    """A kernel holding a product vector disables the sufficient test."""
    w = np.diag([1.0, 1.0, 0.0, -1.0]).astype(complex)
    eig = eigenvalue_conditions(spectral_split(w, two_qubits), cfg)
    assert not eig.sufficient_holds
    assert eig.reason == "kernel contains a product vector"


@pytest.mark.slow
def test_eigenvalue_conditions_agree_with_certification():
    """Necessary holds for every witness; sufficient implies witness."""
    cfg = OptimizerConfig(starts=8)
    necessary_failures, sufficient_failures = [], []
    seeds = np.random.SeedSequence(77).generate_state(100)
    for index, seed in enumerate(seeds):
        dims = BipartiteDims(d1=2, d2=2) if index % 2 == 0 else BipartiteDims(d1=2, d2=3)
        w = random_spectral_observable(dims, seed=int(seed))
        report = is_k_witness(w, dims, 1, cfg)
        if report.is_witness and not report.necessary_eig_holds:
            necessary_failures.append(int(seed))
        if report.sufficient_eig_holds and not report.is_witness:
            sufficient_failures.append(int(seed))
    assert necessary_failures == []
    assert sufficient_failures == []


def test_build_witness_bell(two_qubits, bell_span, cfg):
    """lambda_star = 1 for V_minus = span{Bell}; just below it fails."""
    v_plus, v_zero, v_minus, w_plus, w_minus = split_parts(bell_span)
    lam, w = build_witness(v_plus, v_zero, v_minus, w_plus, w_minus, 1, cfg)
    assert abs(lam - 1.0) < 1e-4
    assert is_k_witness(w, two_qubits, 1, cfg, with_conditions=False).is_witness
    weaker = lam * (1 - 1e-4) * w_plus - w_minus
    assert not is_k_witness(weaker, two_qubits, 1, cfg, with_conditions=False).is_witness


def test_build_witness_max_entangled(max_entangled_3x3, cfg):
    """lambda_star = 1/2 for the maximally entangled vector of (3,3)."""
    dims = max_entangled_3x3.ambient_dims
    v_plus, v_zero, v_minus, w_plus, w_minus = split_parts(max_entangled_3x3)
    lam, _ = build_witness(v_plus, v_zero, v_minus, w_plus, w_minus, 1, cfg)
    assert abs(lam - 0.5) < 1e-4
    weaker = lam * (1 - 1e-4) * w_plus - w_minus
    assert not is_k_witness(weaker, dims, 1, cfg, with_conditions=False).is_witness


def test_build_witness_hypotheses(two_qubits, cfg):
    """Each failing hypothesis is reported by name."""
    e = np.eye(4)
    v_plus, v_zero, v_minus, w_plus, w_minus = split_parts(Subspace.zero(two_qubits))
    with pytest.raises(WitnessHypothesisError) as info:
        build_witness(v_plus, v_zero, v_minus, w_plus, w_minus, 1, cfg)
    assert info.value.condition == "i"

    v_plus, v_zero, v_minus, w_plus, w_minus = split_parts(Subspace(two_qubits, e[:, 0]))
    with pytest.raises(WitnessHypothesisError) as info:
        build_witness(v_plus, v_zero, v_minus, w_plus, w_minus, 1, cfg)
    assert info.value.condition == "ii"
    assert info.value.counterexample is not None


def test_build_witness_requires_minus_inside_v_hat(cfg):
    """V_minus leaving span{e2,e3} (x) span{f3,f4} breaks the third hypothesis."""
    dims = BipartiteDims(d1=3, d2=4)
    kernel = [PureVector.basis_vector(dims, 0, 0), PureVector.basis_vector(dims, 0, 1)]
    v_zero = Subspace.from_vectors(dims, kernel)
    minus = (PureVector.basis_vector(dims, 0, 2).coords + PureVector.basis_vector(dims, 1, 3).coords) / SQRT2
    v_plus, v_zero, v_minus, w_plus, w_minus = split_parts(Subspace(dims, minus), v_zero)
    with pytest.raises(WitnessHypothesisError) as info:
        build_witness(v_plus, v_zero, v_minus, w_plus, w_minus, 1, cfg, kernel_vectors=kernel)
    assert info.value.condition == "iii"


def test_build_witness_rejects_inconsistent_split(two_qubits, bell_span, cfg):
    v_plus, v_zero, v_minus, w_plus, w_minus = split_parts(bell_span)
    with pytest.raises(ValueError, match="dimensions sum"):
        build_witness(v_plus, v_zero, Subspace.zero(two_qubits), w_plus, w_minus, 1, cfg)


def test_example_c3c4(cfg):
    """The C3 x C4 construction is a witness with eps = 1/2."""
    dims = BipartiteDims(d1=3, d2=4)
    w = example_c3c4(cfg)
    report = is_k_witness(w, dims, 1, cfg)
    assert report.is_witness
    assert report.signature == (3, 1, 8)
    assert report.condition1.holds and report.condition2.holds and report.condition3.holds

    split = spectral_split(w, dims)
    assert abs(epsilon_min(split.v_minus, cfg) - 0.5) < 1e-6

    raised = example_c3c4(cfg, free_eigenvalue=5.0)
    assert is_k_witness(raised, dims, 1, cfg, with_conditions=False).is_witness


def test_example_c3c4_rejects_outside_vector(cfg):
    dims = BipartiteDims(d1=3, d2=4)
    with pytest.raises(ValueError, match="psi_minus must lie"):
        example_c3c4(cfg, psi_minus=PureVector.basis_vector(dims, 0, 3))
    with pytest.raises(ValueError, match="psi_minus must be entangled"):
        example_c3c4(cfg, psi_minus=PureVector.basis_vector(dims, 1, 2))


def test_upb_witness(cfg):
    """I - (1 + eps) P_V for the Tiles complement: eps = 0.01 is a witness, 0.1 is not."""
    upb = tiles_upb()
    dims = upb.dims
    bound = upb_epsilon_bound(upb, cfg)
    assert 0.01 < bound < 0.1

    small = is_k_witness(upb_witness(upb, 0.01), dims, 1, cfg, with_conditions=False)
    assert small.is_witness

    large = is_k_witness(upb_witness(upb, 0.1), dims, 1, OptimizerConfig(), with_conditions=False)
    assert not large.is_witness
    assert large.violating_vector is not None
    assert np.linalg.norm(upb_complement(upb).project(large.violating_vector)) ** 2 > 1 / 1.1


def test_spectral_structure_checks_on_witness(two_qubits, bell_span, cfg):
    checks = spectral_structure_checks(projector_witness(bell_span, 0.6), two_qubits, 1, cfg)
    assert checks.negative_eigenvectors_entangled
    assert checks.minus_dimension_bound
    assert checks.plus_dimension_bound
    assert checks.kernel_ksep_free
    assert checks.violations == []


def test_spectral_structure_checks_report_violations(two_qubits, cfg):
    checks = spectral_structure_checks(np.diag([-1.0, 1.0, 1.0, 1.0]).astype(complex), two_qubits, 1, cfg)
    assert not checks.negative_eigenvectors_entangled
    assert checks.violations == ["negative eigenvector of Schmidt rank <= k"]


def test_trace_collects_witness_searches(two_qubits, bell_span, cfg):
    trace = OptimizerTrace()
    is_k_witness(projector_witness(bell_span, 0.6), two_qubits, 1, cfg, trace=trace)
    routines = {row[0] for row in trace.sorted_rows()}
    assert "seesaw" in routines
