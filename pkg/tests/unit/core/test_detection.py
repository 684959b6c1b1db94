"""Tests for the detection harness."""

import pytest
import numpy as np

import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../../..')))

from src.core.bipartite import BipartiteDims, DensityMatrix, PureVector, coord_matrix, schmidt
from src.core.detection import (
    decomposable_witness,
    detection_value,
    generate_witness_corpus,
    ppt_check,
    projector_signature,
    random_hermitian,
    random_local_unitary,
    random_product_vector,
    random_rank_k_vector,
    random_separable_state,
    random_spectral_observable,
    random_subspace,
    signature_of,
    two_qubit_signature_experiment,
    werner_state,
)
from src.core.map_bridge import check_signature_bounds, to_map
from src.core.optimization import OptimizerConfig
from src.core.witness_engine import (
    example_c3c4,
    is_k_witness,
    projector_witness,
    spectral_split,
    spectral_structure_checks,
)

SQRT2 = np.sqrt(2.0)


@pytest.fixture
def two_qubits():
    return BipartiteDims(d1=2, d2=2)


def test_two_qubit_signature_experiment():
    """Every entangled two-qubit projector has partial transpose signature (3, 1, 0)."""
    report = two_qubit_signature_experiment(500, seed=42)
    assert report.signature_histogram == {(3, 1, 0): 500}
    assert report.failures == []
    data = report.to_dict()
    assert data["signature_histogram"] == {"(3, 1, 0)": 500}
    assert data["tolerances"]["zero_tol"] == 1e-9


def test_two_qubit_experiment_is_reproducible():
    first = two_qubit_signature_experiment(50, seed=3)
    threaded = two_qubit_signature_experiment(50, seed=3, max_workers=4)
    assert first.to_dict() == threaded.to_dict()


def test_projector_signature_of_product(two_qubits):
    """A product projector is its own partial transpose."""
    psi = random_product_vector(two_qubits, seed=1)
    assert projector_signature(psi) == (1, 0, 3)


def test_projector_signature_of_bell(two_qubits):
    bell = PureVector(two_qubits, np.array([1, 0, 0, 1]) / SQRT2)
    assert projector_signature(bell) == (3, 1, 0)


def test_signature_of():
    assert signature_of(np.diag([2.0, -1.0, 0.0, 1e-12])) == (1, 1, 2)


def test_random_rank_k_vector():
    """Coordinate matrix rank equals k across seeds."""
    dims = BipartiteDims(d1=3, d2=4)
    for k in (1, 2, 3):
        for seed in range(100):
            psi = random_rank_k_vector(dims, k, seed=seed)
            assert abs(psi.norm - 1) < 1e-12
            assert np.linalg.matrix_rank(coord_matrix(psi).entries, tol=1e-9) == k


def test_random_rank_k_vector_range():
    with pytest.raises(ValueError):
        random_rank_k_vector(BipartiteDims(d1=2, d2=2), 3)


def test_random_product_vector_has_rank_one(two_qubits):
    psi = random_product_vector(two_qubits, seed=2)
    assert schmidt(psi, tol=1e-10).rank == 1
    assert abs(psi.norm - 1) < 1e-12


def test_random_subspace_and_hermitian():
    dims = BipartiteDims(d1=2, d2=3)
    v = random_subspace(dims, 3, seed=4)
    assert v.dim == 3
    assert np.max(np.abs(v.columns.conj().T @ v.columns - np.eye(3))) < 1e-10
    h = random_hermitian(dims, seed=4)
    np.testing.assert_allclose(h, h.conj().T)
    np.testing.assert_array_equal(random_hermitian(dims, seed=4), h)


def test_random_spectral_observable_pattern():
    dims = BipartiteDims(d1=2, d2=3)
    w = random_spectral_observable(dims, seed=8, negatives=2, zeros=1)
    assert spectral_split(w, dims).signature == (3, 2, 1)


def test_werner_states_and_ppt():
    """Werner states are NPT exactly above p = 1/3."""
    assert ppt_check(werner_state(0.2))
    assert ppt_check(werner_state(1 / 3))
    assert not ppt_check(werner_state(0.5))
    with pytest.raises(ValueError):
        werner_state(1.5)


def test_decomposable_witness_detects_npt_state():
    rho = werner_state(0.6)
    w = decomposable_witness(rho)
    assert detection_value(rho, w) < 0
    assert detection_value(werner_state(0.0), w) >= -1e-12
    with pytest.raises(ValueError, match="state is PPT"):
        decomposable_witness(werner_state(0.2))


def test_detection_value_bell(two_qubits):
    """Tr(rho W) for the Bell state and eps * I - P_Bell is eps - 1."""
    bell = PureVector(two_qubits, np.array([1, 0, 0, 1]) / SQRT2)
    rho = DensityMatrix.from_vector(bell)
    v = spectral_split(-bell.projector(), two_qubits).v_minus
    assert detection_value(rho, projector_witness(v, 0.5)) == pytest.approx(-0.5)
    with pytest.raises(ValueError, match="does not match"):
        detection_value(rho, np.eye(3))


@pytest.mark.slow
def test_structure_sweep_over_corpus():
    """Generated witnesses keep their spectral structure and map signature bounds."""
    specs = [
        (BipartiteDims(d1=2, d2=2), 1),
        (BipartiteDims(d1=2, d2=3), 1),
        (BipartiteDims(d1=3, d2=3), 1),
        (BipartiteDims(d1=3, d2=4), 1),
        (BipartiteDims(d1=3, d2=3), 2),
        (BipartiteDims(d1=3, d2=4), 2),
    ]
    corpus = generate_witness_corpus(specs, per_spec=40, seed=5, cfg=OptimizerConfig())
    cfg = OptimizerConfig(starts=8)
    certified = 0
    violations = []
    for item in corpus:
        if not is_k_witness(item.w, item.dims, item.k, cfg, with_conditions=False).is_witness:
            continue
        certified += 1
        checks = spectral_structure_checks(item.w, item.dims, item.k, cfg)
        bounds = check_signature_bounds(to_map(item.w, item.dims), item.k, cfg)
        if checks.violations or not bounds.q_bound_holds or bounds.p_bound_holds is False:
            violations.append(item.seed)
    assert certified >= 200
    assert violations == []


def test_corpus_observables_have_expected_spectrum():
    dims = BipartiteDims(d1=2, d2=3)
    corpus = generate_witness_corpus([(dims, 1)], per_spec=3, seed=1, cfg=OptimizerConfig(starts=8))
    assert corpus
    for item in corpus:
        split = spectral_split(item.w, dims)
        assert split.v_minus.dim == item.v_dim
        assert split.v_minus.dim <= (dims.d1 - 1) * (dims.d2 - 1)
        assert 0 < item.sup_norm < item.epsilon < 1


def test_corpus_rejects_impossible_spec():
    with pytest.raises(ValueError, match="no k-witness exists"):
        generate_witness_corpus([(BipartiteDims(d1=2, d2=2), 2)], per_spec=1, seed=1,
                                cfg=OptimizerConfig(starts=2))


def test_random_separable_state():
    dims = BipartiteDims(d1=2, d2=3)
    rho = random_separable_state(dims, 5, seed=2)
    np.testing.assert_allclose(rho.matrix, rho.matrix.conj().T, atol=1e-12)
    assert np.trace(rho.matrix).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho.matrix)[0] >= -1e-12
    with pytest.raises(ValueError, match="terms must be at least 1"):
        random_separable_state(dims, 0)


def test_random_local_unitary_is_unitary_and_keeps_schmidt_rank():
    dims = BipartiteDims(d1=2, d2=3)
    u = random_local_unitary(dims, seed=6)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(6), atol=1e-12)
    product = random_product_vector(dims, seed=1)
    assert schmidt(PureVector(dims, u @ product.coords)).rank == 1


@pytest.mark.parametrize("dims", [
    BipartiteDims(d1=2, d2=2),
    BipartiteDims(d1=2, d2=3),
    BipartiteDims(d1=3, d2=3),
])
def test_separable_mixtures_are_ppt(dims):
    rng = np.random.default_rng(17)
    for _ in range(10):
        assert ppt_check(random_separable_state(dims, 20, rng))


def test_certified_two_qubit_witnesses_have_one_negative_eigenvalue(two_qubits):
    cfg = OptimizerConfig(starts=8)
    candidates = [random_spectral_observable(two_qubits, seed=seed, negatives=negatives)
                  for negatives in (1, 2) for seed in range(30)]
    candidates += [item.w for item in generate_witness_corpus([(two_qubits, 1)], per_spec=10, seed=4, cfg=cfg)]
    certified = 0
    for w in candidates:
        if not is_k_witness(w, two_qubits, 1, cfg, with_conditions=False).is_witness:
            continue
        certified += 1
        assert signature_of(w) == (3, 1, 0)
    assert certified >= 10


def test_witnesses_are_nonnegative_on_separable_mixtures():
    specs = [
        (BipartiteDims(d1=2, d2=2), 1),
        (BipartiteDims(d1=2, d2=3), 1),
        (BipartiteDims(d1=3, d2=3), 1),
    ]
    corpus = generate_witness_corpus(specs, per_spec=5, seed=21, cfg=OptimizerConfig(starts=8))
    rng = np.random.default_rng(3)
    for item in corpus:
        for _ in range(5):
            assert detection_value(random_separable_state(item.dims, 20, rng), item.w) >= -1e-12


def test_decomposable_witness_detects_every_npt_sample():
    rng = np.random.default_rng(29)
    npt = 0
    for dims in (BipartiteDims(d1=2, d2=2), BipartiteDims(d1=2, d2=3)):
        for rank in (1, 2, 3):
            for _ in range(10):
                g = rng.standard_normal((dims.total, rank)) + 1j * rng.standard_normal((dims.total, rank))
                matrix = g @ g.conj().T
                rho = DensityMatrix(dims, matrix / np.trace(matrix).real)
                if ppt_check(rho):
                    continue
                npt += 1
                w = decomposable_witness(rho)
                assert detection_value(rho, w) < 0
                assert detection_value(random_separable_state(dims, 10, rng), w) >= -1e-12
    assert npt >= 20


def _rotated_c3c4_witness(cfg, rng):
    """The C3 x C4 construction with a random negative eigenvector, conjugated by a local unitary."""
    dims = BipartiteDims(d1=3, d2=4)
    while True:
        block = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        block /= np.linalg.norm(block)
        if np.linalg.svd(block, compute_uv=False)[1] ** 2 >= 0.05:
            break
    matrix = np.zeros((3, 4), dtype=complex)
    matrix[1:, 2:] = block
    w = example_c3c4(cfg, psi_minus=PureVector(dims, matrix.reshape(-1)),
                     free_eigenvalue=float(rng.uniform(0.0, 5.0)))
    rotation = random_local_unitary(dims, rng)
    return dims, rotation @ w @ rotation.conj().T


@pytest.mark.slow
def test_necessary_conditions_hold_on_witnesses_with_kernels():
    """Certified witnesses with nonzero kernels meet all three spectral conditions."""
    specs = [
        (BipartiteDims(d1=2, d2=3), 1),
        (BipartiteDims(d1=3, d2=3), 1),
        (BipartiteDims(d1=3, d2=4), 1),
        (BipartiteDims(d1=3, d2=4), 2),
    ]
    cfg = OptimizerConfig(starts=8)
    corpus = generate_witness_corpus(specs, per_spec=25, seed=13, cfg=OptimizerConfig(), with_kernel=True)
    observables = [(item.dims, item.k, item.w) for item in corpus if item.sup_norm < 1 - 1e-4]
    rng = np.random.default_rng(31)
    for _ in range(20):
        dims, w = _rotated_c3c4_witness(cfg, rng)
        observables.append((dims, 1, w))

    certified = 0
    with_kernel = 0
    kernel_with_ksep = 0
    violations = []
    for dims, k, w in observables:
        report = is_k_witness(w, dims, k, cfg)
        if not report.is_witness:
            continue
        certified += 1
        if spectral_split(w, dims, cfg.zero_tol).v_zero.dim > 0:
            with_kernel += 1
        checks = spectral_structure_checks(w, dims, k, cfg)
        if not checks.kernel_ksep_free:
            kernel_with_ksep += 1
        holds = report.condition1.holds and report.condition2.holds and report.condition3.holds
        if not holds or checks.violations:
            violations.append((dims.d1, dims.d2, k))
    assert certified >= 100
    assert with_kernel == certified
    assert kernel_with_ksep >= 15
    assert violations == []
