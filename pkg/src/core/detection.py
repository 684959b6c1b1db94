"""Detection Harness

This module provides seeded random generators for vectors, subspaces and
observables, detection values and the PPT test, the two-qubit partial
transpose signature experiment, and the generated witness corpus used by
the property sweeps.
"""

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.core.bipartite import (
    BipartiteDims,
    DensityMatrix,
    PureVector,
    Subspace,
    orthogonal_complement,
    partial_transpose,
    schmidt,
)
from src.core.optimization import OptimizerConfig
from src.core.witness_engine import k_sup_norm

logger = logging.getLogger(__name__)

Seed = Union[int, np.random.Generator, None]

TWO_QUBITS = BipartiteDims(d1=2, d2=2)


class ExperimentReport(BaseModel):
    """Histogram of partial-transpose signatures over sampled states."""

    trials: int
    seed: int
    signature_histogram: Dict[Tuple[int, int, int], int]
    failures: List[int] = []
    rejected_samples: int = 0
    zero_tol: float
    rejection_threshold: float

    def to_dict(self):
        return {
            "trials": self.trials,
            "seed": self.seed,
            "signature_histogram": {
                f"({p}, {q}, {z})": count
                for (p, q, z), count in sorted(self.signature_histogram.items())
            },
            "failures": list(self.failures),
            "rejected_samples": self.rejected_samples,
            "tolerances": {
                "zero_tol": self.zero_tol,
                "rejection_threshold": self.rejection_threshold,
            },
        }


class CorpusWitness(BaseModel):
    """A generated observable eps * (I - P_K) - P_V + mu * P_U meant as a k-witness."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    dims: BipartiteDims
    k: int
    w: np.ndarray
    epsilon: float
    sup_norm: float
    v_dim: int
    seed: int
    kernel_dim: int = 0


def _rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _haar_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    vec = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return vec / np.linalg.norm(vec)


def random_product_vector(dims: BipartiteDims, seed: Seed = None) -> PureVector:
    """Haar-random unit product vector."""
    rng = _rng(seed)
    return PureVector.product(dims, _haar_vector(rng, dims.d1), _haar_vector(rng, dims.d2))


def random_rank_k_vector(dims: BipartiteDims, k: int, seed: Seed = None,
                         tol: float = 1e-9) -> PureVector:
    """Normalized sum of k random product vectors; redrawn until its rank is k."""
    if k < 1 or k > dims.d1:
        raise ValueError(f"k must lie in [1, {dims.d1}], got {k}")
    rng = _rng(seed)
    while True:
        coords = sum(np.kron(_haar_vector(rng, dims.d1), _haar_vector(rng, dims.d2)) for _ in range(k))
        psi = PureVector(dims, coords).normalized()
        if schmidt(psi, tol).rank == k:
            return psi
        logger.debug("rank-deficient sample redrawn")


def random_separable_state(dims: BipartiteDims, terms: int, seed: Seed = None) -> DensityMatrix:
    """Convex mixture of `terms` random product projectors with Dirichlet weights."""
    if terms < 1:
        raise ValueError(f"terms must be at least 1, got {terms}")
    rng = _rng(seed)
    weights = rng.dirichlet(np.ones(terms))
    matrix = np.zeros((dims.total, dims.total), dtype=complex)
    for weight in weights:
        matrix += weight * random_product_vector(dims, rng).projector()
    return DensityMatrix(dims, matrix / np.trace(matrix).real)


def random_subspace(dims: BipartiteDims, dim: int, seed: Seed = None) -> Subspace:
    """Subspace spanned by dim complex Gaussian vectors."""
    if not 0 <= dim <= dims.total:
        raise ValueError(f"subspace dimension must lie in [0, {dims.total}], got {dim}")
    rng = _rng(seed)
    if dim == 0:
        return Subspace.zero(dims)
    gaussian = rng.standard_normal((dims.total, dim)) + 1j * rng.standard_normal((dims.total, dim))
    q, _ = np.linalg.qr(gaussian)
    return Subspace(dims, q, check=False)


def random_local_unitary(dims: BipartiteDims, seed: Seed = None) -> np.ndarray:
    """U1 (x) U2 with U1, U2 unitary from QR of complex Gaussian matrices."""
    rng = _rng(seed)
    factors = []
    for d in (dims.d1, dims.d2):
        q, r = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
        factors.append(q * (np.diag(r) / np.abs(np.diag(r))))
    return np.kron(factors[0], factors[1])


def random_hermitian(dims: BipartiteDims, seed: Seed = None) -> np.ndarray:
    """Hermitian matrix with complex Gaussian entries."""
    rng = _rng(seed)
    n = dims.total
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / 2


def random_spectral_observable(dims: BipartiteDims, seed: Seed = None, negatives: int = 1,
                               zeros: int = 0, plus_range: Tuple[float, float] = (0.5, 3.0),
                               minus_range: Tuple[float, float] = (0.1, 1.0)) -> np.ndarray:
    """Observable with a Haar-random eigenbasis and prescribed sign pattern.

    Args:
        dims: Bipartite dimensions
        seed: Seed or generator
        negatives: Number of negative eigenvalues, drawn from -minus_range
        zeros: Number of zero eigenvalues
        plus_range: Range of the positive eigenvalues
        minus_range: Range of the negative eigenvalue magnitudes
    """
    n = dims.total
    if negatives + zeros > n:
        raise ValueError("more negative and zero eigenvalues than dimensions")
    rng = _rng(seed)
    basis = random_subspace(dims, n, rng).columns
    eigenvalues = np.concatenate([
        -rng.uniform(*minus_range, size=negatives),
        np.zeros(zeros),
        rng.uniform(*plus_range, size=n - negatives - zeros),
    ])
    return (basis * eigenvalues) @ basis.conj().T


def _as_matrix(rho: Union[DensityMatrix, np.ndarray]) -> np.ndarray:
    return np.asarray(rho.matrix if isinstance(rho, DensityMatrix) else rho, dtype=complex)


def detection_value(rho: Union[DensityMatrix, np.ndarray], w: np.ndarray) -> float:
    """Tr(rho W); negative values mean rho is detected."""
    matrix = _as_matrix(rho)
    w = np.asarray(w, dtype=complex)
    if matrix.shape != w.shape:
        raise ValueError(f"state shape {matrix.shape} does not match observable shape {w.shape}")
    return float(np.real(np.trace(matrix @ w)))


def ppt_check(rho: DensityMatrix, tol: float = 1e-9) -> bool:
    """True when the partial transpose of rho has no eigenvalue below -tol."""
    gamma = partial_transpose(np.asarray(rho.matrix), 2, rho.dims)
    return bool(np.linalg.eigvalsh(gamma)[0] >= -tol)


def decomposable_witness(rho: DensityMatrix) -> np.ndarray:
    """Partial transpose of |eta><eta| for the lowest eigenvector eta of the
    partial transpose of an NPT state; it detects rho."""
    gamma = partial_transpose(np.asarray(rho.matrix), 2, rho.dims)
    values, vectors = np.linalg.eigh(gamma)
    if values[0] >= 0:
        raise ValueError("state is PPT: no negative eigenvector of its partial transpose")
    eta = vectors[:, 0]
    return partial_transpose(np.outer(eta, eta.conj()), 2, rho.dims)


def werner_state(p: float) -> DensityMatrix:
    """p |Bell><Bell| + (1 - p) I / 4 on two qubits."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    bell = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    return DensityMatrix(TWO_QUBITS, p * np.outer(bell, bell.conj()) + (1 - p) * np.eye(4) / 4)


def signature_of(matrix: np.ndarray, tol: float = 1e-9) -> Tuple[int, int, int]:
    """(positive, negative, zero) eigenvalue counts with band tol * max|lambda|."""
    values = np.linalg.eigvalsh(matrix)
    band = tol * float(np.max(np.abs(values))) if values.size else 0.0
    return (int(np.sum(values > band)), int(np.sum(values < -band)),
            int(np.sum(np.abs(values) <= band)))


def projector_signature(psi: PureVector, tol: float = 1e-9) -> Tuple[int, int, int]:
    """Eigenvalue sign pattern of the partial transpose of |psi><psi|."""
    unit = psi.normalized()
    return signature_of(partial_transpose(unit.projector(), 2, psi.dims), tol)


def _entangled_two_qubit_state(rng: np.random.Generator, threshold: float) -> Tuple[PureVector, int]:
    rejected = 0
    while True:
        psi = PureVector(TWO_QUBITS, _haar_vector(rng, 4))
        data = schmidt(psi, tol=0.0)
        if data.coefficients.size == 2 and data.coefficients[-1] >= threshold:
            return psi, rejected
        rejected += 1


def two_qubit_signature_experiment(n_trials: int, seed: int = 42, tol: float = 1e-9,
                                   rejection_threshold: float = 1e-3,
                                   max_workers: int = 1) -> ExperimentReport:
    """Partial-transpose signatures of random entangled two-qubit pure states.

    Every trial draws from its own generator seeded by a value derived from
    the master seed; states whose smaller Schmidt coefficient falls below
    rejection_threshold are redrawn. Trials not at (3, 1, 0) are listed in
    failures by their trial seed.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    trial_seeds = [int(s) for s in np.random.SeedSequence(seed).generate_state(n_trials)]

    def run_trial(trial_seed: int) -> Tuple[Tuple[int, int, int], int]:
        psi, rejected = _entangled_two_qubit_state(np.random.default_rng(trial_seed), rejection_threshold)
        return projector_signature(psi, tol), rejected

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            outcomes = list(executor.map(run_trial, trial_seeds))
    else:
        outcomes = [run_trial(s) for s in trial_seeds]

    histogram = Counter(signature for signature, _ in outcomes)
    failures = [s for s, (signature, _) in zip(trial_seeds, outcomes) if signature != (3, 1, 0)]
    rejected = sum(r for _, r in outcomes)
    for failed in failures:
        logger.warning(f"trial seed {failed}: unexpected partial transpose signature")
    logger.info(f"two-qubit experiment: {n_trials} trials, histogram {dict(histogram)}, "
                f"{rejected} rejected samples")
    return ExperimentReport(
        trials=n_trials,
        seed=seed,
        signature_histogram=dict(histogram),
        failures=failures,
        rejected_samples=rejected,
        zero_tol=tol,
        rejection_threshold=rejection_threshold,
    )


def generate_witness_corpus(specs: Sequence[Tuple[BipartiteDims, int]], per_spec: int,
                            seed: int, cfg: OptimizerConfig,
                            margin: float = 0.05, with_kernel: bool = False) -> List[CorpusWitness]:
    """Observables eps * (I - P_K) - P_V + mu * P_U built to be k-Schmidt witnesses.

    V (+) K is random of dimension at most (d1-k)(d2-k), U a random subspace
    of its complement and mu >= 0; eps sits a fraction `margin` above the
    k-sup norm s of V (+) K, so every unit rank <= k vector x gets expectation
    at least eps - |P_V x|^2 - |P_K x|^2 >= eps - s > 0. K is empty unless
    with_kernel is set and the bound leaves room for both V and K; it then
    becomes a kernel without rank <= k vectors.
    """
    corpus: List[CorpusWitness] = []
    sequence = np.random.SeedSequence(seed)
    for (dims, k), child in zip(specs, sequence.spawn(len(specs))):
        bound = (dims.d1 - k) * (dims.d2 - k)
        if bound < 1:
            raise ValueError(f"no k-witness exists for dims ({dims.d1}, {dims.d2}) and k={k}")
        for sample_seed in child.generate_state(per_spec):
            rng = np.random.default_rng(int(sample_seed))
            kernel_dim = 0
            if with_kernel and bound >= 2:
                total = int(rng.integers(2, bound + 1))
                kernel_dim = int(rng.integers(1, total))
            else:
                total = int(rng.integers(1, bound + 1))
            block = random_subspace(dims, total, rng)
            v = Subspace(dims, block.columns[:, :total - kernel_dim], check=False)
            kernel = Subspace(dims, block.columns[:, total - kernel_dim:], check=False)
            s = k_sup_norm(block, k, cfg)
            if s >= 1 - 1e-9:
                logger.warning(f"sample seed {int(sample_seed)}: V holds a rank-{k} vector, skipped")
                continue
            epsilon = s + margin * (1 - s)
            complement = orthogonal_complement(block)
            u_dim = int(rng.integers(0, complement.dim + 1))
            u = Subspace(dims, complement.columns @ random_subspace(
                BipartiteDims(d1=1, d2=complement.dim), u_dim, rng).columns, check=False)
            mu = float(rng.uniform(0.0, 2.0))
            w = epsilon * (np.eye(dims.total) - kernel.projector()) - v.projector() + mu * u.projector()
            corpus.append(CorpusWitness(dims=dims, k=k, w=w, epsilon=epsilon, sup_norm=s,
                                        v_dim=v.dim, seed=int(sample_seed), kernel_dim=kernel_dim))
    logger.info(f"generated {len(corpus)} corpus observables")
    return corpus
