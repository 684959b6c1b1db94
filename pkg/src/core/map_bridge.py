"""Map Bridge

This module translates between Hermitian observables on C^d1 (x) C^d2 and
hermiticity-preserving maps from d1 x d1 to d2 x d2 matrices, written in
Kraus-Choi form Lambda(x) = sum A_i x A_i^H - sum B_i x B_i^H.

The observable of a map is W = [I (x) Lambda] |Psi+><Psi+| with
A(Psi+) = c * Identity; c = 1/d1 by default, or 1/sqrt(d1) with the
normalized convention (unit-norm Psi+).
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from src.core.bipartite import BipartiteDims, PureVector
from src.core.optimization import OptimizerConfig, OptimizerTrace
from src.core.subspace_lab import contains_ksep
from src.core.witness_engine import WitnessReport, is_k_witness, spectral_split

logger = logging.getLogger(__name__)


def reference_scale(d1: int, normalized: bool = False) -> float:
    """Coefficient c with A(Psi+) = c * Identity."""
    return 1.0 / np.sqrt(d1) if normalized else 1.0 / d1


class HermPreservingMap:
    """A hermiticity-preserving map in Kraus-Choi form."""

    def __init__(self, input_dim: int, output_dim: int,
                 kraus_plus: Sequence[np.ndarray], kraus_minus: Sequence[np.ndarray] = (),
                 normalized: bool = False):
        """Initialize the map.

        Args:
            input_dim: d1, size of input matrices
            output_dim: d2, size of output matrices
            kraus_plus: Operators A_i of shape (d2, d1)
            kraus_minus: Operators B_i of shape (d2, d1)
            normalized: Whether the associated observable uses unit-norm Psi+
        """
        if input_dim < 1 or output_dim < 1:
            raise ValueError("map dimensions must be positive")
        shape = (output_dim, input_dim)
        plus, minus = [], []
        for target, operators in ((plus, kraus_plus), (minus, kraus_minus)):
            for op in operators:
                op = np.array(op, dtype=complex)
                if op.shape != shape:
                    raise ValueError(f"Kraus operator shape {op.shape} does not match {shape}")
                op.setflags(write=False)
                target.append(op)
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.kraus_plus: List[np.ndarray] = plus
        self.kraus_minus: List[np.ndarray] = minus
        self.normalized = normalized

    @classmethod
    def identity(cls, d: int, normalized: bool = False) -> "HermPreservingMap":
        return cls(d, d, [np.eye(d)], normalized=normalized)

    @property
    def signature(self) -> Tuple[int, int]:
        """(p, q) = (number of A_i, number of B_i)."""
        return (len(self.kraus_plus), len(self.kraus_minus))

    @property
    def dims(self) -> BipartiteDims:
        return BipartiteDims(d1=self.input_dim, d2=self.output_dim)

    def gram_matrix(self) -> np.ndarray:
        """Trace inner products tr(K_i^H K_j) over all operators, plus first."""
        operators = self.kraus_plus + self.kraus_minus
        if not operators:
            return np.zeros((0, 0), dtype=complex)
        stacked = np.array([op.reshape(-1) for op in operators])
        return stacked.conj() @ stacked.T

    def __repr__(self) -> str:
        p, q = self.signature
        return f"HermPreservingMap({self.input_dim} -> {self.output_dim}, signature=({p}, {q}))"


class MaxEntangledRef:
    """Reference vector Psi+ with A(Psi+) = c * [Identity_d1 | 0]."""

    def __init__(self, dims: BipartiteDims, normalized: bool = False):
        scale = reference_scale(dims.d1, normalized)
        matrix = np.zeros((dims.d1, dims.d2), dtype=complex)
        matrix[:, :dims.d1] = scale * np.eye(dims.d1)
        self.dims = dims
        self.normalized = normalized
        self.vector = PureVector(dims, matrix.reshape(-1))


def max_entangled_reference(dims: BipartiteDims, normalized: bool = False) -> MaxEntangledRef:
    """Psi+ for the given dims; for d1 < d2 the coordinate matrix is zero-padded."""
    return MaxEntangledRef(dims, normalized)


class SignatureBounds(BaseModel):
    """Signature bounds of a k-positive map."""

    p: int
    q: int
    k_positive: bool
    q_bound_holds: bool
    p_bound_applicable: bool
    p_bound_holds: Optional[bool] = None


def to_map(w: np.ndarray, dims: BipartiteDims, tol: float = 1e-9,
           normalized: bool = False) -> HermPreservingMap:
    """Kraus-Choi form of the map whose observable is w.

    Each eigenpair (lambda_i, psi_i) with |lambda_i| above the zero band
    contributes sqrt(|lambda_i|) * A(psi_i)^T / c, to the positive or negative
    family by sign.
    """
    split = spectral_split(w, dims, tol)
    scale = reference_scale(dims.d1, normalized)
    plus, minus = [], []
    for value, column in zip(split.eigenvalues, split.eigenvector_matrix.T):
        if abs(value) <= split.zero_band:
            continue
        operator = np.sqrt(abs(value)) * column.reshape(dims.d1, dims.d2).T / scale
        (plus if value > 0 else minus).append(operator)
    result = HermPreservingMap(dims.d1, dims.d2, plus, minus, normalized=normalized)
    logger.debug(f"observable -> map with signature {result.signature}")
    return result


def apply_map(lam: HermPreservingMap, x: np.ndarray) -> np.ndarray:
    """Lambda(x) = sum A x A^H - sum B x B^H."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (lam.input_dim, lam.input_dim):
        raise ValueError(f"input shape {x.shape} does not match ({lam.input_dim}, {lam.input_dim})")
    out = np.zeros((lam.output_dim, lam.output_dim), dtype=complex)
    for a in lam.kraus_plus:
        out += a @ x @ a.conj().T
    for b in lam.kraus_minus:
        out -= b @ x @ b.conj().T
    return out


def to_witness(lam: HermPreservingMap) -> np.ndarray:
    """Observable [I (x) Lambda] |Psi+><Psi+| = c^2 sum_ij E_ij (x) Lambda(E_ij)."""
    d1, d2 = lam.input_dim, lam.output_dim
    if d1 > d2:
        raise ValueError(f"input dimension {d1} exceeds output dimension {d2}")
    scale = reference_scale(d1, lam.normalized)
    blocks = np.zeros((d1, d1, d2, d2), dtype=complex)
    for i in range(d1):
        for j in range(d1):
            unit = np.zeros((d1, d1), dtype=complex)
            unit[i, j] = 1.0
            blocks[i, j] = apply_map(lam, unit)
    # W[(i,a),(j,b)] = c^2 Lambda(E_ij)[a,b]
    return scale ** 2 * blocks.transpose(0, 2, 1, 3).reshape(d1 * d2, d1 * d2)


def is_k_positive(lam: HermPreservingMap, k: int, cfg: OptimizerConfig,
                  trace: Optional[OptimizerTrace] = None,
                  with_conditions: bool = False) -> WitnessReport:
    """Check k-positivity of a map through its observable.

    The map is k-positive when the report's sk_positive holds; it is
    k-positive but not completely positive exactly when is_witness holds.
    """
    w = to_witness(lam)
    report = is_k_witness(w, lam.dims, k, cfg, trace=trace, with_conditions=with_conditions)
    logger.info(f"map {lam.input_dim}->{lam.output_dim}: {k}-positive={report.sk_positive}")
    return report


def check_signature_bounds(lam: HermPreservingMap, k: int, cfg: OptimizerConfig,
                           trace: Optional[OptimizerTrace] = None) -> SignatureBounds:
    """Signature bounds of a k-positive map.

    q <= (d1-k)(d2-k) for every k-positive map, and p >= d1*d2 - (d1-k)(d2-k)
    when additionally the observable's kernel holds no vector of Schmidt
    rank <= k (no rank <= k input is sent to zero).

    Raises:
        ValueError: The Kraus operators are linearly dependent
    """
    d1, d2 = lam.input_dim, lam.output_dim
    gram = lam.gram_matrix()
    count = gram.shape[0]
    if count > d1 * d2 or (count and np.linalg.matrix_rank(gram, tol=1e-10 * max(1.0, np.max(np.abs(gram)))) < count):
        raise ValueError("signature undefined for dependent Kraus operators")
    p, q = lam.signature
    bound = (d1 - k) * (d2 - k)

    k_positive = is_k_positive(lam, k, cfg, trace=trace).sk_positive
    q_bound = (not k_positive) or q <= bound

    split = spectral_split(to_witness(lam), lam.dims, cfg.zero_tol)
    if split.v_zero.dim == 0:
        applicable = True
    elif k >= d1:
        applicable = False
    else:
        applicable = not contains_ksep(split.v_zero, k, cfg, trace=trace).found

    p_bound: Optional[bool] = None
    if applicable and k_positive:
        p_bound = p >= d1 * d2 - bound
    return SignatureBounds(p=p, q=q, k_positive=k_positive, q_bound_holds=q_bound,
                           p_bound_applicable=applicable, p_bound_holds=p_bound)
