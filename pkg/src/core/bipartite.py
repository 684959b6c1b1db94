"""Bipartite Linear Algebra

This module implements dense complex linear algebra on C^d1 (x) C^d2: the
coordinate isomorphism between vectors and d1 x d2 matrices, Schmidt
decompositions, partial traces and transposes, and the local subspaces built
from Schmidt data.

Index convention: e_i (x) f_j sits at flat position i * d2 + j (zero-based).
"""

import logging
from typing import Dict, Any, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field, model_validator

logger = logging.getLogger(__name__)

# Orthonormality and Hermiticity checks on constructed values
CHECK_TOL = 1e-10


class BipartiteDims(BaseModel):
    """Local dimensions of a bipartite system, d1 <= d2."""
    model_config = ConfigDict(frozen=True)

    d1: int = Field(..., ge=1, description="Levels of the first subsystem")
    d2: int = Field(..., ge=1, description="Levels of the second subsystem")

    @model_validator(mode="after")
    def _check_order(self) -> "BipartiteDims":
        if self.d1 > self.d2:
            raise ValueError(f"expected d1 <= d2, got ({self.d1}, {self.d2})")
        return self

    @property
    def total(self) -> int:
        """Dimension d1 * d2 of the joint space."""
        return self.d1 * self.d2

    def as_tuple(self) -> Tuple[int, int]:
        return (self.d1, self.d2)


def default_rank_tol(dims: BipartiteDims) -> float:
    """Relative singular value cutoff used when no tolerance is given."""
    return max(dims.d1, dims.d2) * np.finfo(float).eps


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    array.setflags(write=False)
    return array


class PureVector:
    """A vector of C^d1 (x) C^d2 in flat coordinates."""

    def __init__(self, dims: BipartiteDims, coords: Union[np.ndarray, Sequence[complex]]):
        """Initialize a pure vector.

        Args:
            dims: Bipartite dimensions
            coords: Flat coordinates of length d1 * d2
        """
        coords = np.asarray(coords, dtype=complex)
        if coords.ndim != 1 or coords.shape[0] != dims.total:
            raise ValueError(
                f"vector length {coords.size} does not match d1*d2 = {dims.total} "
                f"for dims ({dims.d1}, {dims.d2})")
        if not np.all(np.isfinite(coords)):
            raise ValueError("vector coordinates must be finite")
        self.dims = dims
        self.coords = _frozen(coords)

    @classmethod
    def basis_vector(cls, dims: BipartiteDims, i: int, j: int) -> "PureVector":
        """Return e_i (x) f_j (zero-based indices)."""
        coords = np.zeros(dims.total, dtype=complex)
        coords[i * dims.d2 + j] = 1.0
        return cls(dims, coords)

    @classmethod
    def product(cls, dims: BipartiteDims, x: np.ndarray, y: np.ndarray) -> "PureVector":
        """Return x (x) y."""
        return cls(dims, np.kron(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex)))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def normalized(self) -> "PureVector":
        """Return the unit vector along this one."""
        norm = self.norm
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return PureVector(self.dims, self.coords / norm)

    def inner(self, other: "PureVector") -> complex:
        """Inner product <self|other>, antilinear in self."""
        return complex(np.vdot(self.coords, other.coords))

    def projector(self) -> np.ndarray:
        """Return |psi><psi| (not normalized)."""
        return np.outer(self.coords, self.coords.conj())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dims": [self.dims.d1, self.dims.d2],
            "coords": [[float(z.real), float(z.imag)] for z in self.coords],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PureVector":
        d1, d2 = data["dims"]
        coords = np.array([complex(re, im) for re, im in data["coords"]])
        return cls(BipartiteDims(d1=d1, d2=d2), coords)

    def __repr__(self) -> str:
        return f"PureVector(dims=({self.dims.d1}, {self.dims.d2}), norm={self.norm:.6g})"


class CoordMatrix:
    """The d1 x d2 coordinate matrix of a bipartite vector."""

    def __init__(self, dims: BipartiteDims, entries: np.ndarray):
        entries = np.asarray(entries, dtype=complex)
        if entries.shape != (dims.d1, dims.d2):
            raise ValueError(f"matrix shape {entries.shape} does not match dims ({dims.d1}, {dims.d2})")
        self.dims = dims
        self.entries = _frozen(entries)

    def __repr__(self) -> str:
        return f"CoordMatrix(dims=({self.dims.d1}, {self.dims.d2}))"


class SchmidtData:
    """Schmidt decomposition psi = sum_i c_i alpha_i (x) beta_i.

    left_vectors[i] is alpha_i, right_vectors[i] is beta_i; only the
    coefficients above the rank cutoff are kept.
    """

    def __init__(self, dims: BipartiteDims, coefficients: np.ndarray,
                 left_vectors: np.ndarray, right_vectors: np.ndarray, rank: int):
        self.dims = dims
        self.coefficients = np.array(coefficients, dtype=float)
        self.coefficients.setflags(write=False)
        self.left_vectors = _frozen(left_vectors)
        self.right_vectors = _frozen(right_vectors)
        self.rank = int(rank)

    def reconstruct(self) -> PureVector:
        """Rebuild the vector from its Schmidt terms."""
        matrix = np.einsum("i,ia,ib->ab", self.coefficients, self.left_vectors, self.right_vectors)
        return PureVector(self.dims, matrix.reshape(-1))

    def __repr__(self) -> str:
        return f"SchmidtData(rank={self.rank}, coefficients={self.coefficients.tolist()})"


class Subspace:
    """A linear subspace given by orthonormal basis columns.

    The basis is stored as a (d1*d2) x m matrix; `basis` exposes it as a list
    of PureVector. Factor spaces C^d are represented with dims (1, d).
    """

    def __init__(self, ambient_dims: BipartiteDims, columns: np.ndarray, check: bool = True):
        """Initialize a subspace.

        Args:
            ambient_dims: Dimensions of the ambient bipartite space
            columns: Orthonormal basis as columns, shape (d1*d2, m)
            check: Verify orthonormality within 1e-10
        """
        columns = np.asarray(columns, dtype=complex)
        if columns.ndim == 1:
            columns = columns.reshape(-1, 1)
        if columns.shape[0] != ambient_dims.total:
            raise ValueError(
                f"basis vectors have length {columns.shape[0]}, expected {ambient_dims.total}")
        if check and columns.shape[1] > 0:
            gram = columns.conj().T @ columns
            if np.max(np.abs(gram - np.eye(columns.shape[1]))) > CHECK_TOL:
                raise ValueError("subspace basis is not orthonormal within 1e-10")
        self.ambient_dims = ambient_dims
        self.columns = _frozen(columns)

    @classmethod
    def from_vectors(cls, ambient_dims: BipartiteDims,
                     vectors: Sequence[Union[PureVector, np.ndarray]],
                     tol: float = 1e-10, sequential: bool = False) -> "Subspace":
        """Orthonormalize a spanning set.

        Args:
            ambient_dims: Ambient dimensions
            vectors: Spanning vectors (possibly dependent)
            tol: Relative cutoff for discarding dependent directions
            sequential: Gram-Schmidt in the given order instead of an SVD basis

        Returns:
            Subspace spanned by the vectors
        """
        if len(vectors) == 0:
            return cls.zero(ambient_dims)
        generators = np.column_stack([
            v.coords if isinstance(v, PureVector) else np.asarray(v, dtype=complex)
            for v in vectors
        ])
        if sequential:
            return cls(ambient_dims, _sequential_orthonormalize(generators, tol), check=False)
        scale = max(np.max(np.abs(generators)), 1.0)
        return cls(ambient_dims, scipy.linalg.orth(generators, rcond=tol * scale), check=False)

    @classmethod
    def whole(cls, ambient_dims: BipartiteDims) -> "Subspace":
        return cls(ambient_dims, np.eye(ambient_dims.total, dtype=complex), check=False)

    @classmethod
    def zero(cls, ambient_dims: BipartiteDims) -> "Subspace":
        return cls(ambient_dims, np.zeros((ambient_dims.total, 0), dtype=complex), check=False)

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    @property
    def basis(self) -> List[PureVector]:
        return [PureVector(self.ambient_dims, self.columns[:, i]) for i in range(self.dim)]

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the subspace."""
        return self.columns @ self.columns.conj().T

    def project(self, psi: Union[PureVector, np.ndarray]) -> np.ndarray:
        """Coordinates (in the ambient space) of the orthogonal projection of psi."""
        coords = psi.coords if isinstance(psi, PureVector) else np.asarray(psi, dtype=complex)
        return self.columns @ (self.columns.conj().T @ coords)

    def vector(self, coefficients: np.ndarray) -> PureVector:
        """Ambient vector with the given coefficients on the basis."""
        return PureVector(self.ambient_dims, self.columns @ np.asarray(coefficients, dtype=complex))

    def __repr__(self) -> str:
        return (f"Subspace(dims=({self.ambient_dims.d1}, {self.ambient_dims.d2}), "
                f"dim={self.dim})")


class DensityMatrix:
    """A normalized positive semidefinite operator on C^d1 (x) C^d2."""

    def __init__(self, dims: BipartiteDims, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=complex)
        n = dims.total
        if matrix.shape != (n, n):
            raise ValueError(f"density matrix shape {matrix.shape} does not match ({n}, {n})")
        if np.max(np.abs(matrix - matrix.conj().T)) > CHECK_TOL:
            raise ValueError("density matrix is not Hermitian within 1e-10")
        if abs(np.trace(matrix) - 1.0) > CHECK_TOL:
            raise ValueError(f"density matrix trace {np.trace(matrix).real:.3g} is not 1")
        if np.linalg.eigvalsh(matrix)[0] < -CHECK_TOL:
            raise ValueError("density matrix has a negative eigenvalue below -1e-10")
        self.dims = dims
        self.matrix = _frozen(matrix)

    @classmethod
    def from_vector(cls, psi: PureVector) -> "DensityMatrix":
        """Projector onto the normalized vector."""
        unit = psi.normalized()
        return cls(psi.dims, unit.projector())

    def __repr__(self) -> str:
        return f"DensityMatrix(dims=({self.dims.d1}, {self.dims.d2}))"


def _sequential_orthonormalize(generators: np.ndarray, tol: float) -> np.ndarray:
    """Gram-Schmidt (two passes) over the generator columns in order."""
    basis: List[np.ndarray] = []
    for column in generators.T:
        vec = column.astype(complex)
        original = np.linalg.norm(vec)
        for _ in range(2):
            for b in basis:
                vec = vec - np.vdot(b, vec) * b
        norm = np.linalg.norm(vec)
        if original > 0 and norm > tol * original:
            basis.append(vec / norm)
    if not basis:
        return np.zeros((generators.shape[0], 0), dtype=complex)
    return np.column_stack(basis)


def coord_matrix(psi: PureVector) -> CoordMatrix:
    """Coordinate matrix [A(psi)]_{ij} = <e_i (x) f_j | psi>."""
    return CoordMatrix(psi.dims, psi.coords.reshape(psi.dims.d1, psi.dims.d2))


def vector_from_matrix(m: CoordMatrix) -> PureVector:
    """Inverse of coord_matrix."""
    return PureVector(m.dims, m.entries.reshape(-1))


def _fix_phases(left: np.ndarray, right: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # first non-negligible component of each left vector made real nonnegative
    left = left.copy()
    right = right.copy()
    for i in range(left.shape[0]):
        nonzero = np.flatnonzero(np.abs(left[i]) > 1e-12)
        if nonzero.size == 0:
            continue
        phase = left[i, nonzero[0]] / abs(left[i, nonzero[0]])
        left[i] = left[i] / phase
        right[i] = right[i] * phase
    return left, right


def schmidt(psi: PureVector, tol: Optional[float] = None) -> SchmidtData:
    """Schmidt decomposition of a nonzero vector.

    Args:
        psi: The vector
        tol: Relative cutoff; coefficients above tol * max count towards the rank

    Returns:
        SchmidtData with descending coefficients
    """
    if psi.norm == 0:
        raise ValueError("zero vector has no Schmidt decomposition")
    tol = default_rank_tol(psi.dims) if tol is None else tol
    u, s, vh = np.linalg.svd(coord_matrix(psi).entries)
    rank = int(np.sum(s > tol * s[0]))
    left, right = _fix_phases(u[:, :rank].T, vh[:rank, :])
    return SchmidtData(psi.dims, s[:rank], left, right, rank)


def schmidt_rank(psi: PureVector, tol: Optional[float] = None) -> int:
    """Number of Schmidt coefficients above tol * largest."""
    return schmidt(psi, tol).rank


def schmidt_truncate(psi: PureVector, k: int) -> PureVector:
    """Closest vector of Schmidt rank <= k (keeps the top-k Schmidt terms)."""
    u, s, vh = np.linalg.svd(coord_matrix(psi).entries)
    s = s.copy()
    s[k:] = 0.0
    return PureVector(psi.dims, ((u[:, :len(s)] * s) @ vh[:len(s), :]).reshape(-1))


def _as_square(x: Union[DensityMatrix, np.ndarray], dims: Optional[BipartiteDims]) -> Tuple[np.ndarray, BipartiteDims]:
    if isinstance(x, DensityMatrix):
        return np.asarray(x.matrix), x.dims
    if dims is None:
        raise ValueError("dims are required for a raw matrix")
    x = np.asarray(x, dtype=complex)
    if x.shape != (dims.total, dims.total):
        raise ValueError(f"matrix shape {x.shape} does not match ({dims.total}, {dims.total})")
    return x, dims


def partial_trace(rho: Union[DensityMatrix, np.ndarray], subsystem: int,
                  dims: Optional[BipartiteDims] = None) -> np.ndarray:
    """Trace out one subsystem.

    Args:
        rho: Density matrix (or raw square matrix together with dims)
        subsystem: 1 traces out the first factor (d2 x d2 result),
            2 traces out the second factor (d1 x d1 result)
        dims: Required when rho is a raw array

    Returns:
        The reduced matrix
    """
    matrix, dims = _as_square(rho, dims)
    tensor = matrix.reshape(dims.d1, dims.d2, dims.d1, dims.d2)
    if subsystem == 1:
        return np.einsum("ijil->jl", tensor)
    if subsystem == 2:
        return np.einsum("ijkj->ik", tensor)
    raise ValueError(f"subsystem must be 1 or 2, got {subsystem}")


def partial_transpose(x: np.ndarray, subsystem: int, dims: BipartiteDims) -> np.ndarray:
    """Transpose one tensor factor of an operator on C^d1 (x) C^d2."""
    matrix, dims = _as_square(x, dims)
    tensor = matrix.reshape(dims.d1, dims.d2, dims.d1, dims.d2)
    if subsystem == 1:
        tensor = tensor.transpose(2, 1, 0, 3)
    elif subsystem == 2:
        tensor = tensor.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"subsystem must be 1 or 2, got {subsystem}")
    return tensor.reshape(dims.total, dims.total)


def local_ranges(psi: PureVector, tol: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of Im Tr_2|psi><psi| (in C^d1) and Im Tr_1|psi><psi| (in C^d2).

    The first range is the column space of A(psi), the second the column
    space of A(psi)^T; both have dimension equal to the Schmidt rank.
    """
    data = schmidt(psi, tol)
    return data.left_vectors.T.copy(), data.right_vectors.T.copy()


def _factor_kron(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Columns a (x) b for every pair of columns."""
    if left.shape[1] == 0 or right.shape[1] == 0:
        return np.zeros((left.shape[0] * right.shape[0], 0), dtype=complex)
    return np.einsum("ai,bj->abij", left, right).reshape(left.shape[0] * right.shape[0], -1)


def tilde_subspace(psi: PureVector, tol: Optional[float] = None) -> Subspace:
    """The subspace spanned by A_psi (x) C^d2 and C^d1 (x) B_psi.

    A_psi and B_psi are the ranges of the two marginals of |psi><psi|; the
    result has dimension r (d1 + d2 - r) for Schmidt rank r.
    """
    dims = psi.dims
    range_a, range_b = local_ranges(psi, tol)
    # A (x) C^d2, plus A^perp (x) B completes the span without overlap
    complement_a = scipy.linalg.null_space(range_a.conj().T) if range_a.shape[1] < dims.d1 \
        else np.zeros((dims.d1, 0), dtype=complex)
    columns = np.hstack([
        _factor_kron(range_a, np.eye(dims.d2, dtype=complex)),
        _factor_kron(complement_a, range_b),
    ])
    return Subspace(dims, columns, check=False)


def orthogonal_complement(v: Subspace) -> Subspace:
    """Orthogonal complement inside the ambient space."""
    if v.dim == 0:
        return Subspace.whole(v.ambient_dims)
    if v.dim == v.ambient_dims.total:
        return Subspace.zero(v.ambient_dims)
    return Subspace(v.ambient_dims, scipy.linalg.null_space(v.columns.conj().T), check=False)


def direct_sum(a: Subspace, b: Subspace, tol: float = 1e-10) -> Subspace:
    """Span of two subspaces (they need not be orthogonal)."""
    columns = np.hstack([a.columns, b.columns])
    if columns.shape[1] == 0:
        return Subspace.zero(a.ambient_dims)
    return Subspace(a.ambient_dims, scipy.linalg.orth(columns, rcond=tol), check=False)


def intersect_subspaces(a: Subspace, b: Subspace, angle_tol: float = 1e-5) -> Subspace:
    """Intersection through principal angles below angle_tol."""
    if a.dim == 0 or b.dim == 0:
        return Subspace.zero(a.ambient_dims)
    u, s, _ = np.linalg.svd(a.columns.conj().T @ b.columns)
    count = int(np.sum(s > np.cos(angle_tol)))
    if count == 0:
        return Subspace.zero(a.ambient_dims)
    columns = a.columns @ u[:, :count]
    return Subspace(a.ambient_dims, scipy.linalg.orth(columns), check=False)


def _factor_complement(dim: int, ranges: List[np.ndarray]) -> np.ndarray:
    if not ranges:
        return np.eye(dim, dtype=complex)
    stacked = np.hstack(ranges)
    if stacked.shape[1] == 0:
        return np.eye(dim, dtype=complex)
    span = scipy.linalg.orth(stacked)
    if span.shape[1] >= dim:
        return np.zeros((dim, 0), dtype=complex)
    return scipy.linalg.null_space(span.conj().T)


def v_hat(k_sep_kernel_vectors: Sequence[PureVector], k: int,
          tol: Optional[float] = None,
          dims: Optional[BipartiteDims] = None) -> Tuple[Subspace, Subspace, Subspace]:
    """Intersection of the complements of tilde_subspace over the given vectors.

    Args:
        k_sep_kernel_vectors: Vectors of Schmidt rank <= k
        k: Schmidt rank bound
        tol: Relative rank cutoff
        dims: Ambient dims, required when the vector list is empty

    Returns:
        (V_hat, V_hat_1, V_hat_2) where V_hat = V_hat_1 (x) V_hat_2; the factors
        are returned as subspaces with dims (1, d1) and (1, d2)
    """
    if dims is None:
        if not k_sep_kernel_vectors:
            raise ValueError("dims are required for an empty vector list")
        dims = k_sep_kernel_vectors[0].dims
    left_ranges, right_ranges = [], []
    for psi in k_sep_kernel_vectors:
        rank = schmidt_rank(psi, tol)
        if rank > k:
            raise ValueError(f"input vector has Schmidt rank {rank} > k = {k}")
        range_a, range_b = local_ranges(psi, tol)
        left_ranges.append(range_a)
        right_ranges.append(range_b)

    hat_1 = _factor_complement(dims.d1, left_ranges)
    hat_2 = _factor_complement(dims.d2, right_ranges)
    logger.debug(f"v_hat factors: dim {hat_1.shape[1]} x dim {hat_2.shape[1]}")
    return (
        Subspace(dims, _factor_kron(hat_1, hat_2), check=False),
        Subspace(BipartiteDims(d1=1, d2=dims.d1), hat_1, check=False),
        Subspace(BipartiteDims(d1=1, d2=dims.d2), hat_2, check=False),
    )
