"""Entangled Subspace Lab

This module builds and certifies subspaces that hold no nonzero vector of
Schmidt rank <= k: the diagonal-band subspace V_max^k, complements of
unextendible product bases, and the numerical checks around them (defect
minimization, a grid oracle, and the Jacobian rank of the minor variety).
"""

import itertools
import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.core.bipartite import (
    BipartiteDims,
    CoordMatrix,
    PureVector,
    Subspace,
    coord_matrix,
    orthogonal_complement,
    schmidt_rank,
)
from src.core.optimization import OptimizerConfig, OptimizerTrace, defect_search

logger = logging.getLogger(__name__)

ORACLE_MAX_DIM = 3
ORACLE_CHUNK = 4096


class DefectCertificate(BaseModel):
    """Smallest (k+1)-th singular value found on the unit sphere of a subspace."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    value: float
    argmin: PureVector
    starts: int
    converged_starts: int

    def to_dict(self):
        return {
            "value": self.value,
            "argmin": self.argmin.to_dict(),
            "starts": self.starts,
            "converged_starts": self.converged_starts,
        }


class KSepSearchResult(BaseModel):
    """Outcome of searching a subspace for a vector of Schmidt rank <= k."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    found: bool
    vector: Optional[PureVector] = None
    defect: float
    starts: int


class UpbFamily:
    """Mutually orthogonal product vectors."""

    def __init__(self, dims: BipartiteDims, vectors: List[PureVector]):
        for i, vec in enumerate(vectors):
            if schmidt_rank(vec, tol=1e-10) != 1:
                raise ValueError(f"UPB member {i} is not a product vector")
        for i, j in itertools.combinations(range(len(vectors)), 2):
            if abs(vectors[i].inner(vectors[j])) > 1e-10:
                raise ValueError(f"UPB members {i} and {j} are not orthogonal")
        self.dims = dims
        self.vectors = [vec.normalized() for vec in vectors]

    def __len__(self) -> int:
        return len(self.vectors)


def _check_k(dims: BipartiteDims, k: int):
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k >= dims.d1:
        raise ValueError("S_k is the whole space")


def vmax_subspace(dims: BipartiteDims, k: int) -> Subspace:
    """Span of the diagonal bands g_{m,n} = sum_{i=0}^{k} e_{m+i} (x) f_{n+i}.

    Args:
        dims: Bipartite dimensions
        k: Schmidt rank bound, 1 <= k < d1

    Returns:
        Subspace of dimension (d1 - k)(d2 - k), orthonormalized in
        lexicographic (m, n) order
    """
    _check_k(dims, k)
    generators = []
    for m in range(dims.d1 - k):
        for n in range(dims.d2 - k):
            g = np.zeros((dims.d1, dims.d2), dtype=complex)
            for i in range(k + 1):
                g[m + i, n + i] = 1.0
            generators.append(g.reshape(-1))
    q, r = np.linalg.qr(np.column_stack(generators))
    signs = np.sign(np.real(np.diag(r)))
    signs[signs == 0] = 1.0
    return Subspace(dims, q * signs, check=False)


def _check_nonempty(v: Subspace):
    if v.dim == 0:
        raise ValueError("empty subspace")


def min_schmidt_defect(v: Subspace, k: int, cfg: OptimizerConfig,
                       trace: Optional[OptimizerTrace] = None,
                       stop_below: Optional[float] = None) -> DefectCertificate:
    """Minimize sigma_{k+1}(A(psi)) over unit psi in v (multistart).

    Args:
        v: Nonempty subspace
        k: Schmidt rank bound, 1 <= k < d1
        cfg: Optimizer configuration
        trace: Optional trace collector
        stop_below: Stop after the first start that reaches this value

    Returns:
        DefectCertificate; the value upper-bounds the true minimum
    """
    _check_k(v.ambient_dims, k)
    _check_nonempty(v)
    result = defect_search(np.asarray(v.columns), v.ambient_dims, k, cfg, trace=trace,
                           stop_below=stop_below)
    argmin = v.vector(result.point).normalized()
    value = float(np.linalg.svd(coord_matrix(argmin).entries, compute_uv=False)[k])
    return DefectCertificate(value=value, argmin=argmin, starts=result.starts,
                             converged_starts=result.converged_starts)


def _sphere_grid(dim: int, resolution: int) -> np.ndarray:
    """Unit coefficient vectors on an angular grid (first coordinate real)."""
    thetas = np.pi / 2 * np.arange(resolution + 1) / resolution
    phis = 2 * np.pi * np.arange(resolution) / resolution
    if dim == 1:
        return np.ones((1, 1), dtype=complex)
    if dim == 2:
        t, p = np.meshgrid(thetas, phis, indexing="ij")
        t, p = t.ravel(), p.ravel()
        return np.stack([np.cos(t), np.exp(1j * p) * np.sin(t)], axis=1)
    t1, t2, p1, p2 = np.meshgrid(thetas, thetas, phis, phis, indexing="ij")
    t1, t2, p1, p2 = t1.ravel(), t2.ravel(), p1.ravel(), p2.ravel()
    return np.stack([
        np.cos(t1).astype(complex),
        np.exp(1j * p1) * np.sin(t1) * np.cos(t2),
        np.exp(1j * p2) * np.sin(t1) * np.sin(t2),
    ], axis=1)


def brute_force_defect(v: Subspace, k: int, grid_resolution: int = 32) -> float:
    """Minimum of sigma_{k+1} over a deterministic grid on the unit sphere of v.

    An upper bound of the true minimum, meant as a cross-check oracle for
    subspaces of dimension at most 3.
    """
    _check_nonempty(v)
    if v.dim > ORACLE_MAX_DIM:
        raise ValueError("oracle limited to dim ≤ 3")
    if grid_resolution < 16:
        raise ValueError(f"grid_resolution must be at least 16, got {grid_resolution}")
    dims = v.ambient_dims
    coefficients = _sphere_grid(v.dim, grid_resolution)
    best = np.inf
    for start in range(0, coefficients.shape[0], ORACLE_CHUNK):
        chunk = coefficients[start:start + ORACLE_CHUNK] @ np.asarray(v.columns).T
        sigmas = np.linalg.svd(chunk.reshape(-1, dims.d1, dims.d2), compute_uv=False)[:, k]
        best = min(best, float(np.min(sigmas)))
    return best


def contains_ksep(v: Subspace, k: int, cfg: OptimizerConfig,
                  trace: Optional[OptimizerTrace] = None) -> KSepSearchResult:
    """Search v for a unit vector of Schmidt rank <= k.

    Stops at the first start whose defect drops below cfg.defect_tol.
    """
    certificate = min_schmidt_defect(v, k, cfg, trace=trace, stop_below=cfg.defect_tol)
    found = certificate.value < cfg.defect_tol
    dims = v.ambient_dims
    bound = (dims.d1 - k) * (dims.d2 - k)
    if not found and v.dim > bound:
        logger.warning(f"no rank-{k} vector found in a subspace of dim {v.dim} > {bound} "
                       f"(seed {cfg.seed}, {certificate.starts} starts); optimizer missed it")
    return KSepSearchResult(
        found=found,
        vector=certificate.argmin if found else None,
        defect=certificate.value,
        starts=certificate.starts,
    )


def tiles_upb() -> UpbFamily:
    """The five-member Tiles unextendible product basis of C^3 (x) C^3."""
    dims = BipartiteDims(d1=3, d2=3)
    e = np.eye(3)
    s2 = np.sqrt(2.0)
    pairs = [
        (e[0], (e[0] - e[1]) / s2),
        (e[2], (e[1] - e[2]) / s2),
        ((e[0] - e[1]) / s2, e[2]),
        ((e[1] - e[2]) / s2, e[0]),
        (np.ones(3) / np.sqrt(3.0), np.ones(3) / np.sqrt(3.0)),
    ]
    return UpbFamily(dims, [PureVector.product(dims, x, y) for x, y in pairs])


def upb_complement(upb: UpbFamily, tol: float = 1e-10) -> Subspace:
    """Orthogonal complement of the span of a UPB."""
    span = Subspace.from_vectors(upb.dims, upb.vectors, tol=tol)
    return orthogonal_complement(span)


def _minors(entries: np.ndarray, k: int) -> np.ndarray:
    d1, d2 = entries.shape
    return np.array([
        np.linalg.det(entries[np.ix_(rows, cols)])
        for rows in itertools.combinations(range(d1), k + 1)
        for cols in itertools.combinations(range(d2), k + 1)
    ])


def minor_jacobian(point: CoordMatrix, k: int, method: str = "analytic") -> np.ndarray:
    """Jacobian of all (k+1)-minors with respect to the 2*d1*d2 real coordinates.

    Columns are ordered as (Re z_ab for all a, b) followed by (Im z_ab); each
    row is one minor, rows and columns of the minor taken in lexicographic
    order.

    Args:
        point: Coordinate matrix at which to differentiate
        k: Rank bound of the variety
        method: "analytic" (cofactor expansion) or "finite_difference"
            (central differences, step 1e-6)

    Returns:
        Complex array of shape (number of minors, 2 * d1 * d2)
    """
    entries = np.asarray(point.entries)
    d1, d2 = entries.shape
    n = d1 * d2
    if method == "analytic":
        rows_list = list(itertools.combinations(range(d1), k + 1))
        cols_list = list(itertools.combinations(range(d2), k + 1))
        holomorphic = np.zeros((len(rows_list) * len(cols_list), n), dtype=complex)
        for r_index, rows in enumerate(rows_list):
            for c_index, cols in enumerate(cols_list):
                row = r_index * len(cols_list) + c_index
                for i, a in enumerate(rows):
                    for j, b in enumerate(cols):
                        sub_rows = [x for x in rows if x != a]
                        sub_cols = [y for y in cols if y != b]
                        cofactor = np.linalg.det(entries[np.ix_(sub_rows, sub_cols)]) if k > 0 else 1.0
                        holomorphic[row, a * d2 + b] = (-1) ** (i + j) * cofactor
        return np.hstack([holomorphic, 1j * holomorphic])
    if method == "finite_difference":
        h = 1e-6
        columns = []
        for direction in (1.0, 1j):
            for index in range(n):
                step = np.zeros(n, dtype=complex)
                step[index] = h * direction
                plus = _minors(entries + step.reshape(d1, d2), k)
                minus = _minors(entries - step.reshape(d1, d2), k)
                columns.append((plus - minus) / (2 * h))
        return np.column_stack(columns)
    raise ValueError(f"unknown Jacobian method: {method}")


def variety_jacobian_rank(dims: BipartiteDims, k: int, point: CoordMatrix,
                          tol: float = 1e-8, method: str = "analytic") -> int:
    """Rank of the minor Jacobian at a rank-k point of the variety S_k.

    At regular points this equals the codimension (d1 - k)(d2 - k).
    """
    if point.dims != dims:
        raise ValueError(f"point dims ({point.dims.d1}, {point.dims.d2}) do not match "
                         f"({dims.d1}, {dims.d2})")
    _check_k(dims, k)
    s = np.linalg.svd(np.asarray(point.entries), compute_uv=False)
    if int(np.sum(s > tol * s[0])) != k:
        raise ValueError("not on the variety's regular locus")
    jacobian = minor_jacobian(point, k, method=method)
    singular = np.linalg.svd(jacobian, compute_uv=False)
    rank = int(np.sum(singular > tol * singular[0])) if singular.size and singular[0] > 0 else 0
    logger.debug(f"minor Jacobian at ({dims.d1}, {dims.d2}), k={k}: rank {rank}")
    return rank
