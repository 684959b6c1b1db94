"""Witness Engine

This module splits Hermitian observables into positive, negative and kernel
parts, decides numerically whether an observable is a k-Schmidt witness,
checks the spectral conditions every witness must meet, and constructs
witnesses from spectral data by scaling the positive part.
"""

import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.core.bipartite import (
    BipartiteDims,
    PureVector,
    Subspace,
    direct_sum,
    intersect_subspaces,
    orthogonal_complement,
    schmidt,
    schmidt_truncate,
    tilde_subspace,
    v_hat,
)
from src.core.errors import OptimizerInconclusiveError, WitnessHypothesisError
from src.core.optimization import (
    OptimizerConfig,
    OptimizerTrace,
    defect_search,
    product_overlap_max,
    seesaw_min,
)
from src.core.subspace_lab import UpbFamily, contains_ksep, min_schmidt_defect, upb_complement

logger = logging.getLogger(__name__)

LAMBDA_LIMIT = 2.0 ** 64
LAMBDA_FLOOR = 2.0 ** -64
BISECTION_WIDTH = 1e-6


class SpectralSplit:
    """An observable split as W = W_plus - W_minus over V_plus, V_minus, V_zero."""

    def __init__(self, dims: BipartiteDims, eigenvalues: np.ndarray, eigenvectors: np.ndarray,
                 zero_band: float):
        self.dims = dims
        self.eigenvalues = np.array(eigenvalues, dtype=float)
        self.eigenvalues.setflags(write=False)
        self.eigenvector_matrix = np.array(eigenvectors, dtype=complex)
        self.eigenvector_matrix.setflags(write=False)
        self.zero_band = float(zero_band)

        plus = self.eigenvalues > zero_band
        minus = self.eigenvalues < -zero_band
        zero = ~(plus | minus)
        self._masks = {"plus": plus, "minus": minus, "zero": zero}

        self.v_plus = Subspace(dims, self.eigenvector_matrix[:, plus], check=False)
        self.v_minus = Subspace(dims, self.eigenvector_matrix[:, minus], check=False)
        self.v_zero = Subspace(dims, self.eigenvector_matrix[:, zero], check=False)

        vecs = self.eigenvector_matrix
        self.w_plus = (vecs[:, plus] * self.eigenvalues[plus]) @ vecs[:, plus].conj().T
        self.w_minus = (vecs[:, minus] * -self.eigenvalues[minus]) @ vecs[:, minus].conj().T

    @property
    def eigenvectors(self) -> List[PureVector]:
        return [PureVector(self.dims, self.eigenvector_matrix[:, i])
                for i in range(self.eigenvalues.size)]

    def _magnitudes(self, part: str) -> np.ndarray:
        return np.abs(self.eigenvalues[self._masks[part]])

    @property
    def lambda_plus_max(self) -> Optional[float]:
        values = self._magnitudes("plus")
        return float(values.max()) if values.size else None

    @property
    def lambda_plus_min(self) -> Optional[float]:
        values = self._magnitudes("plus")
        return float(values.min()) if values.size else None

    @property
    def lambda_minus_max(self) -> Optional[float]:
        values = self._magnitudes("minus")
        return float(values.max()) if values.size else None

    @property
    def lambda_minus_min(self) -> Optional[float]:
        values = self._magnitudes("minus")
        return float(values.min()) if values.size else None

    @property
    def signature(self) -> Tuple[int, int, int]:
        """(dim V_plus, dim V_minus, dim V_zero)."""
        return (self.v_plus.dim, self.v_minus.dim, self.v_zero.dim)

    def reconstruct(self) -> np.ndarray:
        return self.w_plus - self.w_minus

    def __repr__(self) -> str:
        p, q, z = self.signature
        return f"SpectralSplit(dims=({self.dims.d1}, {self.dims.d2}), signature=({p}, {q}, {z}))"


class ConditionRecord(BaseModel):
    """Verdict on one spectral condition, with a counterexample when it fails."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    holds: bool
    counterexample: Optional[PureVector] = None
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "holds": self.holds,
            "counterexample": self.counterexample.to_dict() if self.counterexample else None,
            "detail": self.detail,
        }


class NecessaryConditions(BaseModel):
    """The three spectral conditions satisfied by every k-Schmidt witness."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    condition1: ConditionRecord
    condition2: ConditionRecord
    condition3: ConditionRecord
    kernel_vectors: List[PureVector] = []

    @property
    def all_hold(self) -> bool:
        return self.condition1.holds and self.condition2.holds and self.condition3.holds


class EigenvalueConditions(BaseModel):
    """Eigenvalue-ratio tests against subspace sup norms (k = 1)."""

    necessary_holds: bool
    sufficient_holds: bool
    necessary_fraction: float
    sufficient_fraction: float
    epsilon_minus: float
    epsilon_minus_zero: Optional[float] = None
    reason: Optional[str] = None


class WitnessReport(BaseModel):
    """Numerical verdict on whether an observable is a k-Schmidt witness."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    is_witness: bool
    k: int
    min_over_sk: float
    min_eigenvalue: float
    sk_positive: bool
    detecting_vector: Optional[PureVector] = None
    violating_vector: Optional[PureVector] = None
    condition1: Optional[ConditionRecord] = None
    condition2: Optional[ConditionRecord] = None
    condition3: Optional[ConditionRecord] = None
    necessary_eig_holds: Optional[bool] = None
    sufficient_eig_holds: Optional[bool] = None
    signature: Tuple[int, int, int]
    starts: int
    converged_starts: int
    reason: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        def vector(v: Optional[PureVector]):
            return v.to_dict() if v is not None else None

        def condition(c: Optional[ConditionRecord]):
            return c.to_dict() if c is not None else None

        return {
            "is_witness": self.is_witness,
            "k": self.k,
            "min_over_sk": self.min_over_sk,
            "min_eigenvalue": self.min_eigenvalue,
            "sk_positive": self.sk_positive,
            "detecting_vector": vector(self.detecting_vector),
            "violating_vector": vector(self.violating_vector),
            "condition1": condition(self.condition1),
            "condition2": condition(self.condition2),
            "condition3": condition(self.condition3),
            "necessary_eig_holds": self.necessary_eig_holds,
            "sufficient_eig_holds": self.sufficient_eig_holds,
            "signature": list(self.signature),
            "starts": self.starts,
            "converged_starts": self.converged_starts,
            "reason": self.reason,
        }


class SpectralStructureChecks(BaseModel):
    """Spectral consequences of being a k-Schmidt witness."""

    negative_eigenvectors_entangled: bool
    minus_dimension_bound: bool
    plus_dimension_bound: Optional[bool] = None
    kernel_ksep_free: bool

    @property
    def violations(self) -> List[str]:
        failed = []
        if not self.negative_eigenvectors_entangled:
            failed.append("negative eigenvector of Schmidt rank <= k")
        if not self.minus_dimension_bound:
            failed.append("dim V_minus outside [1, (d1-k)(d2-k)]")
        if self.plus_dimension_bound is False:
            failed.append("dim V_plus below k(d1+d2)-k^2")
        return failed


def _as_observable(w: np.ndarray, dims: BipartiteDims) -> np.ndarray:
    w = np.asarray(w, dtype=complex)
    if w.shape != (dims.total, dims.total):
        raise ValueError(f"observable shape {w.shape} does not match ({dims.total}, {dims.total})")
    return w


def _check_hermitian(w: np.ndarray, tol: float):
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if np.max(np.abs(w - w.conj().T)) > max(tol, 1e-10) * scale:
        raise ValueError("observable is not Hermitian")


def spectral_split(w: np.ndarray, dims: BipartiteDims, tol: float = 1e-9) -> SpectralSplit:
    """Eigen-decompose w and sort eigenvectors into V_plus, V_minus and V_zero.

    Args:
        w: Hermitian matrix on C^d1 (x) C^d2
        dims: Bipartite dimensions
        tol: Relative zero band; |lambda| <= tol * max|lambda| goes to V_zero

    Returns:
        SpectralSplit with ascending eigenvalues
    """
    w = _as_observable(w, dims)
    _check_hermitian(w, tol)
    hermitian = (w + w.conj().T) / 2
    eigenvalues, eigenvectors = np.linalg.eigh(hermitian)
    scale = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
    return SpectralSplit(dims, eigenvalues, eigenvectors, tol * scale)


def _check_k_range(dims: BipartiteDims, k: int):
    if k < 1 or k > dims.d1:
        raise ValueError(f"k out of range: expected 1 <= k <= {dims.d1}, got {k}")


def min_over_sk(w: np.ndarray, dims: BipartiteDims, k: int, cfg: OptimizerConfig,
                trace: Optional[OptimizerTrace] = None,
                stop_below: Optional[float] = None) -> Tuple[float, PureVector]:
    """Minimize <psi|W|psi> over unit vectors psi of Schmidt rank <= k.

    Args:
        w: Hermitian observable
        dims: Bipartite dimensions
        k: Schmidt rank bound, 1 <= k <= d1
        cfg: Optimizer configuration
        trace: Optional trace collector
        stop_below: Stop after the first start reaching a value below this

    Returns:
        (value, argmin); value is never below lambda_min(W)
    """
    w = _as_observable(w, dims)
    _check_k_range(dims, k)
    result = seesaw_min((w + w.conj().T) / 2, dims, k, cfg, trace=trace, stop_below=stop_below)
    argmin = PureVector(dims, result.point).normalized()
    value = float(np.real(np.vdot(argmin.coords, w @ argmin.coords)))
    return value, argmin


def _search_counts(w: np.ndarray, dims: BipartiteDims, k: int, cfg: OptimizerConfig,
                   trace: Optional[OptimizerTrace]) -> Tuple[float, PureVector, int, int]:
    w = (w + w.conj().T) / 2
    result = seesaw_min(w, dims, k, cfg, trace=trace, stop_below=-cfg.witness_tol)
    argmin = PureVector(dims, result.point).normalized()
    value = float(np.real(np.vdot(argmin.coords, w @ argmin.coords)))
    return value, argmin, result.starts, result.converged_starts


def is_k_witness(w: np.ndarray, dims: BipartiteDims, k: int, cfg: OptimizerConfig,
                 trace: Optional[OptimizerTrace] = None,
                 kernel_vectors: Optional[List[PureVector]] = None,
                 with_conditions: bool = True) -> WitnessReport:
    """Decide numerically whether w is a k-Schmidt witness.

    The verdict is positive when no vector of Schmidt rank <= k with
    expectation below -witness_tol is found and w has an eigenvalue below
    -witness_tol. Condition records come from check_necessary.

    Args:
        w: Hermitian observable
        dims: Bipartite dimensions
        k: Schmidt rank bound
        cfg: Optimizer configuration
        trace: Optional trace collector
        kernel_vectors: Extra rank <= k kernel vectors for condition (iii)
        with_conditions: Also evaluate the spectral condition checks

    Returns:
        WitnessReport
    """
    w = _as_observable(w, dims)
    _check_k_range(dims, k)
    split = spectral_split(w, dims, cfg.zero_tol)
    min_eigenvalue = float(split.eigenvalues[0])
    value, argmin, starts, converged = _search_counts(w, dims, k, cfg, trace)

    sk_positive = value >= -cfg.witness_tol
    has_negative = min_eigenvalue < -cfg.witness_tol
    is_witness = sk_positive and has_negative

    reason = None
    if not has_negative:
        reason = "no negative eigenvalue"
    elif not sk_positive:
        reason = f"negative expectation {value:.6g} on a vector of Schmidt rank <= {k}"

    report = WitnessReport(
        is_witness=is_witness,
        k=k,
        min_over_sk=value,
        min_eigenvalue=min_eigenvalue,
        sk_positive=sk_positive,
        detecting_vector=split.eigenvectors[0] if has_negative else None,
        violating_vector=argmin if not sk_positive else None,
        signature=split.signature,
        starts=starts,
        converged_starts=converged,
        reason=reason,
    )

    if with_conditions and k < dims.d1:
        conditions = check_necessary(split, k, cfg, kernel_vectors=kernel_vectors, trace=trace)
        report.condition1 = conditions.condition1
        report.condition2 = conditions.condition2
        report.condition3 = conditions.condition3
    if with_conditions and k == 1 and split.v_plus.dim > 0 and split.v_minus.dim > 0:
        eig = eigenvalue_conditions(split, cfg, trace=trace)
        report.necessary_eig_holds = eig.necessary_holds
        report.sufficient_eig_holds = eig.sufficient_holds

    logger.info(f"k={k} witness check: min over S_k {value:.6g}, lambda_min {min_eigenvalue:.6g}, "
                f"witness={is_witness}")
    return report


def _component_tol(cfg: OptimizerConfig) -> float:
    return float(np.sqrt(cfg.subspace_tol))


def _negative_part_condition(v_zero: Subspace, v_minus: Subspace, k: int,
                             cfg: OptimizerConfig,
                             trace: Optional[OptimizerTrace] = None) -> ConditionRecord:
    """No unit vector of Schmidt rank <= k in V_zero + V_minus outside V_zero."""
    if v_minus.dim == 0:
        return ConditionRecord(holds=True, detail="V_minus is empty")
    dims = v_minus.ambient_dims

    certificate = min_schmidt_defect(v_minus, k, cfg, trace=trace, stop_below=cfg.defect_tol)
    if certificate.value < cfg.defect_tol:
        return ConditionRecord(holds=False, counterexample=certificate.argmin,
                               detail=f"V_minus holds a vector of defect {certificate.value:.3g}")
    if v_zero.dim == 0:
        return ConditionRecord(holds=True, detail=f"V_minus defect {certificate.value:.6g}")

    combined = direct_sum(v_zero, v_minus)
    result = defect_search(np.asarray(combined.columns), dims, k, cfg, trace=trace,
                           routine="defect_negative_part")
    tol = _component_tol(cfg)
    for value, point in zip(result.values, result.points):
        if value >= cfg.defect_tol:
            continue
        candidate = combined.vector(point).normalized()
        component = np.linalg.norm(v_minus.project(candidate))
        if component > tol:
            return ConditionRecord(
                holds=False, counterexample=candidate,
                detail=f"rank <= {k} vector with V_minus component {component:.3g}")
    return ConditionRecord(holds=True, detail=f"V_minus defect {certificate.value:.6g}")


def kernel_ksep_vectors(v_zero: Subspace, k: int, cfg: OptimizerConfig,
                        trace: Optional[OptimizerTrace] = None) -> List[PureVector]:
    """Distinct Schmidt-rank <= k kernel vectors found by the defect search.

    Near-rank-k minimizers are truncated to exact rank k; duplicates up to
    phase are dropped.
    """
    dims = v_zero.ambient_dims
    if v_zero.dim == 0 or k >= dims.d1:
        return []
    result = defect_search(np.asarray(v_zero.columns), dims, k, cfg, trace=trace,
                           routine="defect_kernel")
    found: List[PureVector] = []
    for value, point in zip(result.values, result.points):
        if value >= cfg.defect_tol:
            continue
        candidate = schmidt_truncate(v_zero.vector(point), k).normalized()
        if all(abs(candidate.inner(other)) < 1 - 1e-8 for other in found):
            found.append(candidate)
    logger.debug(f"found {len(found)} rank <= {k} kernel vectors")
    return found


def check_necessary(split: SpectralSplit, k: int, cfg: OptimizerConfig,
                    kernel_vectors: Optional[List[PureVector]] = None,
                    trace: Optional[OptimizerTrace] = None) -> NecessaryConditions:
    """Evaluate the three spectral conditions every k-Schmidt witness meets.

    condition1: V_minus is nonzero.
    condition2: no vector of Schmidt rank <= k in V_zero + V_minus outside V_zero.
    condition3: for each rank <= k kernel vector psi found (plus the given
    ones), the intersection of tilde_subspace(psi) with V_zero + V_minus lies
    in V_zero.
    """
    condition1 = ConditionRecord(holds=split.v_minus.dim >= 1,
                                 detail=f"dim V_minus = {split.v_minus.dim}")
    condition2 = _negative_part_condition(split.v_zero, split.v_minus, k, cfg, trace=trace)

    kernel = kernel_ksep_vectors(split.v_zero, k, cfg, trace=trace)
    for vec in kernel_vectors or []:
        if np.linalg.norm(vec.coords - split.v_zero.project(vec)) > _component_tol(cfg) * vec.norm:
            raise ValueError("supplied kernel vector is not in the kernel")
        kernel.append(vec.normalized())

    condition3 = ConditionRecord(holds=True, detail=f"checked {len(kernel)} kernel vectors")
    if split.v_minus.dim and kernel:
        target = direct_sum(split.v_zero, split.v_minus)
        tol = _component_tol(cfg)
        for psi in kernel:
            overlap = intersect_subspaces(tilde_subspace(psi), target)
            for basis_vector in overlap.basis:
                component = np.linalg.norm(split.v_minus.project(basis_vector))
                if component > tol:
                    condition3 = ConditionRecord(
                        holds=False, counterexample=basis_vector,
                        detail=f"tilde subspace of a kernel vector reaches V_minus "
                               f"(component {component:.3g})")
                    break
            if not condition3.holds:
                break

    return NecessaryConditions(condition1=condition1, condition2=condition2,
                               condition3=condition3, kernel_vectors=kernel)


def epsilon_min(v: Subspace, cfg: OptimizerConfig,
                trace: Optional[OptimizerTrace] = None) -> float:
    """Squared sup norm of a subspace: max |<phi (x) chi|Phi>|^2 over unit vectors.

    Equals the squared top Schmidt coefficient maximized over unit Phi in v.
    """
    if v.dim == 0:
        raise ValueError("empty subspace")
    result = product_overlap_max(np.asarray(v.columns), v.ambient_dims, cfg, trace=trace)
    return float(min(max(result.value, 0.0), 1.0))


def k_sup_norm(v: Subspace, k: int, cfg: OptimizerConfig,
               trace: Optional[OptimizerTrace] = None) -> float:
    """Largest squared overlap of v with a unit vector of Schmidt rank <= k."""
    if v.dim == 0:
        raise ValueError("empty subspace")
    value, _ = min_over_sk(-v.projector(), v.ambient_dims, k, cfg, trace=trace)
    return float(min(max(-value, 0.0), 1.0))


def projector_witness(v_minus: Subspace, epsilon: float) -> np.ndarray:
    """The observable epsilon * I - P_{V_minus}."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    return epsilon * np.eye(v_minus.ambient_dims.total, dtype=complex) - v_minus.projector()


def upb_witness(upb: UpbFamily, epsilon: float, tol: float = 1e-10) -> np.ndarray:
    """The observable I - (1 + epsilon) P_V for the complement V of a UPB."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    v = upb_complement(upb, tol)
    return np.eye(upb.dims.total, dtype=complex) - (1 + epsilon) * v.projector()


def upb_epsilon_bound(upb: UpbFamily, cfg: OptimizerConfig,
                      trace: Optional[OptimizerTrace] = None) -> float:
    """Largest epsilon for which upb_witness stays nonnegative on product vectors.

    <phi chi|W|phi chi> >= 0 iff |P_V phi chi|^2 <= 1 / (1 + epsilon), so the
    limit is (1 - s) / s with s the squared sup norm of the complement.
    """
    s = epsilon_min(upb_complement(upb), cfg, trace=trace)
    bound = (1 - s) / s
    logger.info(f"UPB complement sup norm {s:.8g}, epsilon bound {bound:.6g}")
    return bound


def eigenvalue_conditions(split: SpectralSplit, cfg: OptimizerConfig,
                          trace: Optional[OptimizerTrace] = None) -> EigenvalueConditions:
    """Eigenvalue-ratio conditions for a 1-Schmidt witness.

    necessary: lambda_plus_max / (lambda_plus_max + lambda_minus_min) >= eps(V_minus)
    sufficient: lambda_plus_min / (lambda_plus_min + lambda_minus_max) >= eps(V_minus + V_zero),
    never met when the kernel holds a product vector. Both comparisons allow
    the witness_tol slack.
    """
    if split.v_plus.dim == 0:
        raise ValueError("V_plus is empty: eigenvalue fractions undefined")
    if split.v_minus.dim == 0:
        raise ValueError("V_minus is empty: eigenvalue fractions undefined")

    plus_max, plus_min = split.lambda_plus_max, split.lambda_plus_min
    minus_max, minus_min = split.lambda_minus_max, split.lambda_minus_min
    necessary_fraction = plus_max / (plus_max + minus_min)
    sufficient_fraction = plus_min / (plus_min + minus_max)

    epsilon_minus = epsilon_min(split.v_minus, cfg, trace=trace)
    necessary = necessary_fraction >= epsilon_minus - cfg.witness_tol / (plus_max + minus_min)

    reason = None
    epsilon_minus_zero: Optional[float] = None
    if split.v_zero.dim == 0:
        epsilon_minus_zero = epsilon_minus
    elif split.dims.d1 == 1 or contains_ksep(split.v_zero, 1, cfg, trace=trace).found:
        reason = "kernel contains a product vector"
    else:
        epsilon_minus_zero = epsilon_min(direct_sum(split.v_minus, split.v_zero), cfg, trace=trace)

    if epsilon_minus_zero is None:
        sufficient = False
    else:
        sufficient = sufficient_fraction >= epsilon_minus_zero - cfg.witness_tol / (plus_min + minus_max)
        if not sufficient:
            reason = "eigenvalue fraction below the sup norm of V_minus + V_zero"

    return EigenvalueConditions(
        necessary_holds=bool(necessary),
        sufficient_holds=bool(sufficient),
        necessary_fraction=float(necessary_fraction),
        sufficient_fraction=float(sufficient_fraction),
        epsilon_minus=epsilon_minus,
        epsilon_minus_zero=epsilon_minus_zero,
        reason=reason,
    )


def _check_split_inputs(v_plus: Subspace, v_zero: Subspace, v_minus: Subspace,
                        w_plus: np.ndarray, w_minus: np.ndarray, tol: float):
    dims = v_plus.ambient_dims
    if v_plus.dim + v_zero.dim + v_minus.dim != dims.total:
        raise ValueError(f"subspace dimensions sum to {v_plus.dim + v_zero.dim + v_minus.dim}, "
                         f"expected {dims.total}")
    columns = np.hstack([v_plus.columns, v_zero.columns, v_minus.columns])
    if np.max(np.abs(columns.conj().T @ columns - np.eye(dims.total))) > tol:
        raise ValueError("V_plus, V_zero and V_minus are not mutually orthogonal")
    for name, part, space in (("w_plus", w_plus, v_plus), ("w_minus", w_minus, v_minus)):
        part = _as_observable(part, dims)
        projector = space.projector()
        if np.max(np.abs(part - projector @ part @ projector)) > tol * max(1.0, np.max(np.abs(part))):
            raise ValueError(f"{name} is not supported on its subspace")
        if np.linalg.eigvalsh((part + part.conj().T) / 2)[0] < -tol:
            raise ValueError(f"{name} is not positive semidefinite")


def build_witness(v_plus: Subspace, v_zero: Subspace, v_minus: Subspace,
                  w_plus: np.ndarray, w_minus: np.ndarray, k: int, cfg: OptimizerConfig,
                  kernel_vectors: Optional[List[PureVector]] = None,
                  trace: Optional[OptimizerTrace] = None) -> Tuple[float, np.ndarray]:
    """Smallest lambda making lambda * W_plus - W_minus a certified k-Schmidt witness.

    Checks the hypotheses of the construction first: V_minus nonzero, no
    rank <= k vector in V_zero + V_minus outside V_zero, and V_minus inside the
    product subspace V_hat built from the rank <= k kernel vectors. Then
    brackets lambda by doubling (or halving) from 1 and bisects to a relative
    width of 1e-6.

    Returns:
        (lambda_star, lambda_star * w_plus - w_minus)

    Raises:
        WitnessHypothesisError: A hypothesis fails
        OptimizerInconclusiveError: No certification below lambda = 2^64
    """
    dims = v_plus.ambient_dims
    _check_k_range(dims, k)
    if k >= dims.d1:
        raise ValueError("S_k is the whole space")
    _check_split_inputs(v_plus, v_zero, v_minus, w_plus, w_minus, cfg.subspace_tol)

    if v_minus.dim == 0:
        raise WitnessHypothesisError("i", "V_minus is empty")
    condition = _negative_part_condition(v_zero, v_minus, k, cfg, trace=trace)
    if not condition.holds:
        raise WitnessHypothesisError("ii", condition.detail, condition.counterexample)

    kernel = kernel_ksep_vectors(v_zero, k, cfg, trace=trace) + list(kernel_vectors or [])
    if kernel:
        hat, _, _ = v_hat(kernel, k, tol=1e-8, dims=dims)
        outside = np.linalg.norm(np.asarray(v_minus.columns) - hat.projector() @ v_minus.columns, axis=0)
        worst = int(np.argmax(outside))
        if outside[worst] > _component_tol(cfg):
            raise WitnessHypothesisError(
                "iii", f"V_minus is not contained in V_hat (distance {outside[worst]:.3g})",
                PureVector(dims, v_minus.columns[:, worst]))

    w_plus = np.asarray(w_plus, dtype=complex)
    w_minus = np.asarray(w_minus, dtype=complex)

    def certified(lam: float) -> bool:
        report = is_k_witness(lam * w_plus - w_minus, dims, k, cfg, trace=trace, with_conditions=False)
        logger.debug(f"lambda {lam:.10g}: certified={report.is_witness}")
        return report.is_witness

    lam = 1.0
    if certified(lam):
        hi = lam
        lo = lam / 2
        while certified(lo):
            hi = lo
            lo = lo / 2
            if lo < LAMBDA_FLOOR:
                logger.warning(f"certified down to lambda {hi:.3g}")
                return hi, hi * w_plus - w_minus
    else:
        lo = lam
        hi = lam * 2
        while not certified(hi):
            lo = hi
            hi = hi * 2
            if hi > LAMBDA_LIMIT:
                raise OptimizerInconclusiveError("no witness found below lambda = 2^64")
    logger.info(f"lambda bracket [{lo:.10g}, {hi:.10g}]")

    while hi - lo > BISECTION_WIDTH * hi:
        mid = (lo + hi) / 2
        if certified(mid):
            hi = mid
        else:
            lo = mid
    logger.info(f"lambda_star = {hi:.10g}")
    return hi, hi * w_plus - w_minus


def example_c3c4(cfg: OptimizerConfig, psi_minus: Optional[PureVector] = None,
                 free_eigenvalue: float = 0.0) -> np.ndarray:
    """Witness on C^3 (x) C^4 whose kernel contains e1 (x) f1 and e1 (x) f2.

    The negative eigenvector psi_minus (default: Bell vector on
    span{e2, e3} (x) span{f3, f4}) has eigenvalue -1, its orthogonal
    complement inside V_hat gets eps / (1 - eps) with eps the squared top
    Schmidt coefficient of psi_minus, and the six remaining directions get
    free_eigenvalue.
    """
    if free_eigenvalue < 0:
        raise ValueError("free_eigenvalue must be nonnegative")
    dims = BipartiteDims(d1=3, d2=4)
    kernel = [PureVector.basis_vector(dims, 0, 0), PureVector.basis_vector(dims, 0, 1)]
    hat, _, _ = v_hat(kernel, 1, dims=dims)

    if psi_minus is None:
        psi_minus = PureVector(dims, (PureVector.basis_vector(dims, 1, 2).coords
                                      + PureVector.basis_vector(dims, 2, 3).coords) / np.sqrt(2))
    psi_minus = psi_minus.normalized()
    if np.linalg.norm(psi_minus.coords - hat.project(psi_minus)) > cfg.subspace_tol:
        raise ValueError("psi_minus must lie in span{e2, e3} (x) span{f3, f4}")
    data = schmidt(psi_minus)
    if data.rank < 2:
        raise ValueError("psi_minus must be entangled")
    epsilon = float(data.coefficients[0] ** 2)

    minus = Subspace(dims, psi_minus.coords)
    rest_of_hat = intersect_subspaces(hat, orthogonal_complement(minus))
    free = orthogonal_complement(direct_sum(Subspace.from_vectors(dims, kernel), hat))

    w = -minus.projector() + epsilon / (1 - epsilon) * rest_of_hat.projector() \
        + free_eigenvalue * free.projector()
    logger.info(f"C3xC4 witness: eps = {epsilon:.6g}, free eigenvalue {free_eigenvalue:g}")
    return w


def spectral_structure_checks(w: np.ndarray, dims: BipartiteDims, k: int, cfg: OptimizerConfig,
                              trace: Optional[OptimizerTrace] = None) -> SpectralStructureChecks:
    """Spectral properties implied by w being a k-Schmidt witness.

    Negative eigenspaces hold no vector of Schmidt rank <= k; 1 <= dim V_minus
    <= (d1-k)(d2-k); dim V_plus >= k(d1+d2) - k^2 when the kernel holds no
    rank <= k vector.
    """
    split = spectral_split(w, dims, cfg.zero_tol)
    _check_k_range(dims, k)
    if k >= dims.d1:
        raise ValueError("S_k is the whole space")

    entangled = True
    negative = split.eigenvalues[split.eigenvalues < -split.zero_band]
    vectors = split.eigenvector_matrix[:, split.eigenvalues < -split.zero_band]
    groups: Dict[int, List[int]] = {}
    for index, value in enumerate(negative):
        key = next((g for g in groups if abs(negative[g] - value) <= max(split.zero_band, 1e-9)), index)
        groups.setdefault(key, []).append(index)
    for members in groups.values():
        eigenspace = Subspace(dims, vectors[:, members], check=False)
        if min_schmidt_defect(eigenspace, k, cfg, trace=trace).value < cfg.defect_tol:
            entangled = False
            break

    bound = (dims.d1 - k) * (dims.d2 - k)
    minus_bound = 1 <= split.v_minus.dim <= bound

    if split.v_zero.dim == 0:
        kernel_free = True
    else:
        kernel_free = not contains_ksep(split.v_zero, k, cfg, trace=trace).found
    plus_bound = split.v_plus.dim >= k * (dims.d1 + dims.d2) - k * k if kernel_free else None

    return SpectralStructureChecks(
        negative_eigenvectors_entangled=entangled,
        minus_dimension_bound=minus_bound,
        plus_dimension_bound=plus_bound,
        kernel_ksep_free=kernel_free,
    )

