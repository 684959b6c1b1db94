"""Multistart Optimization

This module holds the numerical searches shared by the subspace and witness
code: the seeded multistart harness, the Schmidt-defect minimizer, the seesaw
minimizer of <psi|W|psi> over vectors of bounded Schmidt rank, and the
alternating maximizer of the product-state overlap of a subspace.

All searches are local and therefore one-sided: a reported minimum is an
upper bound of the true minimum.
"""

import csv
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, List, Optional, Tuple

import numpy as np
import scipy.optimize
from pydantic import BaseModel, ConfigDict, Field

from src.core.bipartite import BipartiteDims

logger = logging.getLogger(__name__)


class OptimizerConfig(BaseModel):
    """Budget and tolerances for every numerical search."""
    model_config = ConfigDict(frozen=True)

    seed: int = Field(default=42, ge=0, description="Master seed of the multistart generator")
    starts: int = Field(default=32, ge=1, description="Number of independent starts")
    max_iterations: int = Field(default=500, ge=1, description="Iteration cap per start")
    convergence_tol: float = Field(default=1e-10, gt=0, description="Relative change that ends a start")
    defect_tol: float = Field(default=1e-6, gt=0, description="Defect below which a vector counts as rank <= k")
    witness_tol: float = Field(default=1e-7, gt=0, description="Slack on positivity over S_k")
    zero_tol: float = Field(default=1e-9, gt=0, description="Relative band of zero eigenvalues")
    subspace_tol: float = Field(default=1e-6, gt=0, description="Tolerance on subspace containment checks")
    max_workers: int = Field(default=1, ge=1, description="Threads used for independent starts")

    @classmethod
    def from_config(cls, manager: Any) -> "OptimizerConfig":
        """Build from the `optimizer` section of a ConfigManager."""
        section = manager.get("optimizer", {}) or {}
        return cls(**{key: value for key, value in section.items() if key in cls.model_fields})

    def with_overrides(self, **overrides: Any) -> "OptimizerConfig":
        """Copy with the given non-None fields replaced (validated)."""
        values = self.model_dump()
        values.update({key: value for key, value in overrides.items() if value is not None})
        return OptimizerConfig(**values)


class OptimizerTrace:
    """Collects (routine, start, iteration, value) rows from the searches.

    Safe to share across the worker threads of one multistart run.
    """

    FIELDS = ("routine", "start", "iteration", "value")

    def __init__(self):
        self.rows: List[Tuple[str, int, int, float]] = []
        self._lock = threading.Lock()

    def record(self, routine: str, start: int, iteration: int, value: float):
        with self._lock:
            self.rows.append((routine, int(start), int(iteration), float(value)))

    def sorted_rows(self) -> List[Tuple[str, int, int, float]]:
        """Rows ordered by routine, start and iteration."""
        with self._lock:
            return sorted(self.rows, key=lambda row: (row[0], row[1], row[2]))

    def write_csv(self, path: str):
        """Write the trace as CSV with a header row."""
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(self.FIELDS)
            for routine, start, iteration, value in self.sorted_rows():
                writer.writerow([routine, start, iteration, repr(value)])
        logger.info(f"Wrote {len(self.rows)} trace rows to {path}")

    def __len__(self) -> int:
        return len(self.rows)


class StartResult(BaseModel):
    """Outcome of one start of a multistart search."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    start: int
    value: float
    point: np.ndarray
    iterations: int = 0
    converged: bool = False


class SearchResult(BaseModel):
    """Deterministic reduction of a multistart search."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    value: float
    point: np.ndarray
    best_start: int
    starts: int
    converged_starts: int
    values: List[float] = []
    points: List[np.ndarray] = []


def start_generators(cfg: OptimizerConfig, starts: Optional[int] = None) -> List[np.random.Generator]:
    """Independent PCG64 generators spawned from the master seed."""
    sequence = np.random.SeedSequence(cfg.seed)
    return [np.random.default_rng(child) for child in sequence.spawn(starts or cfg.starts)]


def run_multistart(routine: str, run_start: Callable[[int, np.random.Generator], StartResult],
                   cfg: OptimizerConfig, stop_below: Optional[float] = None,
                   maximize: bool = False) -> SearchResult:
    """Run independent starts and reduce them deterministically.

    Args:
        routine: Name used in logs and traces
        run_start: Callable (start index, generator) -> StartResult
        cfg: Optimizer configuration
        stop_below: Sequential mode only; stop once a start reaches a value
            below this (above it when maximizing)
        maximize: Reduce by maximum instead of minimum

    Returns:
        SearchResult of the best start, ties broken by lowest start index
    """
    generators = start_generators(cfg)
    results: List[StartResult] = []

    if cfg.max_workers > 1 and stop_below is None:
        with ThreadPoolExecutor(max_workers=cfg.max_workers) as executor:
            results = list(executor.map(lambda item: run_start(item[0], item[1]),
                                        enumerate(generators)))
    else:
        for index, rng in enumerate(generators):
            result = run_start(index, rng)
            results.append(result)
            logger.debug(f"{routine}: start {index} value {result.value:.12g} "
                         f"({result.iterations} iterations, converged={result.converged})")
            if stop_below is not None:
                reached = result.value > stop_below if maximize else result.value < stop_below
                if reached:
                    logger.debug(f"{routine}: stopping early after start {index}")
                    break

    sign = -1.0 if maximize else 1.0
    best = min(results, key=lambda r: (sign * r.value, r.start))
    converged = sum(1 for r in results if r.converged)
    logger.info(f"{routine}: best value {best.value:.12g} at start {best.start} "
                f"({len(results)} starts, {converged} converged)")
    return SearchResult(
        value=best.value,
        point=best.point,
        best_start=best.start,
        starts=len(results),
        converged_starts=converged,
        values=[r.value for r in results],
        points=[r.point for r in results],
    )


def _random_unit(rng: np.random.Generator, size: int) -> np.ndarray:
    vec = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return vec / np.linalg.norm(vec)


class _Best:
    """Keeps the best value ever evaluated within one start."""

    def __init__(self, sign: float = 1.0):
        self.sign = sign
        self.value = np.inf if sign > 0 else -np.inf
        self.point: Optional[np.ndarray] = None

    def offer(self, value: float, point: np.ndarray):
        if self.sign * value < self.sign * self.value:
            self.value = float(value)
            self.point = np.array(point, copy=True)


# Schmidt defect: min over unit c of sigma_{k+1}(A(B c))

def _matrix(basis: np.ndarray, c: np.ndarray, dims: BipartiteDims) -> np.ndarray:
    return (basis @ c).reshape(dims.d1, dims.d2)


def _tail_energy(basis: np.ndarray, c: np.ndarray, dims: BipartiteDims, k: int) -> Tuple[float, np.ndarray, float]:
    """Tail energy sum_{i>k} sigma_i^2, its gradient in c and sigma_{k+1}."""
    m = _matrix(basis, c, dims)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    residual = (u[:, k:] * s[k:]) @ vh[k:, :]
    grad = basis.conj().T @ (2.0 * residual).reshape(-1)
    return float(np.sum(s[k:] ** 2)), grad, float(s[k])


def _sigma_and_gradient(basis: np.ndarray, x: np.ndarray, dims: BipartiteDims, k: int) -> Tuple[float, np.ndarray, np.ndarray]:
    """sigma_{k+1} of A(B c) for c = z / |z| in real coordinates, and its gradient."""
    m_dim = basis.shape[1]
    norm = np.linalg.norm(x)
    z = x / norm
    c = z[:m_dim] + 1j * z[m_dim:]
    u, s, vh = np.linalg.svd(_matrix(basis, c, dims), full_matrices=False)
    # singular pair of sigma_{k+1}; ties resolved by the SVD ordering
    g = basis.conj().T @ np.outer(u[:, k], vh[k, :]).reshape(-1)
    grad_z = np.concatenate([g.real, g.imag])
    grad_x = (grad_z - np.dot(z, grad_z) * z) / norm
    return float(s[k]), grad_x, c


def defect_search(basis: np.ndarray, dims: BipartiteDims, k: int, cfg: OptimizerConfig,
                  trace: Optional[OptimizerTrace] = None,
                  stop_below: Optional[float] = None,
                  routine: str = "defect") -> SearchResult:
    """Minimize sigma_{k+1} over the unit sphere of span(basis columns).

    Each start runs a projected gradient descent with Armijo backtracking on the
    tail energy, then polishes sigma_{k+1} with L-BFGS-B. The returned point
    is the unit coefficient vector on the basis.
    """
    m_dim = basis.shape[1]
    target = cfg.defect_tol * 1e-3

    def run_start(index: int, rng: np.random.Generator) -> StartResult:
        best = _Best()
        c = _random_unit(rng, m_dim)
        if m_dim == 1:
            _, _, sigma = _tail_energy(basis, c, dims, k)
            return StartResult(start=index, value=sigma, point=c, converged=True)

        energy, grad, sigma = _tail_energy(basis, c, dims, k)
        best.offer(sigma, c)
        step = 1.0
        converged = False
        iteration = 0
        for iteration in range(1, cfg.max_iterations + 1):
            tangent = grad - np.real(np.vdot(c, grad)) * c
            slope = float(np.real(np.vdot(tangent, tangent)))
            if slope <= 1e-30 or sigma < target:
                converged = True
                break
            step = min(step * 2.0, 1e3)
            while True:
                trial = c - step * tangent
                trial = trial / np.linalg.norm(trial)
                trial_energy, trial_grad, trial_sigma = _tail_energy(basis, trial, dims, k)
                if trial_energy <= energy - 1e-4 * step * slope or step < 1e-16:
                    break
                step *= 0.5
            previous = energy
            c, energy, grad, sigma = trial, trial_energy, trial_grad, trial_sigma
            best.offer(sigma, c)
            if trace is not None:
                trace.record(routine, index, iteration, sigma)
            if previous - energy <= cfg.convergence_tol * max(previous, 1e-300):
                converged = True
                break

        if best.value > target:
            x0 = np.concatenate([best.point.real, best.point.imag])

            def objective(x: np.ndarray) -> Tuple[float, np.ndarray]:
                value, gradient, coeffs = _sigma_and_gradient(basis, x, dims, k)
                best.offer(value, coeffs)
                return value, gradient

            result = scipy.optimize.minimize(
                objective, x0, jac=True, method="L-BFGS-B",
                options={"maxiter": cfg.max_iterations, "ftol": cfg.convergence_tol, "gtol": 1e-12},
            )
            converged = converged or bool(result.success)
            iteration += int(result.nit)
            if trace is not None:
                trace.record(routine, index, iteration, best.value)

        return StartResult(start=index, value=best.value, point=best.point / np.linalg.norm(best.point),
                           iterations=iteration, converged=converged)

    return run_multistart(routine, run_start, cfg, stop_below=stop_below)


# Seesaw: min <psi|W|psi> over unit psi = sum_{i<=k} x_i (x) y_i

def _lift_from_right(y: np.ndarray, d1: int) -> np.ndarray:
    # psi = L vec(X) with Y fixed; isometric when Y has orthonormal columns
    d2, k = y.shape
    return np.einsum("ac,bi->abci", np.eye(d1), y).reshape(d1 * d2, d1 * k)


def _lift_from_left(x: np.ndarray, d2: int) -> np.ndarray:
    d1, k = x.shape
    return np.einsum("ai,bc->abci", x, np.eye(d2)).reshape(d1 * d2, d2 * k)


def _orthonormal_columns(m: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(m)
    # rank-deficient factors are refilled with random directions
    if np.min(np.abs(np.diag(r))) < 1e-12 * max(np.max(np.abs(r)), 1.0):
        fill = m + 1e-6 * (rng.standard_normal(m.shape) + 1j * rng.standard_normal(m.shape))
        q, _ = np.linalg.qr(fill)
    return q


def seesaw_min(w: np.ndarray, dims: BipartiteDims, k: int, cfg: OptimizerConfig,
               trace: Optional[OptimizerTrace] = None,
               stop_below: Optional[float] = None,
               routine: str = "seesaw") -> SearchResult:
    """Minimize <psi|W|psi> over unit vectors of Schmidt rank <= k.

    Alternately fixes the right and the left factor block and solves the
    smallest-eigenvalue problem of W compressed to the remaining block.
    Start 0 is warm-started from the rank-k truncation of the lowest
    eigenvector of W. The returned point is the flat vector psi.
    """
    d1, d2 = dims.d1, dims.d2
    eigenvalues, eigenvectors = np.linalg.eigh(w)
    if k >= d1:
        return SearchResult(value=float(eigenvalues[0]), point=eigenvectors[:, 0].copy(),
                            best_start=0, starts=1, converged_starts=1, values=[float(eigenvalues[0])])

    def run_start(index: int, rng: np.random.Generator) -> StartResult:
        if index == 0:
            _, _, vh = np.linalg.svd(eigenvectors[:, 0].reshape(d1, d2))
            y = vh[:k, :].T.copy()
        else:
            y = rng.standard_normal((d2, k)) + 1j * rng.standard_normal((d2, k))
        best = _Best()
        value = np.inf
        converged = False
        iteration = 0
        for iteration in range(1, cfg.max_iterations + 1):
            y = _orthonormal_columns(y, rng)
            lift = _lift_from_right(y, d1)
            vals, vecs = np.linalg.eigh(lift.conj().T @ w @ lift)
            x = vecs[:, 0].reshape(d1, k)
            x = _orthonormal_columns(x, rng)
            lift = _lift_from_left(x, d2)
            vals, vecs = np.linalg.eigh(lift.conj().T @ w @ lift)
            y = vecs[:, 0].reshape(d2, k)
            psi = lift @ vecs[:, 0]
            previous, value = value, float(vals[0])
            best.offer(value, psi)
            if trace is not None:
                trace.record(routine, index, iteration, value)
            if previous - value <= cfg.convergence_tol * max(1.0, abs(value)):
                converged = True
                break
        psi = best.point / np.linalg.norm(best.point)
        return StartResult(start=index, value=best.value, point=psi,
                           iterations=iteration, converged=converged)

    return run_multistart(routine, run_start, cfg, stop_below=stop_below)


# Largest product-state overlap of a subspace

def product_overlap_max(basis: np.ndarray, dims: BipartiteDims, cfg: OptimizerConfig,
                        trace: Optional[OptimizerTrace] = None,
                        routine: str = "sup_norm") -> SearchResult:
    """Maximize |<phi (x) chi|Phi>|^2 over unit product vectors and unit Phi in span(basis).

    Alternates Phi = normalized projection of the current product vector onto
    the subspace with (phi, chi) = top singular pair of A(Phi). The value is
    nondecreasing along each start. The returned point is the best Phi.
    """
    m_dim = basis.shape[1]
    top_norms = [np.linalg.norm(basis[:, i].reshape(dims.d1, dims.d2), 2) for i in range(m_dim)]
    warm = int(np.argmax(top_norms))

    def run_start(index: int, rng: np.random.Generator) -> StartResult:
        if index == 0:
            c = np.zeros(m_dim, dtype=complex)
            c[warm] = 1.0
        else:
            c = _random_unit(rng, m_dim)
        best = _Best(sign=-1.0)
        value = -np.inf
        converged = False
        iteration = 0
        for iteration in range(1, cfg.max_iterations + 1):
            phi = basis @ c
            u, s, vh = np.linalg.svd(phi.reshape(dims.d1, dims.d2))
            best.offer(float(s[0] ** 2), phi)
            product = np.kron(u[:, 0], vh[0, :])
            c = basis.conj().T @ product
            previous, value = value, float(np.real(np.vdot(c, c)))
            c = c / np.linalg.norm(c)
            if trace is not None:
                trace.record(routine, index, iteration, value)
            if m_dim == 1 or value - previous <= cfg.convergence_tol * max(1.0, value):
                converged = True
                break
        phi = basis @ c
        best.offer(float(np.linalg.norm(phi.reshape(dims.d1, dims.d2), 2) ** 2), phi)
        return StartResult(start=index, value=best.value, point=best.point,
                           iterations=iteration, converged=converged)

    return run_multistart(routine, run_start, cfg, maximize=True)
