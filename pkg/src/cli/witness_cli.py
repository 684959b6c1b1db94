#!/usr/bin/env python
"""
Witness Command Line Interface

This script exposes the witness toolkit on the command line: Schmidt
decompositions, witness checks and construction, projector witnesses, the
subspace sup norm, V_max subspaces, subspace certification, the
observable/map translation and the two-qubit signature experiment.

Inputs and outputs are MatrixDocument JSON files. Reports go to standard
output, logs to standard error. Exit codes: 0 holds, 1 violated,
2 input error, 3 inconclusive.
"""

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Tuple

# Add parent directory to path
parent_dir = str(Path(__file__).resolve().parent.parent.parent)
if parent_dir not in sys.path:
    sys.path.insert(0, parent_dir)

from pydantic import BaseModel, ConfigDict, Field

from src.config.config import ConfigManager
from src.core.bipartite import BipartiteDims, Subspace, orthogonal_complement
from src.core.bipartite import schmidt as schmidt_decomposition
from src.core.detection import two_qubit_signature_experiment
from src.core.errors import DocumentError, OptimizerInconclusiveError, WitnessHypothesisError
from src.core.map_bridge import to_map, to_witness
from src.core.optimization import OptimizerConfig, OptimizerTrace
from src.core.subspace_lab import contains_ksep, vmax_subspace
from src.core.witness_engine import (
    build_witness,
    epsilon_min,
    is_k_witness,
    projector_witness,
    spectral_split,
)
from src.utils.documents import (
    load_document,
    map_document,
    observable_document,
    subspace_document,
    to_herm_map,
    to_observable,
    to_subspace,
    to_vector,
)

logger = logging.getLogger("schmidtwit-cli")

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_INPUT = 2
EXIT_INCONCLUSIVE = 3

CommandOutcome = Tuple[Dict[str, Any], int]


class RunConfig(BaseModel):
    """Per-invocation settings; command-line flags override configured values."""
    model_config = ConfigDict(frozen=True)

    k: int = Field(default=1, ge=1)
    tol: float = Field(default=1e-9, gt=0, description="Rank cutoff and zero-eigenvalue band")
    witness_tol: float = Field(default=1e-7, gt=0)
    defect_tol: float = Field(default=1e-6, gt=0)
    seed: int = Field(default=42, ge=0)
    starts: int = Field(default=32, ge=1)
    max_iterations: int = Field(default=500, ge=1)
    report_format: Literal["json", "text"] = "json"

    @classmethod
    def from_config(cls, manager: ConfigManager) -> "RunConfig":
        return cls(
            k=manager.get("run.k", 1),
            tol=manager.get("optimizer.zero_tol", 1e-9),
            witness_tol=manager.get("optimizer.witness_tol", 1e-7),
            defect_tol=manager.get("optimizer.defect_tol", 1e-6),
            seed=manager.get("optimizer.seed", 42),
            starts=manager.get("optimizer.starts", 32),
            max_iterations=manager.get("optimizer.max_iterations", 500),
            report_format=manager.get("run.report_format", "json"),
        )

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        values = self.model_dump()
        values.update({key: value for key, value in overrides.items() if value is not None})
        return RunConfig(**values)

    def optimizer(self, base: OptimizerConfig) -> OptimizerConfig:
        """Optimizer settings with this run's seed, budget and tolerances."""
        return base.with_overrides(
            seed=self.seed,
            starts=self.starts,
            max_iterations=self.max_iterations,
            witness_tol=self.witness_tol,
            defect_tol=self.defect_tol,
            zero_tol=self.tol,
        )


class WitnessCLI:
    """Command handlers; each returns (result, exit code)."""

    def __init__(self, run: RunConfig, optimizer: OptimizerConfig,
                 trace: Optional[OptimizerTrace] = None, normalized: bool = False,
                 experiment: Optional[Dict[str, Any]] = None):
        """Initialize the CLI.

        Args:
            run: Run settings
            optimizer: Optimizer settings
            trace: Optional optimizer trace collector
            normalized: Use the unit-norm Psi+ convention for maps
            experiment: The `experiment` configuration section
        """
        self.run = run
        self.optimizer = optimizer
        self.trace = trace
        self.normalized = normalized
        self.experiment_config = experiment or {}

    def schmidt(self, path: str) -> CommandOutcome:
        """Schmidt coefficients and rank of a vector document."""
        psi = to_vector(load_document(path))
        data = schmidt_decomposition(psi, self.run.tol)
        return {
            "rank": data.rank,
            "coefficients": [float(c) for c in data.coefficients],
            "left_vectors": [vector_document_data(v) for v in data.left_vectors],
            "right_vectors": [vector_document_data(v) for v in data.right_vectors],
        }, EXIT_OK

    def witness_check(self, path: str) -> CommandOutcome:
        """Certify an observable document as a k-Schmidt witness."""
        doc = load_document(path)
        w = to_observable(doc)
        report = is_k_witness(w, doc.bipartite_dims, self.run.k, self.optimizer, trace=self.trace)
        result = report.to_dict()
        if report.is_witness and report.converged_starts == 0:
            result["reason"] = "no optimizer start converged"
            return result, EXIT_INCONCLUSIVE
        return result, EXIT_OK if report.is_witness else EXIT_VIOLATED

    def witness_build(self, path: str) -> CommandOutcome:
        """Scale the positive part of a spectral split until it is a witness.

        An observable document supplies its own split; a subspace document is
        taken as V_minus with projector parts and an empty kernel.
        """
        doc = load_document(path)
        dims = doc.bipartite_dims
        if doc.kind == "observable":
            split = spectral_split(to_observable(doc), dims, self.run.tol)
            parts = (split.v_plus, split.v_zero, split.v_minus, split.w_plus, split.w_minus)
        elif doc.kind == "subspace":
            v_minus = to_subspace(doc)
            v_plus = orthogonal_complement(v_minus)
            parts = (v_plus, Subspace.zero(dims), v_minus, v_plus.projector(), v_minus.projector())
        else:
            raise DocumentError(f"witness-build expects an observable or subspace document, got {doc.kind}")
        try:
            lambda_star, w = build_witness(*parts, k=self.run.k, cfg=self.optimizer, trace=self.trace)
        except WitnessHypothesisError as e:
            result: Dict[str, Any] = {"built": False, "condition": e.condition, "reason": str(e)}
            if e.counterexample is not None:
                result["counterexample"] = e.counterexample.to_dict()
            return result, EXIT_VIOLATED
        return {
            "built": True,
            "lambda_star": lambda_star,
            "witness": observable_document(w, dims).model_dump(),
        }, EXIT_OK

    def projector(self, path: str, epsilon: float) -> CommandOutcome:
        """The observable epsilon*I - P_V and its witness verdict."""
        v = to_subspace(load_document(path))
        w = projector_witness(v, epsilon)
        report = is_k_witness(w, v.ambient_dims, self.run.k, self.optimizer, trace=self.trace,
                              with_conditions=False)
        return {
            "epsilon": epsilon,
            "is_witness": report.is_witness,
            "min_over_sk": report.min_over_sk,
            "violating_vector": report.violating_vector.to_dict() if report.violating_vector else None,
            "witness": observable_document(w, v.ambient_dims).model_dump(),
        }, EXIT_OK if report.is_witness else EXIT_VIOLATED

    def epsmin(self, path: str) -> CommandOutcome:
        """Squared sup norm of a subspace document."""
        v = to_subspace(load_document(path))
        value = epsilon_min(v, self.optimizer, trace=self.trace)
        return {"epsilon_min": value, "dimension": v.dim}, EXIT_OK

    def vmax(self, d1: int, d2: int) -> CommandOutcome:
        """Subspace document of V_max^k."""
        v = vmax_subspace(BipartiteDims(d1=d1, d2=d2), self.run.k)
        doc = subspace_document(v, meta={"k": str(self.run.k), "dimension": str(v.dim)})
        return doc.model_dump(), EXIT_OK

    def subspace_certify(self, path: str) -> CommandOutcome:
        """Exit 0 when no vector of Schmidt rank <= k is found in the subspace."""
        v = to_subspace(load_document(path))
        result = contains_ksep(v, self.run.k, self.optimizer, trace=self.trace)
        return {
            "found": result.found,
            "defect": result.defect,
            "starts": result.starts,
            "vector": result.vector.to_dict() if result.vector else None,
        }, EXIT_VIOLATED if result.found else EXIT_OK

    def map(self, path: str) -> CommandOutcome:
        """Observable -> Kraus-Choi map document, or map document -> observable."""
        doc = load_document(path)
        if doc.kind == "observable":
            lam = to_map(to_observable(doc), doc.bipartite_dims, self.run.tol, normalized=self.normalized)
            p, q = lam.signature
            return map_document(lam, meta={"signature": f"{p},{q}"}).model_dump(), EXIT_OK
        if doc.kind == "map":
            lam = to_herm_map(doc)
            return observable_document(to_witness(lam), lam.dims).model_dump(), EXIT_OK
        raise DocumentError(f"map expects an observable or map document, got {doc.kind}")

    def experiment(self, name: str, trials: Optional[int]) -> CommandOutcome:
        """Run a named experiment."""
        if name != "two-qubit-signature":
            raise ValueError(f"unknown experiment: {name}")
        report = two_qubit_signature_experiment(
            trials or int(self.experiment_config.get("trials", 500)),
            seed=self.optimizer.seed,
            tol=self.run.tol,
            rejection_threshold=float(self.experiment_config.get("rejection_threshold", 1e-3)),
            max_workers=self.optimizer.max_workers,
        )
        return report.to_dict(), EXIT_VIOLATED if report.failures else EXIT_OK

    def dispatch(self, args: argparse.Namespace) -> CommandOutcome:
        if args.command == "schmidt":
            return self.schmidt(args.input)
        if args.command == "witness-check":
            return self.witness_check(args.input)
        if args.command == "witness-build":
            return self.witness_build(args.input)
        if args.command == "projector":
            return self.projector(args.input, args.epsilon)
        if args.command == "epsmin":
            return self.epsmin(args.input)
        if args.command == "vmax":
            return self.vmax(*args.dims)
        if args.command == "subspace-certify":
            return self.subspace_certify(args.input)
        if args.command == "map":
            return self.map(args.input)
        if args.command == "experiment":
            return self.experiment(args.name, args.trials)
        raise ValueError(f"unknown command: {args.command}")


def vector_document_data(vector) -> Any:
    return [[float(z.real), float(z.imag)] for z in vector]


def format_text(command: str, report: Dict[str, Any]) -> str:
    """Human-readable report."""
    result = report["result"]
    if command == "schmidt":
        return f"rank: {result['rank']}, coefficients: {result['coefficients']}"
    lines = [f"command: {command}", f"exit_code: {report['exit_code']}"]
    for key, value in result.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(value)
        lines.append(f"{key}: {value}")
    return "\n".join(lines)


def build_report(command: str, result: Dict[str, Any], code: int, run: RunConfig) -> Dict[str, Any]:
    return {
        "command": command,
        "exit_code": code,
        "result": result,
        "meta": {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "seed": str(run.seed),
            "starts": str(run.starts),
            "k": str(run.k),
        },
    }


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--k", type=int, help="Schmidt rank bound (default from config: 1)")
    common.add_argument("--tol", type=float, help="Rank cutoff and zero-eigenvalue band")
    common.add_argument("--witness-tol", type=float, help="Slack on positivity over S_k")
    common.add_argument("--defect-tol", type=float, help="Defect below which a vector counts as rank <= k")
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument("--starts", type=int, help="Optimizer starts")
    common.add_argument("--max-iter", type=int, help="Iterations per start")
    common.add_argument("--report", choices=["json", "text"], help="Report format")
    common.add_argument("--trace-out", help="Write optimizer traces as CSV to this path")
    common.add_argument("--normalized", action="store_true", help="Unit-norm Psi+ convention for maps")
    common.add_argument("--config", help="Configuration file (JSON)")

    parser = argparse.ArgumentParser(description="k-Schmidt witness toolkit")
    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    for name, help_text in (
        ("schmidt", "Schmidt decomposition of a vector"),
        ("witness-check", "Certify an observable as a k-Schmidt witness"),
        ("witness-build", "Build a witness by scaling the positive part"),
        ("epsmin", "Squared sup norm of a subspace"),
        ("subspace-certify", "Search a subspace for a vector of Schmidt rank <= k"),
        ("map", "Translate between observables and Kraus-Choi maps"),
    ):
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        sub.add_argument("input", help="Input MatrixDocument (JSON)")

    projector_parser = subparsers.add_parser("projector", parents=[common],
                                             help="Projector witness epsilon*I - P_V")
    projector_parser.add_argument("input", help="Subspace document")
    projector_parser.add_argument("--epsilon", type=float, required=True, help="Value in (0, 1)")

    vmax_parser = subparsers.add_parser("vmax", parents=[common], help="V_max^k subspace document")
    vmax_parser.add_argument("--dims", type=int, nargs=2, required=True, metavar=("D1", "D2"))

    experiment_parser = subparsers.add_parser("experiment", parents=[common], help="Run an experiment")
    experiment_parser.add_argument("name", choices=["two-qubit-signature"])
    experiment_parser.add_argument("--trials", type=int, help="Number of trials (default from config: 500)")
    return parser


def main(argv: Optional[list] = None) -> int:
    """Main entry point for the CLI."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_INPUT

    manager = ConfigManager(args.config) if args.config else ConfigManager()
    logging.basicConfig(
        level=getattr(logging, str(manager.get("logging.level", "INFO")).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )

    try:
        run = RunConfig.from_config(manager).with_overrides(
            k=args.k, tol=args.tol, witness_tol=args.witness_tol, defect_tol=args.defect_tol,
            seed=args.seed, starts=args.starts, max_iterations=args.max_iter,
            report_format=args.report,
        )
        optimizer = run.optimizer(OptimizerConfig.from_config(manager))
        trace = OptimizerTrace() if args.trace_out else None
        cli = WitnessCLI(run, optimizer, trace=trace, normalized=args.normalized,
                         experiment=manager.get("experiment", {}))
        result, code = cli.dispatch(args)
    except DocumentError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OptimizerInconclusiveError as e:
        logger.error(str(e))
        print(f"inconclusive: {e}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except ValueError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT

    report = build_report(args.command, result, code, run)
    if run.report_format == "text":
        print(format_text(args.command, report))
    else:
        print(json.dumps(report, indent=2))

    if trace is not None:
        trace.write_csv(args.trace_out)
    return code


if __name__ == "__main__":
    sys.exit(main())
