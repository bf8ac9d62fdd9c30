"""
Command pipelines behind the CLI: bound, solve, verify, sweep and mesh-info.

Each command validates its parameters before computing anything, writes its
primary result atomically under ``cfg.out`` and finishes with a
``manifest.json``. Nothing is printed here; ``CommandOutcome.summary`` holds
the human-readable lines the CLI shows and stores as ``summary.txt``.
"""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

from ._version import __version__
from .artifacts import RunManifest, atomic_write_csv, atomic_write_json, atomic_write_text
from .bounds import (
    NUMERIC_LOWER,
    USER,
    BoundParams,
    BoundReport,
    PoincareProvider,
    eigen_bound,
    optimize_bound,
    resolve_provider,
)
from .config import RunConfig, worker_count
from .eigensolver import (
    DiscreteProblem,
    EigenResult,
    direct_eigensolve_p2,
    inverse_iteration,
    rayleigh_descent,
)
from .mesh import (
    QuadratureRule,
    area_gap,
    boundary_edges,
    cached_cusp_mesh,
    diameter,
    mesh_quality,
    write_mesh,
    write_nodal_values,
)
from .params import (
    DomainSpec,
    ValidatedProblem,
    admit_discrete_problem,
    describe,
    transfer_window,
    validate_problem,
)
from .profiling import StageProfiler
from .validation import (
    CalculationError,
    CuspSpectraError,
    EmptyFeasibleSet,
    EmptyWindow,
    NoFeasiblePoint,
    ValidationError,
)

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "gamma1", "p", "q", "alpha", "N", "lambda", "inv_lambda_bound", "ratio", "certified", "status",
)
UNCERTIFIED_SLACK = 0.1
STATUS_OK = "ok"
STATUS_INFEASIBLE = "infeasible"
STATUS_NONCONVERGED = "nonconverged"


@dataclass
class CommandOutcome:
    """What a command produced: its result object, files and summary lines."""

    command: str
    result: Any
    paths: List[Path] = field(default_factory=list)
    summary: List[str] = field(default_factory=list)
    exit_code: int = 0


class _Run:
    """Manifest, profiler and output directory of one command invocation."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.profiler = StageProfiler()
        self.manifest = RunManifest(command=cfg.command, config=cfg.to_dict(), tool_version=__version__)
        self.paths: List[Path] = []

    def stage(self, name: str) -> Any:
        return self.profiler.profile_block(name)

    def write_json(self, name: str, obj: Any) -> Path:
        return self.record(atomic_write_json(self.out / name, obj))

    def write_text(self, name: str, text: str) -> Path:
        return self.record(atomic_write_text(self.out / name, text))

    def record(self, path: Path) -> Path:
        self.paths.append(path)
        self.manifest.add_result(path)
        return path

    def finish(self, status: str = "ok") -> Path:
        self.manifest.timings = self.profiler.timings()
        self.manifest.finish(status)
        return self.manifest.write(self.out)


def _guarded(command: Callable[[RunConfig, _Run], CommandOutcome]) -> Callable[[RunConfig], CommandOutcome]:
    """Finish the manifest whether the command succeeds or raises."""

    def run(cfg: RunConfig) -> CommandOutcome:
        handle = _Run(cfg)
        try:
            outcome = command(cfg, handle)
        except CuspSpectraError as exc:
            handle.finish(f"failed:{exc.error_code}")
            raise
        handle.write_text("summary.txt", "\n".join(outcome.summary) + "\n")
        outcome.paths = list(handle.paths) + [handle.finish()]
        return outcome

    run.__name__ = command.__name__
    run.__doc__ = command.__doc__
    return run


def _spec(cfg: RunConfig) -> DomainSpec:
    return DomainSpec.planar(cfg.domain.gamma1)


def _problem_for_bound(cfg: RunConfig) -> Tuple[DomainSpec, ValidatedProblem]:
    spec = _spec(cfg)
    pc = cfg.problem
    return spec, validate_problem(spec, pc.p, pc.q, pc.alpha)


def _problem_for_solve(cfg: RunConfig) -> Tuple[DomainSpec, ValidatedProblem]:
    spec = _spec(cfg)
    pc = cfg.problem
    return spec, admit_discrete_problem(spec, pc.p, pc.q, pc.alpha)


def compute_bound(cfg: RunConfig, spec: DomainSpec, problem: ValidatedProblem) -> BoundReport:
    """Evaluate the bound at ``cfg.point`` or at the searched optimum."""
    transfer_window(problem, spec)
    if cfg.point is not None:
        bp = BoundParams(*cfg.point)
        search_info: Dict[str, Any] = {"fixed_point": True}
    else:
        # B only scales the objective; the real provider is resolved at the optimum
        unit = PoincareProvider(USER, 1.0, False)
        found = optimize_bound(problem, spec, unit, cfg.search)
        bp, search_info = found.params, found.search
    provider = resolve_provider(cfg.poincare, bp.r, bp.s)
    report = eigen_bound(problem, spec, bp, provider, cfg.bound_method, cfg.quadrature)
    report.search = search_info
    if cfg.point is None and cfg.poincare.strategy == NUMERIC_LOWER:
        report.notes.append(
            "(a, s, r) minimizes K^p·M^p only; the numeric B_{r,s} varies with (r, s) "
            "and was evaluated at the chosen point, so the product may not be minimal"
        )
    return report


def compute_eigenpair(cfg: RunConfig, spec: DomainSpec, problem: ValidatedProblem) -> EigenResult:
    """Assemble on the cached mesh and run the configured solver."""
    mesh = cached_cusp_mesh(spec.gamma1, cfg.mesh.N, cfg.mesh.kappa)
    dp = DiscreteProblem.assemble(mesh, problem, QuadratureRule.of_order(cfg.solver.quad_order))
    method = cfg.method
    if method == "auto":
        method = "inverse_iteration" if problem.q == 2.0 else "rayleigh_descent"
    if method == "inverse_iteration":
        return inverse_iteration(dp, cfg=cfg.solver)
    if method == "rayleigh_descent":
        return rayleigh_descent(dp, cfg=cfg.solver)
    return direct_eigensolve_p2(dp)


def _bound_lines(report: BoundReport) -> List[str]:
    bp = report.params
    lines = [
        describe(report.problem, report.spec, transfer_window(report.problem, report.spec)),
        f"(a, s, r) = ({bp.a:.10g}, {bp.s:.10g}, {bp.r:.10g})",
        f"K_ps = {report.k_ps:.10g}   M_rq = {report.m_rq:.10g}   B_rs = {report.b_rs:.10g}",
        f"1/λ ≤ {report.inv_lambda_bound:.10g}   (λ ≥ {report.lambda_lower_bound:.10g})",
        f"B provider: {report.provider.strategy}, certified={str(report.certified).lower()}",
    ]
    lines.extend(f"note: {n}" for n in report.notes)
    return lines


def _eigen_lines(result: EigenResult) -> List[str]:
    mesh = result.u.mesh
    return [
        f"mesh: γ1={mesh.gamma1:g} N={mesh.N} κ={mesh.kappa:g} ({mesh.n_vertices} vertices)",
        f"problem: p={result.problem.p:g} q={result.problem.q:g} α={result.problem.alpha:g}",
        f"λ = {result.lam:.12g}   [{result.method}, {result.iterations} iterations]",
        f"weak residual = {result.residual:.3e}   constraint residual = {result.constraint_residual:.3e}",
    ]


def _write_eigen_files(run: _Run, result: EigenResult) -> None:
    run.record(write_mesh(result.u.mesh, run.out / "mesh.txt"))
    run.record(write_nodal_values(result.u.values, run.out / "eigenfunction.txt"))


def _bound(cfg: RunConfig, run: _Run) -> CommandOutcome:
    """Optimize the bound on 1/λ and write it as result.json."""
    with run.stage("validate"):
        spec, problem = _problem_for_bound(cfg)
    with run.stage("bound"):
        report = compute_bound(cfg, spec, problem)
    run.write_json("result.json", report.to_dict())
    return CommandOutcome("bound", report, summary=_bound_lines(report))


def _solve(cfg: RunConfig, run: _Run) -> CommandOutcome:
    """Compute the first nontrivial eigenpair; writes result.json, mesh and eigenfunction."""
    with run.stage("validate"):
        spec, problem = _problem_for_solve(cfg)
    with run.stage("solve"):
        result = compute_eigenpair(cfg, spec, problem)
    run.write_json("result.json", result.to_dict())
    _write_eigen_files(run, result)
    return CommandOutcome("solve", result, summary=_eigen_lines(result))


@dataclass
class VerifyReport:
    lambda_numeric: float
    lambda_lower_bound: float
    inv_lambda_bound: float
    ratio: float
    certified: bool
    slack: float
    holds: bool
    eigen: EigenResult
    bound: BoundReport
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda_numeric": self.lambda_numeric,
            "lambda_lower_bound": self.lambda_lower_bound,
            "inv_lambda_bound": self.inv_lambda_bound,
            "ratio": self.ratio,
            "certified": self.certified,
            "slack": self.slack,
            "holds": self.holds,
            "notes": list(self.notes),
            "eigen": self.eigen.to_dict(),
            "bound": self.bound.to_dict(),
        }


def verify_report(cfg: RunConfig, eigen: EigenResult, bound: BoundReport) -> VerifyReport:
    """Compare λ_numeric with the bound; ratio = λ_numeric · (bound on 1/λ)."""
    slack = cfg.slack if cfg.slack is not None else (0.0 if bound.certified else UNCERTIFIED_SLACK)
    ratio = eigen.lam * bound.inv_lambda_bound
    notes = list(bound.notes)
    if not bound.certified and "non-certified B estimate; informational only" not in notes:
        notes.append("non-certified B estimate; informational only")
    return VerifyReport(
        lambda_numeric=eigen.lam,
        lambda_lower_bound=bound.lambda_lower_bound,
        inv_lambda_bound=bound.inv_lambda_bound,
        ratio=ratio,
        certified=bound.certified,
        slack=slack,
        holds=ratio >= 1.0 - slack,
        eigen=eigen,
        bound=bound,
        notes=notes,
    )


def _verify(cfg: RunConfig, run: _Run) -> CommandOutcome:
    """Run solve and bound on one configuration and check λ·bound ≥ 1 − slack."""
    with run.stage("validate"):
        spec, problem = _problem_for_bound(cfg)
    with run.stage("solve"):
        eigen = compute_eigenpair(cfg, spec, problem)
    with run.stage("bound"):
        bound = compute_bound(cfg, spec, problem)
    report = verify_report(cfg, eigen, bound)
    run.write_json("result.json", report.to_dict())
    _write_eigen_files(run, eigen)
    lines = _eigen_lines(eigen) + _bound_lines(bound) + [
        f"ratio λ·bound = {report.ratio:.10g}   slack = {report.slack:g}   "
        f"holds = {str(report.holds).lower()}",
    ]
    return CommandOutcome("verify", report, summary=lines)


def sweep_points(cfg: RunConfig) -> Iterator[Tuple[float, float, float, float]]:
    """Grid points in lexicographic (gamma1, p, q, alpha) order."""
    sw = cfg.sweep
    grids = (
        sw.gamma1 or (cfg.domain.gamma1,),
        sw.p or (cfg.problem.p,),
        sw.q or (cfg.problem.q,),
        sw.alpha or (cfg.problem.alpha,),
    )
    return itertools.product(*grids)


def sweep_row(cfg: RunConfig, point: Tuple[float, float, float, float]) -> Tuple[Any, ...]:
    """One CSV row; infeasible and nonconverged points are recorded, not raised."""
    gamma1, p, q, alpha = point
    sub = replace(
        cfg,
        command="verify",
        domain=replace(cfg.domain, gamma1=gamma1),
        problem=replace(cfg.problem, p=p, q=q, alpha=alpha),
    )
    lam: Optional[float] = None
    inv: Optional[float] = None
    ratio: Optional[float] = None
    certified: Optional[bool] = None
    try:
        spec, problem = _problem_for_bound(sub)
        transfer_window(problem, spec)
        bound = compute_bound(sub, spec, problem)
        inv, certified = bound.inv_lambda_bound, bound.certified
        eigen = compute_eigenpair(sub, spec, problem)
        lam = eigen.lam
        ratio = lam * inv
        status = STATUS_OK
    except (ValidationError, EmptyWindow, EmptyFeasibleSet) as exc:
        logger.info("sweep point %s infeasible: %s", point, exc.message)
        status = STATUS_INFEASIBLE
    except CalculationError as exc:
        logger.warning("sweep point %s did not converge: %s", point, exc.message)
        status = STATUS_NONCONVERGED
    return (gamma1, p, q, alpha, cfg.mesh.N, lam, inv, ratio, certified, status)


def _sweep(cfg: RunConfig, run: _Run) -> CommandOutcome:
    """Evaluate the verify pipeline over a parameter grid and write result.csv."""
    points = list(sweep_points(cfg))
    workers = min(worker_count(cfg.sweep.workers), len(points))
    with run.stage("sweep"):
        # map() keeps submission order, so the CSV never depends on scheduling
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda pt: sweep_row(cfg, pt), points))
    statuses = [row[-1] for row in rows]
    if all(s == STATUS_INFEASIBLE for s in statuses):
        raise NoFeasiblePoint(
            f"all {len(rows)} sweep points are infeasible",
            error_code="NO_FEASIBLE_POINT",
            suggestions=["Widen the alpha grid or use sharper cusps (larger gamma1)"],
        )
    path = atomic_write_csv(run.out / "result.csv", CSV_COLUMNS, rows)
    run.record(path)
    counts = {s: statuses.count(s) for s in (STATUS_OK, STATUS_INFEASIBLE, STATUS_NONCONVERGED)}
    lines = [
        f"{len(rows)} grid points on {workers} worker(s): "
        + ", ".join(f"{k}={v}" for k, v in counts.items()),
    ]
    ratios = [row[7] for row in rows if row[7] is not None]
    if ratios:
        lines.append(f"min ratio λ·bound = {min(ratios):.10g}")
    return CommandOutcome("sweep", rows, summary=lines)


def _mesh_info(cfg: RunConfig, run: _Run) -> CommandOutcome:
    """Write mesh.txt with quality metrics and the polygon-area gap."""
    with run.stage("mesh"):
        mesh = cached_cusp_mesh(cfg.domain.gamma1, cfg.mesh.N, cfg.mesh.kappa)
        quality = mesh_quality(mesh)
        info = {
            "mesh": mesh.describe(),
            "vertices": mesh.n_vertices,
            "triangles": mesh.n_triangles,
            "boundary_edges": int(len(boundary_edges(mesh))),
            "polygon_area": mesh.polygon_area,
            "true_area": mesh.true_area,
            "area_gap": area_gap(mesh),
            "diameter": diameter(mesh),
            "quality": quality.to_dict(),
        }
    run.record(write_mesh(mesh, run.out / "mesh.txt"))
    run.write_json("result.json", info)
    lines = [
        f"γ1={mesh.gamma1:g} N={mesh.N} κ={mesh.kappa:g}: "
        f"{mesh.n_vertices} vertices, {mesh.n_triangles} triangles",
        f"area {info['polygon_area']:.12g} (exact {mesh.true_area:.12g}, gap {info['area_gap']:.3e})",
        f"min angle {quality.min_angle:.4g}°, max aspect {quality.max_aspect:.4g}, "
        f"h ∈ [{quality.h_min:.3e}, {quality.h_max:.3e}]",
    ]
    if not math.isclose(mesh.polygon_area, mesh.true_area, rel_tol=0, abs_tol=1e-10):
        lines.append("note: polygonal area differs from 1/(γ1+1) on the curved side")
    return CommandOutcome("mesh-info", info, summary=lines)


cmd_bound = _guarded(_bound)
cmd_solve = _guarded(_solve)
cmd_verify = _guarded(_verify)
cmd_sweep = _guarded(_sweep)
cmd_mesh_info = _guarded(_mesh_info)

COMMAND_TABLE: Dict[str, Callable[[RunConfig], CommandOutcome]] = {
    "bound": cmd_bound,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "mesh-info": cmd_mesh_info,
}


def run_command(cfg: RunConfig) -> CommandOutcome:
    return COMMAND_TABLE[cfg.command](cfg)
