"""
cusp-spectra command-line interface.

    cusp-spectra {bound|solve|verify|sweep|mesh-info} [--config FILE] [--key value ...]

Flags override values from the JSON config file. Exit status: 0 success,
2 invalid parameters, 3 empty window or feasible set, 4 numerical failure,
5 sweep without a feasible point, 1 anything else.
"""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from ._version import __version__
from .commands import run_command
from .config import COMMANDS, SOLVE_METHODS, RunConfig, load_config
from .validation import ConfigError, CuspSpectraError


class Colors:
    """ANSI color codes for terminal output."""

    RED = "\033[91m"
    GREEN = "\033[92m"
    YELLOW = "\033[93m"
    CYAN = "\033[96m"
    BOLD = "\033[1m"
    RESET = "\033[0m"

    enabled = True

    @classmethod
    def colorize(cls, text: str, color: str) -> str:
        """Apply color to text if the terminal supports it."""
        if cls.enabled and sys.stdout.isatty():
            return f"{color}{text}{cls.RESET}"
        return text

    @classmethod
    def error(cls, text: str) -> str:
        return cls.colorize(f"✗ {text}", cls.RED)

    @classmethod
    def success(cls, text: str) -> str:
        return cls.colorize(f"✓ {text}", cls.GREEN)

    @classmethod
    def header(cls, text: str) -> str:
        return cls.colorize(text, cls.BOLD + cls.CYAN)


# flag dest -> dotted config path
FLAG_PATHS: Dict[str, str] = {
    "gamma1": "domain.gamma1",
    "p": "problem.p",
    "q": "problem.q",
    "alpha": "problem.alpha",
    "N": "mesh.N",
    "kappa": "mesh.kappa",
    "tol": "solver.tol",
    "inner_tol": "solver.inner_tol",
    "kkt_tol": "solver.kkt_tol",
    "weak_tol": "solver.weak_tol",
    "max_outer": "solver.max_outer",
    "max_inner": "solver.max_inner",
    "seed": "solver.seed",
    "grid_a": "search.grid_a",
    "grid_s": "search.grid_s",
    "grid_r": "search.grid_r",
    "passes": "search.passes",
    "b_strategy": "poincare.strategy",
    "b_value": "poincare.value",
    "b_certified": "poincare.certified",
    "b_mesh": "poincare.N",
    "gamma1_grid": "sweep.gamma1",
    "p_grid": "sweep.p",
    "q_grid": "sweep.q",
    "alpha_grid": "sweep.alpha",
    "workers": "sweep.workers",
    "method": "method",
    "bound_method": "bound_method",
    "point": "point",
    "slack": "slack",
    "out": "out",
}


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON run config (flags override it)")
    common.add_argument("--out", metavar="DIR", help="Output directory (default: cusp-spectra-out)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    common.add_argument("--no-color", action="store_true", help="Disable colored output")

    geo = common.add_argument_group("domain and problem")
    geo.add_argument("--gamma1", type=float, help="Cusp exponent γ1 ≥ 1 (1 = reference triangle)")
    geo.add_argument("--p", type=float, help="Gradient exponent p > 1")
    geo.add_argument("--q", type=float, help="Lebesgue exponent q ∈ (1, p*)")
    geo.add_argument("--alpha", type=float, help="Weight power α of |x|^α")

    mesh = common.add_argument_group("mesh and solver")
    mesh.add_argument("--N", type=int, help="Mesh layers")
    mesh.add_argument("--kappa", type=float, help="Grading toward the tip (default max(1, γ1))")
    mesh.add_argument("--method", choices=SOLVE_METHODS, help="Eigensolver (default: auto)")
    mesh.add_argument("--tol", type=float, help="Outer tolerance on |Δμ|/μ")
    mesh.add_argument("--inner-tol", dest="inner_tol", type=float, help="Inner J-decrease tolerance")
    mesh.add_argument("--kkt-tol", dest="kkt_tol", type=float, help="Inner first-order residual tolerance")
    mesh.add_argument("--weak-tol", dest="weak_tol", type=float, help="Weak-form residual warning level")
    mesh.add_argument("--max-outer", dest="max_outer", type=int, help="Outer iteration budget")
    mesh.add_argument("--max-inner", dest="max_inner", type=int, help="Inner iteration budget")
    mesh.add_argument("--seed", type=int, help="Seed of the random starting function")

    bound = common.add_argument_group("bound")
    bound.add_argument("--grid-a", dest="grid_a", type=int, help="Search grid points in a")
    bound.add_argument("--grid-s", dest="grid_s", type=int, help="Search grid points in s")
    bound.add_argument("--grid-r", dest="grid_r", type=int, help="Search grid points in r")
    bound.add_argument("--passes", type=int, help="Golden-section refinement passes")
    bound.add_argument("--point", type=_float_list, metavar="A,S,R",
                       help="Evaluate at a fixed (a, s, r) instead of searching")
    bound.add_argument("--bound-method", dest="bound_method", choices=("closed_form", "quadrature"),
                       help="How K and M are evaluated")
    bound.add_argument("--b-strategy", dest="b_strategy",
                       choices=("user", "payne_weinberger", "numeric_lower"),
                       help="Poincaré constant provider")
    bound.add_argument("--b-value", dest="b_value", type=float, help="Value for --b-strategy user")
    bound.add_argument("--b-certified", dest="b_certified", action="store_const", const=True,
                       help="Mark a user B value as certified")
    bound.add_argument("--b-mesh", dest="b_mesh", type=int, help="Reference mesh layers for numeric_lower")
    bound.add_argument("--slack", type=float, help="Verify slack (default 0 certified, 0.1 otherwise)")

    sweep = common.add_argument_group("sweep")
    sweep.add_argument("--gamma1-grid", dest="gamma1_grid", type=_float_list, metavar="LIST")
    sweep.add_argument("--p-grid", dest="p_grid", type=_float_list, metavar="LIST")
    sweep.add_argument("--q-grid", dest="q_grid", type=_float_list, metavar="LIST")
    sweep.add_argument("--alpha-grid", dest="alpha_grid", type=_float_list, metavar="LIST")
    sweep.add_argument("--workers", type=int, help="Worker threads (capped by CUSP_SPECTRA_THREADS)")
    return common


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser with one subcommand per pipeline."""
    parser = argparse.ArgumentParser(
        prog="cusp-spectra",
        description=(
            "cusp-spectra - first nontrivial Neumann eigenvalue of the weighted\n"
            "p-Laplacian on outward Hölder cusps, with composition-operator bounds"
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  cusp-spectra bound --gamma1 2 --p 2 --q 2 --alpha 0
  cusp-spectra solve --gamma1 1 --p 2 --q 2 --alpha 0 --N 64
  cusp-spectra verify --gamma1 2 --p 2 --q 2 --alpha 0.5 --N 32
  cusp-spectra sweep --gamma1-grid 1.5,2,3 --alpha-grid -0.5,0,1 --N 16
  cusp-spectra mesh-info --gamma1 3 --N 16 --out runs/mesh
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _common_options()
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    helps = {
        "bound": "Optimize the upper bound on 1/λ",
        "solve": "Compute the first nontrivial eigenpair",
        "verify": "Solve, bound and compare",
        "sweep": "Run verify over a parameter grid (CSV)",
        "mesh-info": "Write a graded mesh and its quality metrics",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name],
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    """Config file (if any), then flags, then the subcommand name."""
    base = load_config(args.config) if args.config else RunConfig()
    overrides: Dict[str, Any] = {"command": args.command}
    for dest, path in FLAG_PATHS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[path] = value
    return base.with_overrides(overrides)


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point; returns the process exit status."""
    parser = create_parser()
    args = parser.parse_args(argv)
    if args.no_color:
        Colors.enabled = False
    _configure_logging(args.verbose)

    try:
        cfg = build_config(args)
        outcome = run_command(cfg)
    except ConfigError as exc:
        print(Colors.error(f"invalid configuration: {exc}"), file=sys.stderr)
        return exc.exit_code
    except CuspSpectraError as exc:
        print(Colors.error(str(exc)), file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(Colors.error(f"unexpected error: {exc}"), file=sys.stderr)
        return 1

    print(Colors.header(f"cusp-spectra {outcome.command}"))
    for line in outcome.summary:
        print(f"  {line}")
    for path in outcome.paths:
        print(Colors.success(f"wrote {path}"))
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
