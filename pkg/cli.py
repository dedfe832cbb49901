import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

load_dotenv()

import pandas as pd

from config.settings import settings
from src.config import MongeContext, RunConfig, load_run_config
from src.exceptions import (
    CertificationError,
    MongeError,
    RestrictionError,
    SubcriticalError,
    SupercriticalityViolatedError,
    ToleranceError,
)
from src.utils.exports import (
    load_potential,
    load_selection,
    map_frame,
    potential_frame,
    write_csv,
    write_json,
)
from src.workflow import MongeWorkflow

logger = logging.getLogger("monge.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CERTIFICATION = 2

# mathematical failures; everything else a command raises is a usage/config/IO error
CERTIFICATION_ERRORS = (
    CertificationError,
    SupercriticalityViolatedError,
    SubcriticalError,
    RestrictionError,
    ToleranceError,
)


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors on exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"❌ Error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def configure_logging(out_dir: Optional[Path] = None):
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if settings.LOG_FILE and out_dir is not None:
        handlers.append(logging.FileHandler(settings.ensure_out_dir(out_dir) / settings.LOG_FILE))
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def parse_sources(text: str) -> Optional[List[int]]:
    """'all' or a comma-separated node list."""
    if text.strip().lower() == "all":
        return None
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--sources expects 'all' or integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(description="Monge maps for Finsler and Mañé transport costs")
    parser.add_argument("--config", type=Path, default=None,
                        help=f"Run TOML file (default: {settings.DEFAULT_CONFIG})")
    parser.add_argument("--seed", type=int, default=None, help="Override the config seed")
    parser.add_argument("--out-dir", type=Path, default=None,
                        help="Output directory (default: config output.dir, then MONGE_OUT_DIR)")
    parser.add_argument("--threads", type=int, default=None, help="Workers for cost rows")

    commands = parser.add_subparsers(dest="command", required=True)

    cost = commands.add_parser("cost", help="Cost rows and the critical value")
    cost.add_argument("--sources", type=parse_sources, default=None,
                      help="'all' or comma-separated source nodes (default: all)")
    cost.add_argument("--out", type=Path, default=None, help="Cost CSV path (default: <out-dir>/costs.csv)")
    cost.add_argument("--critical", action="store_true", help="Bracket the critical value instead")
    cost.add_argument("--k-lo", type=float, default=None, help="Lower end of the k bracket")
    cost.add_argument("--k-hi", type=float, default=None, help="Upper end of the k bracket")
    cost.add_argument("--tol", type=float, default=None, help="Bracket width to reach")

    solve = commands.add_parser("solve", help="Optimal plan, potential and the σ-selected map")
    solve.add_argument("--primary-only", action="store_true", help="Stop after the cost-optimal plan")

    rays = commands.add_parser("rays", help="Transport rays of a potential")
    rays.add_argument("--potential", type=Path, default=None,
                      help="Potential CSV from 'solve' (default: solve first and audit)")
    rays.add_argument("--epsilon", type=float, default=None, help="Interior margin of T_ε")
    rays.add_argument("--out", type=Path, default=None, help="Rays JSON path (default: <out-dir>/rays.json)")

    oracle = commands.add_parser("oracle", help="Compare the solver with brute force on tiny instances")
    oracle.add_argument("--n", type=int, default=None, help="Atoms per side (default: cycle through 2..7)")
    oracle.add_argument("--seeds", type=int, default=settings.ORACLE_SEEDS, help="Number of seeded instances")
    oracle.add_argument("--mode", choices=["synthetic", "sliced"], default="synthetic",
                        help="Random digraph metric or slices of a Randers torus")

    commands.add_parser("verify", help="Run the acceptance checks")

    export = commands.add_parser("export", help="Re-export a selection JSON as map and plan CSV")
    export.add_argument("input", type=Path, help="selection.json written by 'solve'")
    return parser


class MongeCLI:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config: Optional[RunConfig] = None
        self.context: Optional[MongeContext] = None
        self.workflow: Optional[MongeWorkflow] = None

    def setup(self):
        config = load_run_config(self.args.config)
        self.config = config.with_overrides(seed=self.args.seed, out_dir=self.args.out_dir)
        self.context = MongeContext(self.config, threads=self.args.threads)
        self.workflow = MongeWorkflow(self.context)
        print(f"✓ Config loaded (digest {self.context.digest})")

    @property
    def out_dir(self) -> Path:
        return self.context.out_dir

    def cmd_cost(self) -> int:
        args = self.args
        if args.critical:
            result = self.workflow.critical(args.k_lo, args.k_hi, args.tol)
            path = write_json(result.to_output(self.context.digest), self.out_dir / "critical.json")
            print(f"✅ k₀ ∈ [{result.k_lo:.9g}, {result.k_hi:.9g}] after {result.iterations} bisections")
            print(f"   below: {result.below.kind}, above: {result.above.kind} → {path}")
            return EXIT_OK

        frame = self.workflow.cost_frame(args.sources)
        path = write_csv(frame, args.out or self.out_dir / "costs.csv", self.context.digest)
        print(f"✅ Wrote {len(frame)} cost entries to {path}")
        return EXIT_OK

    def cmd_solve(self) -> int:
        digest = self.context.digest
        solved = self.workflow.solve(primary_only=self.args.primary_only)
        write_json(solved.primary_output(digest), self.out_dir / "plan.json")
        write_csv(potential_frame(solved.potential), self.out_dir / "potential.csv", digest)
        print(f"✅ K = {solved.plan.value:.12g} (dual {solved.certificate.dual_value:.12g})")
        if solved.selection is None:
            return EXIT_OK

        selection = solved.selection
        write_json(selection.to_output(digest, solved.monotonicity), self.out_dir / "selection.json")
        write_csv(map_frame(selection.map), self.out_dir / "map.csv", digest)
        print(f"✅ Σσμ = {selection.secondary_cost:.12g}, support {selection.support_size}"
              f" (bound {selection.support_bound}, degeneracy {selection.degeneracy})")
        if selection.is_map:
            print("✅ Selected plan is a map")
        else:
            print(f"⚠️ |Λ| = {len(selection.lambda_nodes)}, Λ-mass = {selection.lambda_mass:.6g}")
        print(f"   Outputs in {self.out_dir}")
        return EXIT_OK

    def cmd_rays(self) -> int:
        args = self.args
        if args.potential is not None:
            potential = load_potential(args.potential, self.context.manifold.n_nodes)
            result = self.workflow.rays(potential, epsilon=args.epsilon)
        else:
            solved = self.workflow.solve()
            result = self.workflow.rays(solved.potential, solved, epsilon=args.epsilon)
        decomposition = result.decomposition
        output = decomposition.to_output(self.context.digest, result.audit)
        path = write_json(output, args.out or self.out_dir / "rays.json")
        print(f"✅ {decomposition.calibrated.n_edges} calibrated edges, |T| = {decomposition.T.size}, "
              f"|T_ε| = {decomposition.T_eps.size}, |E| = {decomposition.ends.size}, "
              f"{len(decomposition.chains)} chains → {path}")
        if result.audit is not None and not result.audit.passed:
            print("❌ Ray audit failed")
            raise CertificationError("ray audit failed", report=result.audit)
        return EXIT_OK

    def cmd_oracle(self) -> int:
        # imported here: the oracle pulls in nothing the other commands need
        from src.oracle import run_oracle_suite

        args = self.args
        verdicts, summary = run_oracle_suite(args.seeds, n=args.n, mode=args.mode,
                                             show_progress=settings.SHOW_PROGRESS)
        frame = pd.DataFrame([verdict.model_dump() for verdict in verdicts])
        write_csv(frame, self.out_dir / "oracle.csv", self.context.digest)
        write_json(summary, self.out_dir / "oracle_summary.json")
        marker = "✅" if summary.all_passed else "❌"
        print(f"{marker} Oracle agreement: {summary.passed}/{summary.seeds} ({summary.mode})")
        return EXIT_OK if summary.all_passed else EXIT_CERTIFICATION

    def cmd_verify(self) -> int:
        from src.evaluation import run_acceptance

        report = run_acceptance(self.config, threads=self.args.threads, show_progress=settings.SHOW_PROGRESS)
        write_json(report, self.out_dir / "verification.json")
        for check in report.checks:
            marker = "✅" if check.passed else "❌"
            residual = "n/a" if check.residual is None else f"{check.residual:.3g}"
            print(f"{marker} {check.name:<20} residual {residual:<10} ({check.wall_time:.1f}s)")
        print(f"\n{report.statement}")
        return EXIT_OK if report.passed else EXIT_CERTIFICATION

    def cmd_export(self) -> int:
        document = load_selection(self.args.input)
        target = self.args.out_dir or self.args.input.parent
        mapping = {entry.source: entry.target for entry in document.map}
        plan = pd.DataFrame([entry.model_dump() for entry in document.pairs], columns=["i", "j", "mass"])
        map_path = write_csv(map_frame(mapping), Path(target) / "map_export.csv", document.config_digest)
        plan_path = write_csv(plan, Path(target) / "plan_export.csv", document.config_digest)
        print(f"✅ Exported {map_path} and {plan_path}")
        return EXIT_OK

    def run(self) -> int:
        if self.args.command != "export":
            self.setup()
        return getattr(self, f"cmd_{self.args.command}")()


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.out_dir)
    try:
        return MongeCLI(args).run()
    except CERTIFICATION_ERRORS as e:
        print(f"❌ {type(e).__name__}: {e}")
        return EXIT_CERTIFICATION
    except (MongeError, OSError, ValueError) as e:
        print(f"❌ Error: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
