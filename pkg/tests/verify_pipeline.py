import os
import sys
from dotenv import load_dotenv

# Add root to path
sys.path.append(os.getcwd())

from src.config import MongeContext, build_run_config
from src.oracle import run_oracle_suite
from src.workflow import MongeWorkflow


def small_config():
    return build_run_config({
        "seed": 1,
        "manifold": {"type": "torus2d", "n": 12, "stencil": 16},
        "metric": {"type": "randers", "swirl": 0.3},
        "marginals": {
            "mu0": {"type": "gaussian", "center": [0.3, 0.3], "width": 0.12},
            "mu1": {"type": "gaussian", "center": [0.7, 0.6], "width": 0.12},
            "absolutely_continuous": True,
        },
    })


def verify_solve():
    print("\n--- Two-stage transport ---")
    workflow = MongeWorkflow(MongeContext(small_config(), threads=2))
    solved = workflow.solve(strict=False)
    selection = solved.selection
    checks = [
        ("optimality certificate", solved.certificate.passed),
        ("swap monotonicity", solved.monotonicity.passed),
        ("support within vertex bound", selection.support_size <= selection.support_bound),
    ]
    for name, ok in checks:
        print(f"{'✅' if ok else '❌'} {name}")
    print(f"   K = {solved.plan.value:.10g}, Σσμ = {selection.secondary_cost:.10g}, "
          f"|Λ| = {len(selection.lambda_nodes)}, Λ-mass = {selection.lambda_mass:.3g}")
    return workflow, solved


def verify_rays(workflow, solved):
    print("\n--- Transport rays ---")
    result = workflow.rays(solved.potential, solved)
    audit = result.audit
    status = "✅" if audit.passed else "❌"
    print(f"{status} Ray audit: speed {audit.min_speed:.4g} (δ = {audit.delta:.3g}), "
          f"order violations {audit.order_violations}, mismatches {audit.tight_ray_mismatches}")
    decomposition = result.decomposition
    print(f"   |T| = {decomposition.T.size}, |E| = {decomposition.ends.size}, {len(decomposition.chains)} chains")


def verify_oracle():
    print("\n--- Brute-force oracle ---")
    for mode in ("synthetic", "sliced"):
        _, summary = run_oracle_suite(10, mode=mode)
        status = "✅" if summary.all_passed else "❌"
        print(f"{status} {mode}: {summary.passed}/{summary.seeds} instances agree")


def main():
    load_dotenv()
    workflow, solved = verify_solve()
    verify_rays(workflow, solved)
    verify_oracle()


if __name__ == "__main__":
    main()
