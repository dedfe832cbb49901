import json

import numpy as np
import pandas as pd
import pytest

from cli import EXIT_CERTIFICATION, EXIT_OK, EXIT_USAGE, main
from config.settings import settings
from src.config import MongeContext, build_run_config, load_run_config
from src.evaluation import AcceptanceRunner, refinement_trend, trend_summary
from src.exceptions import InvalidConfigError, RestrictionError
from src.utils.exports import load_potential, load_selection, read_csv
from src.workflow import MongeWorkflow

PATH_GRAPH = {
    "nodes": [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]],
    "edges": [[0, 1], [1, 0], [1, 2], [2, 1], [2, 3], [3, 2]],
}


def torus_config(tmp_path, extra=""):
    path = tmp_path / "torus.toml"
    path.write_text(f"""
seed = 3

[manifold]
type = "torus2d"
n = 6
stencil = 8

[metric]
type = "randers"
swirl = 0.3

[marginals.mu0]
type = "gaussian"
center = [0.3, 0.3]
width = 0.15

[marginals.mu1]
type = "gaussian"
center = [0.7, 0.6]
width = 0.15

[output]
dir = "{(tmp_path / 'out').as_posix()}"
{extra}
""")
    return path


def path_config(tmp_path):
    (tmp_path / "path.json").write_text(json.dumps(PATH_GRAPH))
    path = tmp_path / "path.toml"
    path.write_text(f"""
[manifold]
type = "graph"
path = "path.json"

[metric]
type = "euclidean"

[marginals.mu0]
type = "atoms"
nodes = [0, 1]

[marginals.mu1]
type = "atoms"
nodes = [2, 3]

[output]
dir = "{(tmp_path / 'out').as_posix()}"
""")
    return path


class TestRunConfig:
    def test_default_file(self):
        config = load_run_config()
        assert config.manifold.n == 32
        assert config.metric.type == "randers"
        assert len(config.digest()) == 16

    def test_digest_follows_content(self, small_config):
        assert small_config.digest() == build_run_config(small_config.model_dump()).digest()
        assert small_config.with_overrides(seed=4).digest() != small_config.digest()

    def test_unknown_key(self, tmp_path):
        with pytest.raises(InvalidConfigError):
            load_run_config(torus_config(tmp_path, "[rays]\nepsilon = 0.1\nwidth = 2"))

    def test_bad_stencil(self, tmp_path):
        text = torus_config(tmp_path).read_text().replace("stencil = 8", "stencil = 12")
        path = tmp_path / "bad.toml"
        path.write_text(text)
        with pytest.raises(InvalidConfigError):
            load_run_config(path)

    def test_missing_and_malformed(self, tmp_path):
        with pytest.raises(InvalidConfigError):
            load_run_config(tmp_path / "absent.toml")
        broken = tmp_path / "broken.toml"
        broken.write_text("[manifold\nn = 4")
        with pytest.raises(InvalidConfigError):
            load_run_config(broken)

    def test_negative_seed(self):
        with pytest.raises(InvalidConfigError):
            build_run_config({"seed": -1})

    def test_environment_is_ignored(self, monkeypatch):
        monkeypatch.setenv("seed", "9")
        assert build_run_config({}).seed == 0

    def test_graph_path_is_relative_to_the_file(self, tmp_path):
        config = load_run_config(path_config(tmp_path))
        assert config.manifold.path == tmp_path / "path.json"
        assert MongeContext(config, threads=1).manifold.n_nodes == 4


class TestWorkflow:
    @pytest.fixture
    def workflow(self, small_config):
        return MongeWorkflow(MongeContext(small_config, threads=1, show_progress=False))

    def test_solve(self, workflow):
        solved = workflow.solve()
        assert solved.certificate.passed
        assert solved.monotonicity.passed
        selection = solved.selection
        assert selection.support_size <= selection.support_bound
        assert selection.primary_cost == pytest.approx(solved.plan.value, rel=1e-8)
        assert set(selection.plan.support) <= solved.tight.pairs()

    def test_default_gaussians_select(self, tmp_path):
        data = load_run_config().model_dump()
        data["manifold"]["n"] = 16
        data["output"]["dir"] = tmp_path
        config = build_run_config(data)
        assert config.marginals.absolutely_continuous
        workflow = MongeWorkflow(MongeContext(config, threads=1, show_progress=False))
        solved = workflow.select(workflow.solve(primary_only=True), strict=False)
        selection = solved.selection
        assert selection.support_size <= selection.support_bound
        assert selection.plan.marginal_error(workflow.context.marginals) <= 1e-9
        assert selection.primary_cost == pytest.approx(solved.plan.value, rel=1e-8)
        assert set(selection.plan.support) <= solved.tight.pairs()

    def test_primary_only(self, workflow):
        solved = workflow.solve(primary_only=True)
        assert solved.selection is None
        assert solved.tight is None

    def test_rays(self, workflow):
        solved = workflow.solve()
        result = workflow.rays(solved.potential, solved)
        audit = result.audit
        assert audit.speed_ok
        assert audit.order_violations == 0
        assert audit.unconnected_support_pairs == 0
        assert set(result.decomposition.ends.tolist()) <= set(result.decomposition.T.tolist())

    def test_cost_frame(self, workflow):
        frame = workflow.cost_frame([0, 5])
        assert len(frame) == 2 * 64
        assert frame.loc[(frame.source == 5) & (frame.target == 5), "cost"].item() == 0.0
        with pytest.raises(InvalidConfigError):
            workflow.cost_frame([64])

    def test_refinement_trend(self, small_config):
        frame = refinement_trend(small_config, sides=[6, 4], threads=1)
        assert frame["n"].tolist() == [4, 6]
        assert (frame["support_size"] <= frame["support_bound"]).all()
        assert (frame["ends"] >= 1).all()
        assert set(trend_summary(frame)) == {"lambda_mass_ratio", "ends_volume_ratio"}


class TestAcceptanceRunner:
    @pytest.fixture
    def runner(self, small_config):
        return AcceptanceRunner(small_config, threads=1)

    def test_error_becomes_a_failed_check(self, runner):
        def starved():
            raise RestrictionError("tight set admits no plan")

        check = runner.run_check("starved", starved)
        assert check.status == "fail"
        assert check.detail["error"] == "RestrictionError"
        assert check.wall_time >= 0.0

    def test_solution_checks(self, runner):
        for name, method in runner.CHECKS:
            if name not in ("duality", "monotonicity_order", "ray_speed", "map_concentration", "energy"):
                continue
            check = runner.run_check(name, getattr(runner, method))
            assert check.passed, (name, check.detail)

    def test_critical_value_check(self, runner, monkeypatch):
        monkeypatch.setattr(settings, "CRITICAL_SIDE", 4)
        passed, residual, threshold, detail = runner.check_critical_value()
        assert passed, detail
        assert residual <= threshold


class TestCli:
    def test_solve_writes_outputs(self, tmp_path):
        assert main(["--config", str(path_config(tmp_path)), "solve"]) == EXIT_OK
        out = tmp_path / "out"
        for name in ("plan.json", "potential.csv", "selection.json", "map.csv"):
            assert (out / name).is_file()
        selection = load_selection(out / "selection.json")
        assert {(e.source, e.target) for e in selection.map} == {(0, 2), (1, 3)}
        assert selection.primary_cost == pytest.approx(2.0)
        assert selection.secondary_cost == pytest.approx(4.0)
        assert selection.lambda_nodes == []
        frame, digest = read_csv(out / "map.csv")
        assert digest == selection.config_digest
        assert frame.to_dict("list") == {"source": [0, 1], "target": [2, 3]}

    def test_primary_only_and_out_dir(self, tmp_path):
        alt = tmp_path / "alt"
        argv = ["--config", str(torus_config(tmp_path)), "--out-dir", str(alt), "solve", "--primary-only"]
        assert main(argv) == EXIT_OK
        assert (alt / "plan.json").is_file()
        assert not (alt / "selection.json").exists()

    def test_rays_from_saved_potential(self, tmp_path):
        config = str(path_config(tmp_path))
        assert main(["--config", config, "solve"]) == EXIT_OK
        out = tmp_path / "out"
        potential = load_potential(out / "potential.csv", 4)
        assert potential.values.tolist() == pytest.approx([0.0, 1.0, 2.0, 3.0])
        assert main(["--config", config, "rays", "--potential", str(out / "potential.csv")]) == EXIT_OK
        document = json.loads((out / "rays.json").read_text())
        assert document["chains"] == [[0, 1, 2, 3]]
        assert document["ends"] == [0, 3]
        assert document["audit"] is None

    def test_rays_with_audit(self, tmp_path):
        assert main(["--config", str(path_config(tmp_path)), "rays", "--epsilon", "0.5"]) == EXIT_OK
        document = json.loads((tmp_path / "out" / "rays.json").read_text())
        assert document["T_eps"] == [1, 2]
        assert document["audit"]["order_violations"] == 0

    def test_loose_calibration_is_a_certification_failure(self, tmp_path):
        config = torus_config(tmp_path, "[tolerances]\ntol_cal = 10.0")
        assert main(["--config", str(config), "rays"]) == EXIT_CERTIFICATION

    def test_cost_rows(self, tmp_path):
        assert main(["--config", str(torus_config(tmp_path)), "cost", "--sources", "0,1"]) == EXIT_OK
        frame, digest = read_csv(tmp_path / "out" / "costs.csv")
        assert len(frame) == 2 * 36
        assert list(frame.columns) == ["source", "target", "cost"]
        assert digest is not None

    def test_critical_bracket(self, tmp_path):
        argv = ["--config", str(torus_config(tmp_path)), "cost", "--critical", "--tol", "1e-3"]
        assert main(argv) == EXIT_OK
        document = json.loads((tmp_path / "out" / "critical.json").read_text())
        # L̃ ≥ 1/2, so the tilde family turns supercritical at k = -1/2
        assert document["k_lo"] <= -0.5 <= document["k_hi"]
        assert document["above"]["kind"] == "positive"

    def test_bad_bracket_is_a_usage_error(self, tmp_path):
        argv = ["--config", str(torus_config(tmp_path)), "cost", "--critical", "--k-lo", "0.5"]
        assert main(argv) == EXIT_USAGE

    def test_oracle(self, tmp_path):
        assert main(["--config", str(torus_config(tmp_path)), "oracle", "--seeds", "3", "--n", "4"]) == EXIT_OK
        frame, _ = read_csv(tmp_path / "out" / "oracle.csv")
        assert frame["passed"].all()
        summary = json.loads((tmp_path / "out" / "oracle_summary.json").read_text())
        assert summary["seeds"] == 3

    def test_export(self, tmp_path):
        assert main(["--config", str(path_config(tmp_path)), "solve"]) == EXIT_OK
        target = tmp_path / "exported"
        assert main(["--out-dir", str(target), "export", str(tmp_path / "out" / "selection.json")]) == EXIT_OK
        plan = pd.read_csv(target / "plan_export.csv", comment="#")
        assert plan[["i", "j"]].values.tolist() == [[0, 2], [1, 3]]
        assert np.allclose(plan["mass"], 0.5)

    def test_missing_config(self, tmp_path):
        assert main(["--config", str(tmp_path / "absent.toml"), "solve"]) == EXIT_USAGE

    def test_usage_errors_exit_one(self):
        with pytest.raises(SystemExit) as info:
            main(["cost", "--sources", "a,b"])
        assert info.value.code == EXIT_USAGE
        with pytest.raises(SystemExit) as info:
            main(["transmogrify"])
        assert info.value.code == EXIT_USAGE
