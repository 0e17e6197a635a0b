import json

import pytest
from click.testing import CliRunner

from rankdiv.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def synth_file(runner, tmp_path, name="run.json", **kwargs):
    path = tmp_path / name
    args = ["synth", "--models", "3", "--tasks", "2", "--k", "5",
            "--universe-size", "15", "--seed", "7", "--out", str(path)]
    for key, value in kwargs.items():
        args += [f"--{key.replace('_', '-')}", str(value)]
    result = runner.invoke(main, args)
    assert result.exit_code == 0, result.output
    return path


class TestSynthCommand:
    def test_writes_ingestible_json(self, runner, tmp_path):
        path = synth_file(runner, tmp_path)
        blocks = json.loads(path.read_text())
        assert len(blocks) == 6
        assert {"model", "task", "results"} <= set(blocks[0])

    def test_stdout_default(self, runner):
        result = runner.invoke(main, ["synth", "--models", "2", "--tasks", "1",
                                      "--k", "3", "--universe-size", "9"])
        assert result.exit_code == 0
        assert json.loads(result.output)

    def test_bad_config_is_usage_error(self, runner):
        result = runner.invoke(main, ["synth", "--models", "2", "--tasks", "1",
                                      "--k", "10", "--universe-size", "5"])
        assert result.exit_code == 2


class TestValidateCommand:
    def test_clean_run(self, runner, tmp_path):
        path = synth_file(runner, tmp_path)
        report_path = tmp_path / "report.json"
        result = runner.invoke(main, ["validate", str(path), "--k", "5",
                                      "--report-out", str(report_path)])
        assert result.exit_code == 0, result.output
        assert "3 models" in result.output
        assert json.loads(report_path.read_text())["entries"] == []

    def test_tied_ranks_exit_one(self, runner, tmp_path):
        doc = {"model": "m", "task": "t", "results": [
            {"rank": 1, "api_name": "a"},
            {"rank": 1, "api_name": "b"},
        ]}
        path = tmp_path / "tied.json"
        path.write_text(json.dumps(doc))
        result = runner.invoke(main, ["validate", str(path)])
        assert result.exit_code == 1
        assert "RANK_TIE" in result.output

    def test_ties_order_flag_recovers(self, runner, tmp_path):
        doc = {"model": "m", "task": "t", "results": [
            {"rank": 1, "api_name": "a"},
            {"rank": 1, "api_name": "b"},
        ]}
        path = tmp_path / "tied.json"
        path.write_text(json.dumps(doc))
        result = runner.invoke(main, ["validate", str(path), "--ties", "order"])
        assert result.exit_code == 0, result.output

    def test_parse_error_exit_one(self, runner, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"model": ')
        result = runner.invoke(main, ["validate", str(path)])
        assert result.exit_code == 1
        assert "malformed JSON" in result.output

    def test_missing_file_exit_three(self, runner, tmp_path):
        result = runner.invoke(main, ["validate", str(tmp_path / "nope.json")])
        assert result.exit_code == 3

    def test_unknown_extension_usage_error(self, runner, tmp_path):
        path = tmp_path / "data.txt"
        path.write_text("[]")
        result = runner.invoke(main, ["validate", str(path)])
        assert result.exit_code == 2

    def test_normalized_out_round_trips(self, runner, tmp_path):
        path = synth_file(runner, tmp_path)
        normalized = tmp_path / "normalized.json"
        result = runner.invoke(main, ["validate", str(path), "--k", "5",
                                      "--normalized-out", str(normalized)])
        assert result.exit_code == 0
        result2 = runner.invoke(main, ["validate", str(normalized), "--k", "5"])
        assert result2.exit_code == 0


class TestSummarizeCommand:
    def test_csv_to_stdout(self, runner, tmp_path):
        path = synth_file(runner, tmp_path)
        result = runner.invoke(main, ["summarize", str(path), "--k", "5"])
        assert result.exit_code == 0
        header = result.output.splitlines()[0]
        assert header == "model,task,rank,api_name,relevance"
        assert len(result.output.splitlines()) == 1 + 6 * 5

    def test_summarize_output_reingestible(self, runner, tmp_path):
        path = synth_file(runner, tmp_path)
        table = tmp_path / "table.csv"
        result = runner.invoke(main, ["summarize", str(path), "--k", "5",
                                      "--out", str(table)])
        assert result.exit_code == 0
        result2 = runner.invoke(main, ["validate", str(table), "--k", "5"])
        assert result2.exit_code == 0, result2.output


class TestAnalysisCommands:
    def test_pairwise_stdout(self, runner, tmp_path):
        path = synth_file(runner, tmp_path)
        result = runner.invoke(main, ["pairwise", str(path), "--k", "5"])
        assert result.exit_code == 0
        assert result.output.startswith("metric,model_a,model_b,mean")

    def test_pairwise_out_dir(self, runner, tmp_path):
        path = synth_file(runner, tmp_path)
        out = tmp_path / "pw"
        result = runner.invoke(main, ["pairwise", str(path), "--k", "5",
                                      "--out-dir", str(out)])
        assert result.exit_code == 0
        names = {p.name for p in out.iterdir()}
        assert "pairwise_matrix_ao.csv" in names
        assert "heatmap_grid.csv" in names

    def test_group_and_consensus(self, runner, tmp_path):
        path = synth_file(runner, tmp_path, swap_noise=0.5)
        for command in ("group", "consensus"):
            result = runner.invoke(main, [command, str(path), "--k", "5"])
            assert result.exit_code == 0, result.output
            assert "task" in result.output.splitlines()[0]

    def test_stats_json(self, runner, tmp_path):
        path = synth_file(runner, tmp_path, swap_noise=0.8)
        result = runner.invoke(main, ["stats", str(path), "--k", "5",
                                      "--format", "json"])
        assert result.exit_code == 0
        rows = json.loads(result.output)
        assert {r["test"] for r in rows} == {"anova", "kruskal", "levene"}


class TestReportCommand:
    def test_bundle_and_manifest(self, runner, tmp_path):
        path = synth_file(runner, tmp_path, swap_noise=0.5)
        out = tmp_path / "bundle"
        result = runner.invoke(main, ["report", str(path), "--k", "5",
                                      "--out-dir", str(out)])
        assert result.exit_code == 0, result.output
        names = {p.name for p in out.iterdir()}
        assert "manifest.json" in names
        assert "pairwise_summary.csv" in names
        assert "group_reliability.csv" in names
        assert "consensus.csv" in names
        assert "volatility.csv" in names
        assert "reliability_tiers.csv" in names
        assert "domain_composites.csv" in names
        assert "stats_tests.csv" in names
        assert "ao_depth_curves.csv" in names
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["params"]["k"] == 5
        assert manifest["inputs"][0]["path"] == str(path)

    def test_deterministic_bundles(self, runner, tmp_path):
        path = synth_file(runner, tmp_path, swap_noise=0.3, substitution_rate=0.2)
        bundles = []
        for name in ("b1", "b2"):
            out = tmp_path / name
            result = runner.invoke(main, ["report", str(path), "--k", "5",
                                          "--out-dir", str(out)])
            assert result.exit_code == 0
            bundles.append({
                p.name: p.read_bytes()
                for p in sorted(out.iterdir())
                if p.name != "manifest.json"  # embeds the input path
            })
        assert bundles[0] == bundles[1]

    def test_usage_error_without_out_dir(self, runner, tmp_path):
        path = synth_file(runner, tmp_path)
        result = runner.invoke(main, ["report", str(path)])
        assert result.exit_code == 2
