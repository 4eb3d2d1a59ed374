"""Exit-code contract and report determinism of the command-line interface."""

from pathlib import Path

import pytest

from cqss import cli

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

FAST_SCENARIO = """
cqss-scenario v1
name = cli-fast
N = 2
n = 2
m = 2
mode = classical
threshold_k = 2
secret = demo 0.6 0.8
trials = 5
master_seed = 31337
"""


@pytest.fixture
def fast_scenario(tmp_path):
    path = tmp_path / "fast.scn"
    path.write_text(FAST_SCENARIO.lstrip())
    return path


def invoke(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestUsageErrors:
    def test_missing_file_exits_2(self, capsys):
        code, _, err = invoke(capsys, "run", "definitely_missing.scn")
        assert code == 2
        assert "definitely_missing.scn" in err

    def test_malformed_scenario_names_field(self, capsys, tmp_path):
        path = tmp_path / "broken.scn"
        path.write_text(FAST_SCENARIO.lstrip().replace("trials = 5", "trials = soon"))
        code, _, err = invoke(capsys, "run", path)
        assert code == 2
        assert "trials" in err

    def test_unknown_subcommand_exits_2(self, capsys):
        assert cli.main(["frobnicate", "x.scn"]) == 2

    def test_no_arguments_exits_2(self):
        assert cli.main([]) == 2

    def test_negative_seed_rejected(self, capsys, fast_scenario):
        code, _, err = invoke(capsys, "run", fast_scenario, "--seed", "-3")
        assert code == 2 and "master_seed" in err


class TestRun:
    def test_success_and_report_shape(self, capsys, fast_scenario):
        code, out, err = invoke(capsys, "run", fast_scenario)
        assert code == 0 and err == ""
        assert out.startswith("cqss-report v1\n")
        assert "recovered: 5" in out
        assert "mean_fidelity: 1" in out

    def test_stdout_byte_identical_across_runs(self, capsys, fast_scenario):
        _, first, _ = invoke(capsys, "run", fast_scenario, "-v")
        _, second, _ = invoke(capsys, "run", fast_scenario, "-v")
        assert first == second

    def test_out_file_matches_stdout(self, capsys, fast_scenario, tmp_path):
        target = tmp_path / "report.txt"
        code, out, _ = invoke(capsys, "run", fast_scenario, "--out", target)
        assert code == 0
        assert target.read_text() == out

    def test_seed_override_changes_stream_deterministically(
        self, capsys, fast_scenario
    ):
        _, a1, _ = invoke(capsys, "run", fast_scenario, "--seed", "1", "-vv")
        _, a2, _ = invoke(capsys, "run", fast_scenario, "--seed", "1", "-vv")
        assert a1 == a2
        assert "master_seed: 1" in a1

    def test_verbosity_adds_trials_and_transcripts(self, capsys, fast_scenario):
        _, quiet, _ = invoke(capsys, "run", fast_scenario)
        _, loud, _ = invoke(capsys, "run", fast_scenario, "-vv")
        assert "trial 0:" not in quiet
        assert "trial 0:" in loud and "transcript:" in loud

    def test_fidelity_regression_exits_1(self, capsys, fast_scenario, monkeypatch):
        import dataclasses

        from cqss.harness import RunReport, run_trial

        def sabotaged_scenario(cfg):
            report = RunReport(cfg.name, cfg.trials, cfg.master_seed)
            for t in range(cfg.trials):
                result = run_trial(cfg, t)
                report.results.append(dataclasses.replace(result, fidelity=0.5))
            return report

        monkeypatch.setattr(cli, "run_scenario", sabotaged_scenario)
        code, _, err = invoke(capsys, "run", fast_scenario)
        assert code == 1 and "fidelity" in err


class TestBundledScenarios:
    def test_all_bundled_parse(self):
        from cqss.scenario import load_scenario

        names = sorted(p.name for p in SCENARIOS.glob("*.scn"))
        assert names == [
            "eve_curve.scn",
            "full_release_demo.scn",
            "single_withheld.scn",
            "split_share.scn",
            "veto_controller.scn",
        ]
        for p in SCENARIOS.glob("*.scn"):
            load_scenario(p)

    def test_resources_on_demo_scenario(self, capsys):
        code, out, _ = invoke(capsys, "resources", SCENARIOS / "full_release_demo.scn")
        assert code == 0
        assert "epr_player=3" in out
        assert "epr_controller=6" in out
        assert "dealer_measurements=6" in out

    def test_mstar_on_demo_scenario(self, capsys):
        code, out, _ = invoke(capsys, "mstar", SCENARIOS / "full_release_demo.scn")
        assert code == 0
        assert "minimum_consenting: 3" in out

    def test_noinfo_on_withheld_scenario(self, capsys):
        code, out, _ = invoke(capsys, "noinfo", SCENARIOS / "single_withheld.scn")
        assert code == 0
        assert out.count("pass=yes") == 5  # empty, 3 singletons, full set

    def test_eve_requires_active_attacker(self, capsys, fast_scenario):
        code, _, err = invoke(capsys, "eve", fast_scenario)
        assert code == 2 and "eve" in err


class TestEveCurve:
    def test_small_curve_passes(self, capsys, tmp_path):
        path = tmp_path / "eve_small.scn"
        path.write_text(
            (SCENARIOS / "eve_curve.scn")
            .read_text()
            .replace("trials = 10000", "trials = 1500")
        )
        code, out, _ = invoke(capsys, "eve", path)
        assert code == 0
        assert out.count("within_4_sigma=yes") == 4
