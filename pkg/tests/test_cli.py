import numpy as np
import pytest

from gpmux import cli, reporting, theory
from gpmux.breeder import RunConfig, run_experiment
from gpmux.genome import Population
from gpmux.reporting import SnapshotMeta, snapshot_write


def run_cli(*argv):
    return cli.main(list(argv))


@pytest.fixture
def snapshot_path(tmp_path, rng):
    trees = [theory.uniform_random_binary_tree(int(rng.integers(0, 40)), rng)
             for _ in range(30)]
    pop = Population.from_trees(trees)
    path = tmp_path / "pop.bin"
    snapshot_write(pop, SnapshotMeta(12, 30, 7), path)
    return path


class TestRun:
    def test_produces_expected_rows(self, tmp_path, capsys):
        out = tmp_path / "d"
        code = run_cli("run", "--pop", "50", "--gens", "20", "--seed", "1",
                       "--out", str(out))
        assert code == 0
        text = (out / "run.csv").read_text().strip().split("\n")
        assert len(text) == 21  # header + one row per generation
        assert "completed" in capsys.readouterr().out

    def test_no_selection_flag(self, tmp_path):
        out = tmp_path / "d"
        code = run_cli("run", "--pop", "40", "--gens", "30", "--seed", "3",
                       "--no-selection", "--out", str(out))
        assert code == 0
        cols = reporting.read_generation_csv(out / "run.csv")
        assert np.diff(cols["best_fitness"]).min() < 0

    def test_extended_defaults_applied(self, tmp_path):
        out = tmp_path / "d"
        code = run_cli("run", "--extended", "--gens", "5", "--seed", "1",
                       "--out", str(out))
        assert code == 0
        import json

        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["popsize"] == 50
        assert summary["config"]["size_limit"] is None

    def test_config_file_with_flag_override(self, tmp_path):
        cfgfile = tmp_path / "exp.cfg"
        cfgfile.write_text("popsize=30\ngenerations=8\nseed=2\n")
        out = tmp_path / "d"
        code = run_cli("run", "--config", str(cfgfile), "--gens", "4",
                       "--out", str(out))
        assert code == 0
        cols = reporting.read_generation_csv(out / "run.csv")
        assert len(cols["gen"]) == 4  # flag beats file

    def test_unknown_flag_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run_cli("run", "--bogus", "1", "--out", str(tmp_path / "d"))
        assert exc.value.code == 2

    def test_budget_abort_exit_5(self, tmp_path):
        out = tmp_path / "d"
        code = run_cli("run", "--pop", "60", "--gens", "300", "--seed", "6",
                       "--size-limit", "none", "--budget", "30000",
                       "--out", str(out))
        assert code == 5


class TestAnalyze:
    def test_census(self, snapshot_path, tmp_path):
        out = tmp_path / "a"
        assert run_cli("analyze", str(snapshot_path), "--census",
                       "--out", str(out)) == 0
        lines = (out / "census.csv").read_text().strip().split("\n")
        assert len(lines) == 2
        assert lines[0].startswith("popsize,total_nodes")

    def test_all_snapshot_analyses(self, snapshot_path, tmp_path):
        out = tmp_path / "a"
        assert run_cli("analyze", str(snapshot_path), "--census",
                       "--effective", "--solutions", "--scatter",
                       "--histogram", "--mean-fit", "--overlap",
                       "--out", str(out)) == 0
        for name in ("census.csv", "effective.csv", "solutions.csv",
                     "scatter.csv", "histogram.csv", "overlap.csv",
                     "effective_tree0.dot"):
            assert (out / name).exists(), name

    def test_histogram_columns(self, snapshot_path, tmp_path):
        out = tmp_path / "a"
        assert run_cli("analyze", str(snapshot_path), "--histogram",
                       "--mean-fit", "--out", str(out)) == 0
        header = (out / "histogram.csv").read_text().split("\n")[0]
        assert header == "lo,hi,observed,expected,sigma,exceedance"

    def test_updown_from_run_csv(self, tmp_path):
        out = tmp_path / "run"
        run_experiment(RunConfig(popsize=60, generations=40, seed=3),
                       out_dir=out)
        code = run_cli("analyze", str(out / "run.csv"), "--updown",
                       "--out", str(out))
        assert code == 0
        assert (out / "updown.csv").read_text().startswith(
            "runt_count,rises,falls,ratio")

    def test_missing_file_exit_3(self, tmp_path):
        assert run_cli("analyze", str(tmp_path / "nope.bin"),
                       "--census") == 3

    def test_garbage_snapshot_exit_4(self, tmp_path):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"GPLT" + b"\x00" * 10)  # truncated header
        assert run_cli("analyze", str(bad), "--census") == 4

    def test_no_flags_is_usage_error(self, snapshot_path):
        assert run_cli("analyze", str(snapshot_path)) == 2


class TestTheory:
    def test_tournament_rows(self, capsys):
        assert run_cli("theory", "--curve", "tournament", "--pop", "500",
                       "--k", "7", "--x", "0..20") == 0
        lines = capsys.readouterr().out.strip().split("\n")
        assert len(lines) == 22  # header + 21
        x1 = float(lines[2].split(",")[1])
        assert x1 == pytest.approx(
            theory.expected_fitness_tournaments(1, 500, 7))

    def test_limiting_echoes_pa(self, capsys):
        assert run_cli("theory", "--curve", "limiting", "--mean", "82482.1",
                       "--n", "0..100") == 0
        out = capsys.readouterr().out
        lines = out.strip().split("\n")
        assert lines[0].startswith("# p_a=0.4999939")
        assert len(lines) == 103

    def test_flajolet_value(self, capsys):
        assert run_cli("theory", "--curve", "flajolet", "--n", "500") == 0
        out = capsys.readouterr().out.strip().split("\n")
        assert float(out[-1].split(",")[1]) == pytest.approx(79.27, abs=0.01)

    def test_limiting_requires_parameter(self, capsys):
        assert run_cli("theory", "--curve", "limiting") == 2


class TestReplay:
    def test_replay_runs(self, snapshot_path, tmp_path, capsys):
        out = tmp_path / "r"
        assert run_cli("replay", str(snapshot_path), "--gens", "5",
                       "--out", str(out)) == 0
        cols = reporting.read_generation_csv(out / "run.csv")
        assert len(cols["gen"]) == 5
        assert (out / "final.bin").exists()

    def test_replay_deterministic(self, snapshot_path, tmp_path):
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            run_cli("replay", str(snapshot_path), "--gens", "6",
                    "--seed", "123", "--out", str(out))
            outs.append((out / "run.csv").read_bytes())
        assert outs[0] == outs[1]


def test_end_to_end_determinism_across_workers(tmp_path):
    blobs = []
    for name, workers in (("w1", "1"), ("w4", "4")):
        out = tmp_path / name
        assert run_cli("run", "--pop", "40", "--gens", "15", "--seed", "9",
                       "--workers", workers, "--out", str(out)) == 0
        blobs.append((out / "run.csv").read_bytes())
    assert blobs[0] == blobs[1]
