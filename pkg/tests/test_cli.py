import json

import pytest

from saflip.cli import main
from saflip.ber import read_result_csv

from test_harness import write_toy_instances


def make_config(tmp_path, per_group=1, n_runs=2, **overrides):
    toy = write_toy_instances(tmp_path / "toy", per_group=per_group)
    doc = {
        "benchmarks": ["toy"],
        "out_dir": "out",
        "n_runs": n_runs,
        "master_seed": 21,
        "validate_phase_transition": False,
        "params": {"t0": 1.0, "alpha": 0.9, "m_steps": 2, "mni": 3},
    }
    doc.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestRun:
    def test_minimal_run(self, tmp_path, capsys):
        config = make_config(tmp_path, per_group=1, n_runs=2)
        code, out, err = run_cli(capsys, "run", "--config", str(config))
        assert code == 0
        paths = json.loads(out)
        sa = read_result_csv(paths["results_sa"])
        pl = read_result_csv(paths["results_placebo"])
        assert sa.num_instances == 2 and sa.num_runs == 2
        assert sa.seeds == pl.seeds
        assert (tmp_path / "out" / "summary.json").exists()

    def test_stdout_is_machine_readable_only(self, tmp_path, capsys):
        config = make_config(tmp_path)
        code, out, err = run_cli(capsys, "run", "--config", str(config))
        assert code == 0
        json.loads(out)  # single JSON document
        assert "run 0" in err  # progress goes to stderr

    def test_algorithm_subset(self, tmp_path, capsys):
        config = make_config(tmp_path)
        code, out, _ = run_cli(
            capsys, "run", "--config", str(config), "--algorithms", "sa"
        )
        assert code == 0
        paths = json.loads(out)
        assert "results_sa" in paths
        assert "results_placebo" not in paths

    def test_resume_skips_finished_cells(self, tmp_path, capsys):
        config = make_config(tmp_path)
        code, out, _ = run_cli(capsys, "run", "--config", str(config))
        assert code == 0
        first = json.loads(out)
        sa_bytes = open(first["results_sa"], "rb").read()
        code, out, err = run_cli(
            capsys, "run", "--config", str(config), "--resume"
        )
        assert code == 0
        assert open(json.loads(out)["results_sa"], "rb").read() == sa_bytes
        assert "run 0" not in err  # nothing recomputed

    def test_bad_config_exits_2(self, tmp_path, capsys):
        path = tmp_path / "config.json"
        path.write_text("{}")
        code, _, err = run_cli(capsys, "run", "--config", str(path))
        assert code == 2
        assert "benchmarks" in err


class TestBer:
    def _results(self, tmp_path, capsys):
        config = make_config(tmp_path, per_group=1, n_runs=3)
        code, out, _ = run_cli(capsys, "run", "--config", str(config))
        assert code == 0
        return json.loads(out)

    def test_identical_inputs_are_symmetric(self, tmp_path, capsys):
        paths = self._results(tmp_path, capsys)
        code, out, err = run_cli(
            capsys,
            "ber",
            paths["results_sa"],
            paths["results_sa"],
            "--delta", "0",
            "--out", str(tmp_path / "ber"),
        )
        assert code == 0
        table = (tmp_path / "ber" / "ber_0.0000.csv").read_text().splitlines()
        assert len(table) > 1
        for line in table[1:]:
            _, _, b, e, r, _ = line.split(",")
            # A file compared with itself has equal benefit and risk.
            assert float(b) == float(r)
            assert abs(float(b) + float(e) + float(r) - 1.0) < 1e-12

    def test_three_delta_tables(self, tmp_path, capsys):
        paths = self._results(tmp_path, capsys)
        code, out, _ = run_cli(
            capsys,
            "ber",
            paths["results_sa"],
            paths["results_placebo"],
            "--delta", "0,0.01,0.02",
            "--out", str(tmp_path / "ber"),
        )
        assert code == 0
        produced = json.loads(out)
        assert set(produced) == {"ber_0.0000", "ber_0.0100", "ber_0.0200"}

    def test_unpaired_files_exit_2(self, tmp_path, capsys):
        paths = self._results(tmp_path, capsys)
        other = make_config(tmp_path / "other", per_group=1, n_runs=3,
                            master_seed=99)
        code, out, _ = run_cli(capsys, "run", "--config", str(other))
        assert code == 0
        unpaired = json.loads(out)["results_placebo"]
        code, _, err = run_cli(
            capsys, "ber", paths["results_sa"], unpaired,
            "--out", str(tmp_path / "ber2"),
        )
        assert code == 2
        assert "pair" in err.lower()


class TestReport:
    def test_report_and_determinism(self, tmp_path, capsys):
        config = make_config(tmp_path, per_group=1, n_runs=2)
        code, out, _ = run_cli(capsys, "run", "--config", str(config))
        paths = json.loads(out)
        for sub in ("r1", "r2"):
            code, out, _ = run_cli(
                capsys, "report", paths["results_sa"], paths["results_placebo"],
                "--out", str(tmp_path / sub),
            )
            assert code == 0
        a = (tmp_path / "r1" / "plots" / "ecdf_overall.svg").read_bytes()
        b = (tmp_path / "r2" / "plots" / "ecdf_overall.svg").read_bytes()
        assert a == b
        assert (tmp_path / "r1" / "summary.json").exists()


class TestTune:
    def test_screen_toy(self, tmp_path, capsys):
        config = make_config(tmp_path, per_group=2, n_runs=1)
        code, out, _ = run_cli(
            capsys, "tune", "--config", str(config), "--phase", "screen",
            "--runs", "1", "--out", str(tmp_path / "tune"),
        )
        assert code == 0
        doc = json.loads((tmp_path / "tune" / "screening_effects.json").read_text())
        assert len(doc["rows"]) == 27
        assert set(doc["main_effects"]) == {"t0", "alpha", "m_steps", "mni"}

    def test_rsm_budget_stop(self, tmp_path, capsys):
        config = make_config(
            tmp_path, per_group=1, n_runs=1,
            params={"t0": 50.0, "alpha": 0.9, "m_steps": 20, "mni": 50},
        )
        code, out, _ = run_cli(
            capsys, "tune", "--config", str(config), "--phase", "rsm",
            "--runs", "1", "--budget-limit", "1200",
            "--out", str(tmp_path / "tune"),
        )
        assert code == 0
        params = json.loads((tmp_path / "tune" / "tuned_params.json").read_text())[
            "params"
        ]
        trace = json.loads((tmp_path / "tune" / "rsm_trace.json").read_text())
        assert trace
        final_decision = trace[-1]["decision"]
        assert final_decision.startswith("stop")
        if "exceeds" in final_decision:
            assert params["m_steps"] * params["mni"] > 1200

    def test_missing_config_exits_2(self, tmp_path, capsys):
        code, _, err = run_cli(
            capsys, "tune", "--config", str(tmp_path / "nope.json"),
            "--phase", "screen",
        )
        assert code == 2


class TestFetch:
    def test_local_directory_ingest(self, tmp_path, capsys):
        toy = write_toy_instances(tmp_path / "toy", per_group=1)
        code, out, _ = run_cli(
            capsys, "fetch", str(toy), "--cache-dir", str(tmp_path / "cache"),
            "--no-validate",
        )
        assert code == 0
        produced = json.loads(out)
        manifest = json.loads(open(produced["manifest"]).read())
        assert len(manifest) == 2

    def test_missing_source_exits_2(self, tmp_path, capsys):
        code, _, err = run_cli(
            capsys, "fetch", str(tmp_path / "missing"),
            "--cache-dir", str(tmp_path / "cache"),
        )
        assert code == 2

    def test_bad_url_exits_2_without_partial_state(self, tmp_path, capsys):
        cache = tmp_path / "cache"
        code, _, err = run_cli(
            capsys, "fetch", "http://definitely-not-a-host.invalid/x.tar.gz",
            "--cache-dir", str(cache),
        )
        assert code == 2
        assert list(cache.glob("*.part")) == []
        assert list(cache.glob("*.tar.gz")) == []
