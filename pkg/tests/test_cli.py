import json

import pytest

from taskmesh import cli


def run_cli(argv):
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    return code or 0


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A tiny but complete pipeline: data -> model -> policy -> episode."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data.jsonl"
    model = root / "model.npz"
    policy = root / "policy.npz"
    log = root / "episode.jsonl"
    curve = root / "curve.csv"
    assert run_cli(["gen-data", "--tasks", "retrieve-flag,multi-room",
                    "--per-family", "1", "--L", "6", "--K", "6",
                    "--seed", "3", "--out", str(data)]) == 0
    assert run_cli(["train-rnn", "--data", str(data), "--hdim", "24",
                    "--epochs", "4", "--seed", "3", "--out", str(model),
                    "--curve", str(curve)]) == 0
    assert run_cli(["train-policy", "--rnn", str(model), "--data", str(data),
                    "--scenario", "retrieve-flag", "--frames", "1200",
                    "--seed", "3", "--out", str(policy)]) == 0
    assert run_cli(["run", "--rnn", str(model), "--policy", str(policy),
                    "--data", str(data), "--scenario", "retrieve-flag",
                    "--n", "2", "--seed", "3", "--tick-cap", "20",
                    "--disrupt", "5:FlagLost",
                    "--init-subtask", "0=Find the blue flag and pick it up.",
                    "--log", str(log)]) == 0
    return {"root": root, "data": data, "model": model, "policy": policy,
            "log": log, "curve": curve}


class TestCommands:
    def test_gen_data_prints_per_task_counts(self, workspace, capsys):
        run_cli(["gen-data", "--tasks", "retrieve-flag", "--per-family", "1",
                 "--L", "2", "--K", "2", "--seed", "1",
                 "--out", str(workspace["root"] / "d2.jsonl")])
        out = capsys.readouterr().out
        assert "task 0 (retrieve-flag): 2 traces" in out
        assert "# taskmesh gen-data" in out   # reproducibility header

    def test_eval_rnn_prints_table_and_verdict(self, workspace, capsys):
        code = run_cli(["eval-rnn", "--model", str(workspace["model"]),
                        "--data", str(workspace["data"]),
                        "--exhaustive-depth", "1"])
        out = capsys.readouterr().out
        assert "oracle verdict:" in out
        if "MISMATCH" in out:
            assert code == 1
        else:
            assert code == 0

    def test_run_log_exists_with_disruption(self, workspace):
        header = json.loads(
            workspace["log"].read_text().splitlines()[0])
        assert header["schema"] == "episodelog/v1"
        assert header["n_robots"] == 2

    def test_plot_trajectory_and_distance(self, workspace):
        for kind in ("trajectory", "distance"):
            out = workspace["root"] / f"{kind}.png"
            assert run_cli(["plot", "--log", str(workspace["log"]),
                            "--kind", kind, "--out", str(out)]) == 0
            assert out.stat().st_size > 1000

    def test_plot_curve(self, workspace):
        out = workspace["root"] / "curve.png"
        assert run_cli(["plot", "--log", str(workspace["curve"]),
                        "--kind", "curve", "--out", str(out)]) == 0
        assert out.exists()

    def test_bad_flags_usage_exit_2(self):
        assert run_cli(["run", "--nonsense"]) == 2
        assert run_cli(["plot", "--log", "x", "--kind", "sideways",
                        "--out", "y"]) == 2

    def test_unknown_family_structured_error_exit_1(self, workspace, capsys):
        code = run_cli(["gen-data", "--tasks", "teleport", "--L", "1",
                        "--K", "1", "--out", str(workspace["root"] / "x.jsonl")])
        err = capsys.readouterr().err
        assert code == 1
        assert json.loads(err)["error"] == "TaskmeshError"

    def test_missing_scenario_in_dataset_exit_1(self, workspace, capsys):
        code = run_cli(["train-policy", "--rnn", str(workspace["model"]),
                        "--data", str(workspace["data"]),
                        "--scenario", "defend-position", "--frames", "100",
                        "--out", str(workspace["root"] / "p2.npz")])
        assert code == 1
        assert "defend-position" in capsys.readouterr().err

    def test_config_file_overrides_defaults(self, workspace, capsys):
        cfg = workspace["root"] / "cfg.json"
        cfg.write_text(json.dumps({"L": 3, "K": 2}))
        out_path = workspace["root"] / "cfgdata.jsonl"
        assert run_cli(["--config", str(cfg), "gen-data",
                        "--tasks", "retrieve-flag", "--seed", "1",
                        "--out", str(out_path)]) == 0
        assert "task 0 (retrieve-flag): 3 traces" in capsys.readouterr().out
