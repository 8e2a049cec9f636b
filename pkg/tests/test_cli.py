"""CLI behavior: pipelines, exit codes, byte determinism under --seed."""

import json

import numpy as np
import pytest

from dmpbag.bagsim import BagSimConfig, BagSimState, render_markers
from dmpbag.cli import main
from dmpbag.io import read_trajectory, write_marker_cloud


def write_limits_config(path, demo, vel_cap, acc_cap=10.0):
    vp = np.max(np.abs(demo.vel), axis=1)
    ap = np.max(np.abs(demo.acc), axis=1)
    q = 10.0 * np.max(np.abs(demo.pos), axis=1) + 1.0
    config = {
        "limits": {
            "q_lo": (-q).tolist(),
            "q_hi": q.tolist(),
            "v_lo": (-vel_cap * vp / 0.98).tolist(),
            "v_hi": (vel_cap * vp / 0.98).tolist(),
            "a_lo": (-acc_cap * ap).tolist(),
            "a_hi": (acc_cap * ap).tolist(),
            "margin": 0.98,
        }
    }
    path.write_text(json.dumps(config) + "\n")


@pytest.fixture
def fitted_model(tmp_path):
    assert main(["demo-gen", "--seed", "3", "--out", str(tmp_path / "demo.csv")]) == 0
    assert main(
        ["fit", "--demo", str(tmp_path / "demo.csv"), "--out", str(tmp_path / "model.json")]
    ) == 0
    return tmp_path


class TestExitCodes:
    def test_usage_error_is_1(self, capsys):
        assert main(["constrain", "--method", "bogus"]) == 1

    def test_missing_file_is_3(self, capsys):
        assert main(["fit", "--demo", "/nonexistent.csv", "--out", "/tmp/x.json"]) == 3

    def test_infeasible_opt_is_2(self, fitted_model, capsys):
        demo = read_trajectory(fitted_model / "demo.csv")
        cfg = fitted_model / "cfg.json"
        # half the demo's peak speed with the duration pinned is below the
        # mean speed needed to reach the goal at all
        write_limits_config(cfg, demo, vel_cap=0.3)
        rc = main(
            [
                "constrain", "--method", "opt",
                "--model", str(fitted_model / "model.json"),
                "--limits", str(cfg),
                "--out", str(fitted_model / "out.csv"),
            ]
        )
        assert rc == 2
        assert "infeasible" in capsys.readouterr().err


class TestDemoGenFitRollout:
    def test_demo_gen_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["demo-gen", "--seed", "9", "--out", str(a)]) == 0
        assert main(["demo-gen", "--seed", "9", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["demo-gen", "--seed", "1", "--out", str(a)])
        main(["demo-gen", "--seed", "2", "--out", str(b)])
        assert a.read_bytes() != b.read_bytes()

    def test_rollout_tracks_demo(self, fitted_model):
        out = fitted_model / "roll.csv"
        assert main(
            ["rollout", "--model", str(fitted_model / "model.json"),
             "--dt", "0.005", "--out", str(out)]
        ) == 0
        demo = read_trajectory(fitted_model / "demo.csv")
        roll = read_trajectory(out)
        # same start, converged to the goal
        assert np.allclose(roll.pos[:, 0], demo.pos[:, 0], atol=1e-9)
        assert np.allclose(roll.pos[:, -1], demo.pos[:, -1], atol=1e-3)


class TestConstrainCommand:
    def test_half_speed_tau_report(self, fitted_model):
        demo = read_trajectory(fitted_model / "demo.csv")
        cfg = fitted_model / "cfg.json"
        write_limits_config(cfg, demo, vel_cap=0.5)
        report_path = fitted_model / "report.json"
        rc = main(
            [
                "constrain", "--method", "tau",
                "--model", str(fitted_model / "model.json"),
                "--limits", str(cfg),
                "--out", str(fitted_model / "tau.csv"),
                "--report", str(report_path),
            ]
        )
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert report["tau_final"] == pytest.approx(2.0, rel=0.02)
        assert max(report["max_excess"].values()) <= 1e-6

    def test_slack_limits_output_equals_rollout(self, fitted_model):
        demo = read_trajectory(fitted_model / "demo.csv")
        cfg = fitted_model / "cfg.json"
        write_limits_config(cfg, demo, vel_cap=5.0)
        assert main(
            ["constrain", "--method", "tau",
             "--model", str(fitted_model / "model.json"),
             "--limits", str(cfg),
             "--out", str(fitted_model / "slack.csv")]
        ) == 0
        assert main(
            ["rollout", "--model", str(fitted_model / "model.json"),
             "--dt", "0.005", "--out", str(fitted_model / "roll.csv")]
        ) == 0
        assert (fitted_model / "slack.csv").read_bytes() == (
            fitted_model / "roll.csv"
        ).read_bytes()


class TestMetricsCommand:
    def test_report_with_reference(self, tmp_path, capsys):
        sim = BagSimConfig(seed=1)
        write_marker_cloud(
            tmp_path / "ref.csv",
            render_markers(BagSimState(crumple=0.0, gripper_distance=0.3), sim),
        )
        write_marker_cloud(
            tmp_path / "cloud.csv",
            render_markers(BagSimState(crumple=0.5, gripper_distance=0.3), sim),
        )
        out = tmp_path / "metrics.json"
        rc = main(
            ["metrics", "--cloud", str(tmp_path / "cloud.csv"),
             "--reference", str(tmp_path / "ref.csv"), "--out", str(out)]
        )
        assert rc == 0
        doc = json.loads(out.read_text())
        assert 0.0 < doc["volume_ratio"] < 1.0
        assert 0.0 < doc["area_ratio"] < 1.0
        assert doc["delta_elongation"] == pytest.approx(
            abs(1.0 - doc["elongation"])
        )


class TestSimulateCommand:
    def test_byte_deterministic_under_seed(self, tmp_path):
        for name in ("one", "two"):
            rc = main(
                ["simulate", "--method", "tau", "--runs", "2", "--seed", "7",
                 "--out", str(tmp_path / name), "--svg"]
            )
            assert rc == 0
        files = sorted(p.name for p in (tmp_path / "one").iterdir())
        assert "summary.csv" in files and "area_ratio.svg" in files
        for name in files:
            assert (tmp_path / "one" / name).read_bytes() == (
                tmp_path / "two" / name
            ).read_bytes()

    def test_tau_reaches_fewer_targets_than_opt(self, tmp_path):
        counts = {}
        for method in ("tau", "opt"):
            assert main(
                ["simulate", "--method", method, "--runs", "4", "--seed", "11",
                 "--out", str(tmp_path / method)]
            ) == 0
            rows = (tmp_path / method / "summary.csv").read_text().splitlines()[1:]
            counts[method] = sum(int(r.split(",")[1]) for r in rows)
        assert counts["tau"] < counts["opt"]


class TestCompareCommand:
    def test_table_durations(self, fitted_model, capsys):
        demo = read_trajectory(fitted_model / "demo.csv")
        cfg = fitted_model / "cfg.json"
        write_limits_config(cfg, demo, vel_cap=0.7)
        rc = main(
            ["compare", "--model", str(fitted_model / "model.json"),
             "--limits", str(cfg), "--out", str(fitted_model / "cmp")]
        )
        assert rc == 0
        rows = (fitted_model / "cmp" / "compare.csv").read_text().splitlines()
        table = {r.split(",")[0]: r.split(",") for r in rows[1:]}
        header = rows[0].split(",")
        dur = header.index("duration")
        assert table["tau"][1] == "ok" and table["opt"][1] == "ok"
        # opt keeps the unconstrained duration; tau stretches it
        assert main(
            ["rollout", "--model", str(fitted_model / "model.json"),
             "--dt", "0.005", "--out", str(fitted_model / "roll.csv")]
        ) == 0
        base = read_trajectory(fitted_model / "roll.csv").duration
        assert float(table["opt"][dur]) == pytest.approx(base, rel=1e-9)
        assert float(table["tau"][dur]) > 1.2 * base
