import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fstmmc import cli
from fstmmc.classifier import INDUCTIVE, TmmcConfig
from fstmmc.episodes import ProtocolConfig
from fstmmc.evaluation import (
    EvaluationError,
    angle_between,
    boundary_normal_from_grid,
    confidence_interval,
    demo2d,
    evaluate,
    gradcheck,
)
from fstmmc.features import FeatureDataset, gen_synthetic, load_dataset
from fstmmc.objective import objective_gradient


def test_ci_examples():
    assert confidence_interval([0.0, 1.0]) == (0.5, 0.98)
    mean, ci = confidence_interval([0.4] * 7)
    assert mean == pytest.approx(0.4) and ci == 0.0
    with pytest.raises(ValueError):
        confidence_interval([1.0])


@settings(max_examples=100)
@given(
    st.lists(st.floats(0, 1), min_size=2, max_size=40),
    st.floats(-5, 5).filter(lambda a: abs(a) > 1e-3),
    st.floats(-5, 5),
)
def test_ci_affine_equivariance(acc, a, b):
    mean, ci = confidence_interval(acc)
    m2, ci2 = confidence_interval([a * x + b for x in acc])
    assert m2 == pytest.approx(a * mean + b, abs=1e-9)
    assert ci2 == pytest.approx(abs(a) * ci, abs=1e-9)


def test_ci_independent_recomputation():
    acc = np.random.default_rng(0).random(37)
    mean = sum(acc) / len(acc)
    sd = math.sqrt(sum((x - mean) ** 2 for x in acc) / (len(acc) - 1))
    m, ci = confidence_interval(acc)
    assert m == pytest.approx(mean, rel=1e-14)
    assert ci == pytest.approx(1.96 * sd / math.sqrt(len(acc)), rel=1e-12)


@pytest.fixture(scope="module")
def blobs():
    return gen_synthetic(10, 25, 16, 3.0, seed=2)


@pytest.fixture(scope="module")
def small_report(blobs):
    return evaluate(blobs, ProtocolConfig(n_way=5, k_shot=1, q_query=5, episodes=12, seed=3))


def test_report_fields(small_report):
    r = small_report
    assert r.per_episode_accuracy.shape == (12,)
    assert np.all((r.per_episode_accuracy >= 0) & (r.per_episode_accuracy <= 1))
    mean, ci = confidence_interval(r.per_episode_accuracy)
    assert (r.mean_accuracy, r.ci95) == (mean, ci)
    d = r.to_dict()
    for key in ("mean_accuracy", "ci95", "episodes", "mode", "config", "seed", "wall_time_seconds"):
        assert key in d
    assert d["mode"] == "tmmc" and d["episodes"] == 12 and d["seed"] == 3
    assert d["config"]["lambda2_schedule"] == [0.0, 1e-5, 1e-3, 0.1, 1.0]
    json.dumps(d)


def test_evaluate_reproducible_across_runs_and_workers(blobs, small_report):
    proto = ProtocolConfig(n_way=5, k_shot=1, q_query=5, episodes=12, seed=3)
    again = evaluate(blobs, proto)
    threaded = evaluate(blobs, proto, workers=4)
    assert again.per_episode_accuracy.tobytes() == small_report.per_episode_accuracy.tobytes()
    assert threaded.per_episode_accuracy.tobytes() == small_report.per_episode_accuracy.tobytes()


def test_modes_share_episodes(blobs):
    from fstmmc.episodes import sample_episode

    proto = ProtocolConfig(n_way=5, k_shot=1, q_query=5, episodes=3, seed=3)
    a = evaluate(blobs, proto, TmmcConfig(mode=INDUCTIVE))
    assert a.to_dict()["mode"] == "mmc"
    # episodes depend only on (seed, index), never on the classifier config
    for t in range(3):
        e1, e2 = sample_episode(blobs, proto, t), sample_episode(blobs, proto, t)
        np.testing.assert_array_equal(e1.query_ids, e2.query_ids)


def test_failure_budget(monkeypatch, blobs):
    from fstmmc import evaluation
    from fstmmc.classifier import FitError

    calls = {"n": 0}
    real = evaluation.classify_episode

    def flaky(episode, cfg):
        calls["n"] += 1
        if calls["n"] == 2:
            raise FitError("synthetic failure", class_index=0, stage=0)
        return real(episode, TmmcConfig(mode=INDUCTIVE))

    monkeypatch.setattr(evaluation, "classify_episode", flaky)
    with pytest.raises(EvaluationError):
        evaluate(blobs, ProtocolConfig(n_way=5, k_shot=1, q_query=3, episodes=10, seed=0))
    calls["n"] = 0
    report = evaluate(blobs, ProtocolConfig(n_way=5, k_shot=1, q_query=3, episodes=101, seed=0))
    assert report.failed_episodes == [1]
    assert math.isnan(report.per_episode_accuracy[1])
    assert np.isfinite(report.mean_accuracy)


def test_boundary_normal_of_known_plane():
    xs = ys = np.linspace(-2, 2, 41)
    gx, gy = np.meshgrid(xs, ys)
    normal = np.array([math.cos(0.3), math.sin(0.3)])
    values = normal[0] * gx + normal[1] * gy + 0.1
    est = boundary_normal_from_grid(xs, ys, values)
    assert angle_between(est, normal) < 1e-6
    with pytest.raises(ValueError):
        boundary_normal_from_grid(xs, ys, np.ones_like(gx))


def test_demo2d_files(tmp_path):
    res = demo2d("figure1", tmp_path / "fig")
    points, grid = res.files
    with open(points) as fh:
        rows = list(csv.DictReader(fh))
    assert sum(r["role"] == "support" for r in rows) == 2
    assert sum(r["role"] == "query" for r in rows) == 80
    with open(grid) as fh:
        g = list(csv.DictReader(fh))
    assert len(g) == 81 * 81
    values = np.array([[float(r["f_inductive"]), float(r["f_transductive"])] for r in g])
    assert np.all(np.isfinite(values))


def test_demo2d_rejects_unknown_scenario():
    with pytest.raises(ValueError):
        demo2d("nope")


def test_demo2d_unwritable(tmp_path):
    with pytest.raises(OSError):
        demo2d("control", tmp_path / "no" / "such" / "dir")


def test_gradcheck_report():
    r = gradcheck(seed=1, trials=10)
    assert r.passed and r.max_error < 1e-5
    assert 0 <= r.worst_trial < 10 and r.worst_index >= 0
    text = str(r)
    assert text.startswith("PASS") and f"coordinate {r.worst_index}" in text


def test_gradcheck_catches_corrupted_gradient():
    def off_by_two(alpha, p):
        # drops the factor 2 from the query-term derivative
        g = objective_gradient(alpha, p)
        half = p.with_lambda2(p.lambda2 / 2)
        return objective_gradient(alpha, half) if p.lambda2 else g * 1.01

    r = gradcheck(seed=0, trials=10, gradient=off_by_two)
    assert not r.passed
    assert str(r).startswith("FAIL")


# -- command line ---------------------------------------------------------------


def test_cli_gen_synth_and_eval(tmp_path, capsys):
    data = tmp_path / "blobs.bin"
    assert cli.main(["gen-synth", "--classes", "6", "--per-class", "12", "--dim", "8",
                     "--separation", "4", "--seed", "5", "--out", str(data)]) == 0
    d = load_dataset(data)
    assert isinstance(d, FeatureDataset) and d.n_classes == 6 and d.dim == 8
    report = tmp_path / "r.json"
    per = tmp_path / "per.csv"
    assert cli.main(["eval", "--features", str(data), "--n-way", "5", "--k-shot", "1", "--q-query", "5",
                     "--episodes", "4", "--seed", "1", "--mode", "mmc", "--out", str(report),
                     "--per-episode", str(per)]) == 0
    got = json.loads(report.read_text())
    assert got["mode"] == "mmc" and got["episodes"] == 4 and got["seed"] == 1
    assert got["config"]["lambda2_schedule"] == [0.0]
    assert len(per.read_text().strip().splitlines()) == 5
    assert "mmc:" in capsys.readouterr().err


def test_cli_eval_csv_to_stdout(tmp_path, capsys):
    data = tmp_path / "b.csv"
    cli.main(["gen-synth", "--classes", "5", "--per-class", "8", "--dim", "3", "--separation", "3",
              "--out", str(data), "--format", "csv"])
    assert cli.main(["eval", "--features", str(data), "--format", "csv", "--n-way", "5", "--q-query", "3",
                     "--episodes", "2", "--lambda2-schedule", "0,0.1,1", "--lambda1", "0.05"]) == 0
    got = json.loads(capsys.readouterr().out)
    assert got["config"]["lambda2_schedule"] == [0.0, 0.1, 1.0]
    assert got["config"]["lambda1"] == 0.05


def test_cli_bad_schedule():
    with pytest.raises(SystemExit):
        cli.main(["eval", "--features", "x", "--lambda2-schedule", "0,abc"])


def test_cli_demo2d_and_gradcheck(tmp_path, capsys):
    assert cli.main(["demo2d", "--scenario", "figure1", "--out", str(tmp_path / "f")]) == 0
    out = capsys.readouterr().out
    assert "rotation" in out and (tmp_path / "f_grid.csv").exists()
    assert cli.main(["gradcheck", "--seed", "0", "--trials", "5"]) == 0
    assert capsys.readouterr().out.startswith("PASS")
