import json
import os

import numpy as np
import pytest

from physproj.cli import main as cli_main
from physproj.errors import ValidationError
from physproj.pipeline import ExperimentConfig, load_config, run_experiment
from physproj.pipeline.csvio import load_spring_dataset_csv, write_spring_dataset_csv
from physproj.pipeline.metrics import improvement_rates, rmse, rmse_variation_rate, split_dataset

TINY_SPRING = dict(
    seed=3,
    spring_n_samples=400,
    spring_epochs=3,
    spring_hidden=(8, 8),
    spring_steps_single=6,
    spring_steps_many=5,
    spring_n_trajectories=3,
)
TINY_LTP = dict(
    seed=3,
    ltp_n_samples=150,
    ltp_max_epochs=8,
    ltp_hidden=(8, 8),
    trend_n_points=5,
)


# ---------------------------------------------------------------------------
# metrics


def test_split_sizes_and_partition():
    x = np.arange(1000.0)[:, None]
    y = 2.0 * x
    train, val, test = split_dataset((x, y), (0.8, 0.1, 0.1), seed=0)
    assert len(train[0]) == 800 and len(val[0]) == 100 and len(test[0]) == 100
    combined = np.sort(np.concatenate([train[0][:, 0], val[0][:, 0], test[0][:, 0]]))
    assert np.array_equal(combined, x[:, 0])


def test_split_all_training():
    x = np.arange(10.0)[:, None]
    train, val, test = split_dataset((x, x), (1.0, 0.0, 0.0), seed=0)
    assert len(train[0]) == 10 and len(val[0]) == 0 and len(test[0]) == 0


def test_split_deterministic_and_validated():
    x = np.arange(50.0)[:, None]
    a = split_dataset((x, x), (0.8, 0.1, 0.1), seed=7)
    b = split_dataset((x, x), (0.8, 0.1, 0.1), seed=7)
    assert np.array_equal(a[0][0], b[0][0])
    with pytest.raises(ValidationError):
        split_dataset((x, x), (0.5, 0.2, 0.2), seed=0)
    with pytest.raises(ValidationError):
        split_dataset((x[:3], x[:3]), (0.8, 0.1, 0.1), seed=0)


def test_rmse_values():
    a = np.array([[1.0], [2.0]])
    assert rmse(a, a) == 0.0
    pred = np.array([[3.0], [4.0]])
    target = np.zeros((2, 1))
    assert rmse(pred, target) == pytest.approx(np.sqrt(12.5))
    with pytest.raises(ValidationError):
        rmse(np.zeros((2, 1)), np.zeros((3, 1)))


def test_rmse_aggregate_identity():
    rng = np.random.default_rng(0)
    pred = rng.normal(size=(40, 5))
    target = rng.normal(size=(40, 5))
    per = rmse(pred, target, per_output=True)
    assert rmse(pred, target) == pytest.approx(np.sqrt(np.mean(per**2)))


def test_improvement_rates_trivial_cases():
    base = np.ones((4, 4))
    assert improvement_rates(base, base) == (0.0, 0.0)
    assert improvement_rates(base, base * 0.5) == (100.0, 100.0)


def test_improvement_rates_constructed_case():
    # mean improves for 2 of 3 trajectories, all variables only for 1
    base = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]])
    proj = np.array([[0.5, 0.5], [0.3, 1.2], [1.2, 1.1]])
    r_mean, r_all = improvement_rates(base, proj)
    assert r_mean == pytest.approx(200.0 / 3.0, abs=0.01)
    assert r_all == pytest.approx(100.0 / 3.0, abs=0.01)


def test_r_all_never_exceeds_r_mean():
    rng = np.random.default_rng(1)
    for _ in range(50):
        base = rng.uniform(0.1, 1.0, size=(10, 4))
        proj = rng.uniform(0.1, 1.0, size=(10, 4))
        r_mean, r_all = improvement_rates(base, proj)
        assert r_all <= r_mean + 1e-12


def test_variation_rate():
    assert rmse_variation_rate(0.05, 0.05) == 0.0
    assert rmse_variation_rate(0.050, 0.048) == pytest.approx(-4.0)
    assert rmse_variation_rate(1.0, 0.5) < 0.0
    with pytest.raises(ValidationError):
        rmse_variation_rate(0.0, 1.0)


# ---------------------------------------------------------------------------
# config


def test_config_from_json_with_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"kind": "timing", "ltp_n_samples": 123, "sizes": [10, 20]}))
    cfg = load_config(path, {"seed": 9, "out_dir": str(tmp_path)})
    assert cfg.kind == "timing" and cfg.ltp_n_samples == 123 and cfg.seed == 9
    assert cfg.sizes == (10, 20)


def test_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"not_a_field": 1}))
    with pytest.raises(ValidationError):
        load_config(path)


def test_config_missing_file():
    with pytest.raises(ValidationError):
        load_config("/nonexistent/cfg.json")


def test_config_validation_errors():
    with pytest.raises(ValidationError):
        ExperimentConfig(kind="bogus").validate()
    with pytest.raises(ValidationError):
        ExperimentConfig(architectures=()).validate()
    with pytest.raises(ValidationError):
        ExperimentConfig(split_fractions=(0.5, 0.2, 0.2)).validate()


# ---------------------------------------------------------------------------
# experiments (tiny scale)


def _strip_time_columns(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        keep = [i for i, name in enumerate(header) if not name.endswith("_seconds")]
        lines = [",".join(header[i] for i in keep)]
        for line in fh:
            cells = line.rstrip("\n").split(",")
            lines.append(",".join(cells[i] for i in keep))
    return "\n".join(lines)


def _run_twice_and_compare(kind, extra, tmp_path):
    out = tmp_path / kind
    cfg = ExperimentConfig(kind=kind, out_dir=str(out), **extra)
    run_experiment(cfg)
    first = {
        name: _strip_time_columns(out / name)
        for name in sorted(os.listdir(out))
        if name.endswith(".csv")
    }
    run_experiment(cfg)  # same directory: out_dir identical in the manifest
    for name, before in first.items():
        assert _strip_time_columns(out / name) == before, f"{kind}/{name} not reproducible"
    return out


def test_spring_single_artifacts_and_determinism(tmp_path):
    out = _run_twice_and_compare("spring-single", TINY_SPRING, tmp_path)
    files = set(os.listdir(out))
    assert {"manifest.txt", "rmse_summary.csv", "trajectory_truth.csv", "trajectory_nn.csv"} <= files
    with open(out / "rmse_summary.csv") as fh:
        rows = fh.read().strip().splitlines()
    assert rows[0] == "model,rmse_x1,rmse_v1,rmse_x2,rmse_v2,rmse_energy_J"
    assert len(rows) == 5  # header + 4 models
    with open(out / "trajectory_nn.csv") as fh:
        assert len(fh.read().strip().splitlines()) == TINY_SPRING["spring_steps_single"] + 2


def test_spring_many_artifacts(tmp_path):
    out = _run_twice_and_compare("spring-many", TINY_SPRING, tmp_path)
    with open(out / "trajectories.csv") as fh:
        rows = fh.read().strip().splitlines()
    # header + trajectories x models x (4 states + energy)
    assert len(rows) == 1 + TINY_SPRING["spring_n_trajectories"] * 4 * 5
    with open(out / "rates.csv") as fh:
        rates = fh.read().strip().splitlines()
    assert rates[0] == "pair,r_mean_pct,r_all_pct,n_trajectories_used"
    assert len(rates) == 3


def test_ltp_compare_artifacts(tmp_path):
    out = _run_twice_and_compare("ltp-compare", TINY_LTP, tmp_path)
    with open(out / "per_output_rmse.csv") as fh:
        rows = fh.read().strip().splitlines()
    assert len(rows) == 1 + 4 * 17
    with open(out / "ablation.csv") as fh:
        rows = fh.read().strip().splitlines()
    # nn + all + 3 singles + 3 pairs, 17 outputs each
    assert len(rows) == 1 + 8 * 17
    with open(out / "constraint_rmse.csv") as fh:
        rows = fh.read().strip().splitlines()
    assert len(rows) == 1 + 4 * 3


def test_ablation_arch_sweep(tmp_path):
    extra = {**TINY_LTP, "architectures": (2, 8), "trend_architectures": (8,)}
    out = _run_twice_and_compare("ablation-arch", extra, tmp_path)
    with open(out / "sweep.csv") as fh:
        header = fh.readline().strip().split(",")
        rows = fh.read().strip().splitlines()
    assert len(rows) == 2
    # hand-counted parameter total for [3, 8, 8, 17]
    cells = rows[1].split(",")
    assert cells[0] == "8" and cells[1] == "257"
    # projection beats the raw network on the focus outputs at small widths
    i_var = header.index("variation_focus3_pct")
    assert all(float(r.split(",")[i_var]) < 0.0 for r in rows)
    assert os.path.exists(out / "trend_arch_8.csv")


def test_small_samples_sweep(tmp_path):
    extra = {**TINY_LTP, "pool_size": 200, "sizes": (20, 40), "n_resamples": 2, "trend_sizes": (40,)}
    out = _run_twice_and_compare("small-samples", extra, tmp_path)
    with open(out / "resamples.csv") as fh:
        rows = fh.read().strip().splitlines()
    assert len(rows) == 1 + 2 * 2
    with open(out / "sweep.csv") as fh:
        rows = fh.read().strip().splitlines()
    assert len(rows) == 3


def test_ltp_compare_with_ensemble(tmp_path):
    extra = {**TINY_LTP, "ltp_n_members": 2}
    out = tmp_path / "ens"
    cfg = ExperimentConfig(kind="ltp-compare", out_dir=str(out), **extra)
    report = run_experiment(cfg)
    assert set(report.per_output_rmse) == {"nn", "pinn", "nn_projection", "pinn_projection"}
    for law_rmse in report.constraint_rmse["nn_projection"].values():
        assert law_rmse <= 1e-7


def test_timing_artifacts(tmp_path):
    extra = {**TINY_LTP, "timing_n_test": 20}
    out = tmp_path / "timing"
    cfg = ExperimentConfig(kind="timing", out_dir=str(out), **extra)
    report = run_experiment(cfg)
    assert {"data_generation_seconds", "training_seconds", "inference_seconds", "projection_seconds"} <= set(
        report.phase_seconds
    )
    with open(out / "timing.csv") as fh:
        rows = fh.read().strip().splitlines()
    assert rows[0] == "phase,n_points,phase_seconds"
    assert all(float(r.split(",")[2]) >= 0.0 for r in rows[1:])


def test_spring_dataset_csv_round_trip(tmp_path):
    from physproj import springmass as sm

    inputs, targets = sm.generate_dataset(sm.SpringParams(), 5.0, 20, 0.05, 10, seed=0)
    path = tmp_path / "ds.csv"
    write_spring_dataset_csv(path, inputs, targets)
    x2, y2 = load_spring_dataset_csv(path)
    assert np.array_equal(inputs, x2)
    assert np.array_equal(targets, y2)


# ---------------------------------------------------------------------------
# CLI


def _write_cfg(tmp_path, extra=None):
    cfg = {
        "seed": 5,
        "spring_n_samples": 300,
        "spring_epochs": 2,
        "spring_hidden": [6, 6],
        "spring_steps_single": 4,
        "ltp_n_samples": 120,
        "ltp_max_epochs": 5,
        "ltp_hidden": [6, 6],
    }
    cfg.update(extra or {})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_cli_full_round_trip(tmp_path):
    cfg = _write_cfg(tmp_path)
    assert cli_main(["gen-data", "spring", "--config", cfg, "--out-dir", str(tmp_path / "gs")]) == 0
    assert os.path.exists(tmp_path / "gs" / "spring_dataset.csv")
    assert cli_main(["gen-data", "ltp-synthetic", "--config", cfg, "--out-dir", str(tmp_path / "gl")]) == 0
    assert cli_main(["train", "spring", "--config", cfg, "--out-dir", str(tmp_path / "ms")]) == 0
    assert cli_main(["train", "ltp", "--physics", "--config", cfg, "--out-dir", str(tmp_path / "ml")]) == 0
    model = str(tmp_path / "ms" / "model.txt")
    assert cli_main(["rollout", "--model", model, "--project", "--config", cfg, "--out-dir", str(tmp_path / "r")]) == 0
    with open(tmp_path / "r" / "trajectory.csv") as fh:
        assert len(fh.read().strip().splitlines()) == 6  # header + 5 states
    assert cli_main(["project", "spring", "--model", model, "--config", cfg, "--out-dir", str(tmp_path / "ps")]) == 0
    ltp_model = str(tmp_path / "ml" / "model.txt")
    assert cli_main(["project", "ltp", "--model", ltp_model, "--config", cfg, "--out-dir", str(tmp_path / "pl")]) == 0
    with open(tmp_path / "pl" / "projected.csv") as fh:
        header = fh.readline().strip().split(",")
    assert header[:5] == ["index", "status", "iterations", "kkt_norm", "item_seconds"]


def test_cli_experiment_and_manifest(tmp_path):
    cfg = _write_cfg(tmp_path, {"timing_n_test": 10})
    out = tmp_path / "exp"
    assert cli_main(["experiment", "timing", "--config", cfg, "--out-dir", str(out)]) == 0
    with open(out / "manifest.txt") as fh:
        manifest = fh.read()
    assert "ltp_n_samples=120" in manifest
    assert "kind=timing" in manifest


def test_cli_validation_exit_code(tmp_path):
    assert cli_main(["experiment", "timing", "--config", "/nonexistent.json"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bogus_key": 1}))
    assert cli_main(["experiment", "timing", "--config", str(bad)]) == 1


def test_cli_numerical_failure_exit_code(tmp_path):
    # a dataset with non-finite values makes training diverge -> exit code 2
    ds = tmp_path / "broken.csv"
    header = "x1,v1,x2,v2,x1_next,v1_next,x2_next,v2_next"
    rows = [",".join(["nan"] * 8) for _ in range(50)]
    ds.write_text(header + "\n" + "\n".join(rows) + "\n")
    cfg = _write_cfg(tmp_path, {"spring_dataset_csv": str(ds)})
    assert cli_main(["train", "spring", "--config", cfg, "--out-dir", str(tmp_path / "m")]) == 2
