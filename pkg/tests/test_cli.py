import pandas as pd
import pytest

from mqbsts.cli import EXIT_DATA, EXIT_NUMERICAL, EXIT_USAGE, main

FAST_TRAIN = ["--iterations", "30", "--burn-in", "10", "--no-trend"]


@pytest.fixture
def sim_dir(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--n", "40", "--seed", "1", "--out", str(out)]) == 0
    return out


def test_simulate_writes_dataset_and_truth(sim_dir):
    assert (sim_dir / "dataset.csv").exists()
    assert (sim_dir / "truth.json").exists()
    frame = pd.read_csv(sim_dir / "dataset.csv")
    assert len(frame) == 40
    assert "y.series1" in frame.columns and "x.series3.x8" in frame.columns


def test_train_forecast_evaluate_pipeline(sim_dir, tmp_path):
    out = tmp_path / "run"
    code = main(["train", "--data", str(sim_dir / "dataset.csv"),
                 "--tau", "0.9", "--out", str(out)] + FAST_TRAIN)
    assert code == 0
    for name in ("draws.csv", "meta.json", "inclusion.csv", "coefficients.csv"):
        assert (out / name).exists()
    inclusion = pd.read_csv(out / "inclusion.csv")
    assert len(inclusion) == 24

    future = tmp_path / "future.csv"
    frame = pd.read_csv(sim_dir / "dataset.csv")
    frame.tail(1).to_csv(future, index=False)
    code = main(["forecast", "--draws", str(out / "draws.csv"),
                 "--meta", str(out / "meta.json"), "--future", str(future),
                 "--out", str(out)])
    assert code == 0
    forecasted = pd.read_csv(out / "forecast.csv")
    assert list(forecasted["series"]) == ["series1", "series2", "series3"]

    code = main(["evaluate", "--data", str(sim_dir / "dataset.csv"),
                 "--tau", "0.9", "--steps", "2", "--out", str(out)] + FAST_TRAIN)
    assert code == 0
    evaluation = pd.read_csv(out / "evaluation.csv")
    assert len(evaluation) == 2
    assert evaluation["cumulative_loss"].iloc[-1] >= 0.0


def test_train_multiple_chains(sim_dir, tmp_path):
    out = tmp_path / "chains"
    code = main(["train", "--data", str(sim_dir / "dataset.csv"),
                 "--tau", "0.9", "--chains", "2", "--out", str(out)] + FAST_TRAIN)
    assert code == 0
    for c in range(2):
        assert (out / f"draws_chain{c}.csv").exists()
        assert (out / f"inclusion_chain{c}.csv").exists()


def test_config_file_sets_defaults_but_flags_win(sim_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("iterations = 25\nburn_in = 5\nno_trend = true\nseed = 3\n")
    out = tmp_path / "cfgrun"
    code = main(["train", "--data", str(sim_dir / "dataset.csv"), "--tau", "0.9",
                 "--config", str(cfg), "--seed", "9", "--out", str(out)])
    assert code == 0
    assert len(pd.read_csv(out / "draws.csv")) == 20  # 25 - 5 from the file
    import json
    meta = json.loads((out / "meta.json").read_text())
    assert meta["seed"] == 9  # explicit flag beats the file value
    assert meta["iterations"] == 25


def test_outdir_environment_variable(sim_dir, tmp_path, monkeypatch):
    out = tmp_path / "envout"
    monkeypatch.setenv("MQBSTS_OUTDIR", str(out))
    code = main(["train", "--data", str(sim_dir / "dataset.csv"),
                 "--tau", "0.9"] + FAST_TRAIN)
    assert code == 0
    assert (out / "draws.csv").exists()


def test_usage_error_exit_code(sim_dir, capsys):
    code = main(["train", "--data", str(sim_dir / "dataset.csv"), "--tau", "1.5"]
                + FAST_TRAIN)
    assert code == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_data_error_exit_code(tmp_path, capsys):
    code = main(["train", "--data", str(tmp_path / "nope.csv"), "--tau", "0.9"]
                + FAST_TRAIN)
    assert code == EXIT_DATA


def test_numerical_error_exit_code(sim_dir, tmp_path, capsys):
    out = tmp_path / "run"
    main(["train", "--data", str(sim_dir / "dataset.csv"),
          "--tau", "0.9", "--out", str(out)] + FAST_TRAIN)
    # corrupt the stored error-base covariance so the forecast MAL draw fails
    draws = pd.read_csv(out / "draws.csv")
    for col in ("st.1.1", "st.2.2", "st.3.3"):
        draws[col] = -1.0
    draws.to_csv(out / "draws.csv", index=False)
    future = tmp_path / "future.csv"
    pd.read_csv(sim_dir / "dataset.csv").tail(1).to_csv(future, index=False)
    code = main(["forecast", "--draws", str(out / "draws.csv"),
                 "--meta", str(out / "meta.json"), "--future", str(future),
                 "--out", str(out)])
    assert code == EXIT_NUMERICAL
    assert "numerical" in capsys.readouterr().err


def test_evaluate_rejects_oversized_steps(sim_dir, capsys):
    code = main(["evaluate", "--data", str(sim_dir / "dataset.csv"),
                 "--tau", "0.9", "--steps", "35"] + FAST_TRAIN)
    assert code == EXIT_USAGE
