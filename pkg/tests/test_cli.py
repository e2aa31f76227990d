import json

import pandas as pd
import pytest

from tabqgan.cli import RunConfig, build_parser, main
from tabqgan.datasets import ADULT_SAMPLE, data_path, load_adult_sample
from tabqgan.schema import load_schema


@pytest.fixture
def adult_csv(tmp_path):
    path = tmp_path / "adult.csv"
    load_adult_sample().iloc[:300].to_csv(path, index=False)
    return path


def ingest(adult_csv, out, mode="boolean", extra=()):
    return main(["ingest", "--data", str(adult_csv), "--numeric", "age=5",
                 "--categorical", "income", "workclass", "--mode", mode, "--out", str(out), *extra])


def test_ingest_census_ten_qubits(adult_csv, tmp_path, capsys):
    assert ingest(adult_csv, tmp_path / "ing") == 0
    assert "[n6,c4] boolean, 10 qubits" in capsys.readouterr().out
    schema = load_schema(tmp_path / "ing" / "schema.json")
    assert schema.names == ["age", "income", "workclass"]
    enc = pd.read_csv(tmp_path / "ing" / "encoded.csv", dtype={"bits": str})
    assert len(enc) == 300 and enc["bits"].str.len().eq(10).all()


def test_ingest_is_deterministic(adult_csv, tmp_path):
    ingest(adult_csv, tmp_path / "a")
    ingest(adult_csv, tmp_path / "b")
    assert (tmp_path / "a" / "schema.json").read_bytes() == (tmp_path / "b" / "schema.json").read_bytes()


def test_ingest_unknown_column(adult_csv, tmp_path, capsys):
    code = main(["ingest", "--data", str(adult_csv), "--categorical", "shoe_size", "--out", str(tmp_path)])
    assert code == 2 and "shoe_size" in capsys.readouterr().err


def test_ingest_empty_file(tmp_path):
    (tmp_path / "empty.csv").write_text("")
    assert main(["ingest", "--data", str(tmp_path / "empty.csv"), "--categorical", "a"]) == 2


def test_ingest_drops_and_reports_bad_rows(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("age,income\n30,<=50K\nabc,>50K\n41,>50K\n,<=50K\n")
    assert main(["ingest", "--data", str(path), "--numeric", "age=3", "--categorical", "income",
                 "--out", str(tmp_path / "o")]) == 0
    assert "rows dropped: 2 (data rows 2, 4)" in capsys.readouterr().out
    code = main(["ingest", "--data", str(path), "--numeric", "age=3", "--categorical", "income", "--strict",
                 "--out", str(tmp_path / "o")])
    assert code == 2 and "2, 4" in capsys.readouterr().err


def test_round_trip_train_generate_evaluate(adult_csv, tmp_path):
    ingest(adult_csv, tmp_path / "ing")
    schema = str(tmp_path / "ing" / "schema.json")
    run = tmp_path / "run"
    assert main(["train", "--schema", schema, "--data", str(adult_csv), "--out", str(run), "--epochs", "6",
                 "--depth", "1", "--checkpoint-every", "2"]) == 0
    for name in ("config.json", "schema.json", "checkpoint.json", "run_log.jsonl"):
        assert (run / name).is_file()
    log = [json.loads(x) for x in (run / "run_log.jsonl").read_text().splitlines()]
    assert [r["epoch"] for r in log] == list(range(1, 7))
    assert set(log[0]) == {"epoch", "loss_d", "loss_g", "kl"}

    synth = tmp_path / "synth.csv"
    assert main(["generate", "--checkpoint", str(run), "-n", "200", "--seed", "1", "--out", str(synth)]) == 0
    assert len(pd.read_csv(synth)) == 200
    report = tmp_path / "metrics.json"
    assert main(["evaluate", "--schema", schema, "--real", str(adult_csv), "--synth", str(synth),
                 "--target", "income", "--out", str(report)]) == 0
    metrics = json.loads(report.read_text())
    assert 0 <= metrics["overall"] <= 1 and "income" in metrics["downstream"]


def test_run_directory_is_self_describing(adult_csv, tmp_path):
    ingest(adult_csv, tmp_path / "ing")
    run = tmp_path / "run"
    main(["train", "--schema", str(tmp_path / "ing" / "schema.json"), "--data", str(adult_csv),
          "--out", str(run), "--epochs", "3"])
    # generation needs only the run directory, not the CSV
    adult_csv.unlink()
    assert main(["generate", "--checkpoint", str(run / "checkpoint.json"), "-n", "5",
                 "--out", str(tmp_path / "s.csv")]) == 0


def test_stored_config_reruns_identically(adult_csv, tmp_path):
    ingest(adult_csv, tmp_path / "ing")
    run = tmp_path / "run"
    main(["train", "--schema", str(tmp_path / "ing" / "schema.json"), "--data", str(adult_csv),
          "--out", str(run), "--epochs", "4", "--seed", "3"])
    first = (run / "checkpoint.json").read_bytes()
    config = RunConfig.from_dict(json.loads((run / "config.json").read_text()))
    assert config.training.seed == 3 and config.training.epochs == 4
    assert main(["train", "--config", str(run / "config.json")]) == 0
    assert (run / "checkpoint.json").read_bytes() == first


def test_resume_continues_run(adult_csv, tmp_path):
    ingest(adult_csv, tmp_path / "ing")
    schema = str(tmp_path / "ing" / "schema.json")
    common = ["--schema", schema, "--data", str(adult_csv), "--seed", "5"]
    main(["train", *common, "--out", str(tmp_path / "full"), "--epochs", "6"])
    main(["train", *common, "--out", str(tmp_path / "part"), "--epochs", "3"])
    assert main(["train", *common, "--out", str(tmp_path / "part"), "--epochs", "6", "--resume"]) == 0
    assert (tmp_path / "full" / "run_log.jsonl").read_bytes() == (tmp_path / "part" / "run_log.jsonl").read_bytes()
    assert (tmp_path / "full" / "checkpoint.json").read_bytes() == \
        (tmp_path / "part" / "checkpoint.json").read_bytes()


def test_generate_zero_rows_writes_header(adult_csv, tmp_path):
    ingest(adult_csv, tmp_path / "ing")
    main(["train", "--schema", str(tmp_path / "ing" / "schema.json"), "--data", str(adult_csv),
          "--out", str(tmp_path / "run"), "--epochs", "2"])
    out = tmp_path / "zero.csv"
    assert main(["generate", "--checkpoint", str(tmp_path / "run"), "-n", "0", "--out", str(out)]) == 0
    assert out.read_text().strip() == "age,income,workclass"


def test_output_root_from_environment(adult_csv, tmp_path, monkeypatch):
    monkeypatch.setenv("TABQGAN_OUT", str(tmp_path / "root"))
    assert main(["ingest", "--data", str(adult_csv), "--numeric", "age=5", "--categorical", "income"]) == 0
    assert (tmp_path / "root" / "ingest" / "schema.json").is_file()


def test_inspect_circuit_worked_example(capsys):
    assert main(["inspect-circuit", "--layout", "[n5,c3,c2]", "--depth", "1"]) == 0
    assert "total gates per layer: 20" in capsys.readouterr().out


def test_grid_dry_run_counts_cells(capsys):
    assert main(["grid", "--dry-run"]) == 0
    assert capsys.readouterr().out.strip().endswith("360 cells")


def test_grid_runs_cells(adult_csv, tmp_path):
    ingest(adult_csv, tmp_path / "ing")
    root = tmp_path / "grid"
    code = main(["grid", "--schema", str(tmp_path / "ing" / "schema.json"), "--data", str(adult_csv),
                 "--out", str(root), "--depths", "1", "--batch-fractions", "0.1", "--eta-gs", "0.1",
                 "--eta-ds", "0.05", "0.1", "--seeds", "0", "--epochs", "2", "--eval-rows", "100"])
    assert code == 0
    summary = json.loads((root / "summary.json").read_text())
    assert len(summary) == 2 and all(s["error"] is None for s in summary)
    for s in summary:
        metrics = json.loads((root / s["run"] / "metrics.json").read_text())
        assert metrics["num_params"] == 20 and (root / s["run"] / "config.json").is_file()


@pytest.mark.parametrize("argv", [
    ["generate", "--checkpoint", "/nonexistent/ckpt.json", "-n", "3"],
    ["train", "--schema", "/nonexistent/schema.json", "--data", "/nonexistent.csv"],
    ["train"],
    ["inspect-circuit"],
    ["inspect-circuit", "--layout", "[n5,c1]"],
    ["evaluate", "--schema", "/nonexistent.json", "--real", "a.csv", "--synth", "b.csv"],
])
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["train", "--shots", "zero"])
    assert info.value.code == 2


def test_training_failure_exits_1(adult_csv, tmp_path, monkeypatch):
    import tabqgan.cli as cli
    from tabqgan.exceptions import TrainingError

    def boom(*args, **kwargs):
        raise TrainingError("diverged")

    ingest(adult_csv, tmp_path / "ing")
    monkeypatch.setattr(cli, "train", boom)
    assert main(["train", "--schema", str(tmp_path / "ing" / "schema.json"), "--data", str(adult_csv),
                 "--out", str(tmp_path / "run"), "--epochs", "2"]) == 1
    # config and schema written before training are kept
    assert (tmp_path / "run" / "config.json").is_file()


def test_parser_exposes_spec_flags():
    actions = {a for p in build_parser()._subparsers._group_actions[0].choices.values()
               for a in p._option_string_actions}
    for flag in ("--schema", "--data", "--out", "--depth", "--batch-fraction", "--eta-g", "--eta-d", "--epochs",
                 "--seed", "--mode", "--shots"):
        assert flag in actions


def test_bundled_sample_path():
    assert data_path(ADULT_SAMPLE).is_file()
