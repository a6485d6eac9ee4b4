import csv
import math

import pytest

from zkpfedeval import cli
from zkpfedeval.errors import ConfigError
from zkpfedeval.harness import (
    COLUMNS,
    SUMMARY_COLUMNS,
    TIMING_COLUMNS,
    ExperimentConfig,
    MetricsRow,
    linear_fit,
    parse_distribution,
    read_rows,
    run_experiment,
    scaling_run,
    summarize,
    write_rows,
)

from synth import har_like, mnist_like, write_har_dir, write_mnist_dir

HAR = (har_like(4000, 0), har_like(120, 1))


def test_column_order():
    assert COLUMNS == [
        "dataset", "n_clients", "threshold", "seed", "distribution", "backend", "transport", "batch_size",
        "mean_client_time_s", "mean_verify_time_s", "total_verify_time_s", "proof_size_bytes",
        "submission_size_bytes", "total_upload_bytes", "valid_count", "decline_count", "reject_count",
        "validation_rate",
    ]


@pytest.mark.parametrize(
    "text, parsed",
    [("iid", ("iid", None)), ("noniid", ("noniid", 0.5)), ("noniid:0.1", ("noniid", 0.1)), ("NonIID:2", ("noniid", 2.0))],
)
def test_parse_distribution(text, parsed):
    assert parse_distribution(text) == parsed


@pytest.mark.parametrize("text", ["dirichlet", "noniid:x", "noniid:0", "noniid:-1"])
def test_parse_distribution_errors(text):
    with pytest.raises(ConfigError):
        parse_distribution(text)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(dataset="cifar"),
        dict(n_clients=0),
        dict(threshold=-0.5),
        dict(threshold=5000.0),
        dict(transport="udp"),
        dict(backend="plonk"),
        dict(backend="mock", secure=True),
        dict(seeds=()),
        dict(distribution="weird"),
    ],
)
def test_config_validation(kwargs):
    base = dict(dataset="har", n_clients=5, threshold=1.0)
    base.update(kwargs)
    with pytest.raises(ConfigError):
        ExperimentConfig(**base)


def test_batch_size_override_warns():
    with pytest.warns(UserWarning):
        ExperimentConfig("har", 5, 1.0, batch_size=64)


def test_run_experiment_rows(tmp_path):
    cfg = ExperimentConfig("har", 4, 1.0, seeds=[0, 1], backend="snark", key_dir=str(tmp_path))
    rows = run_experiment(cfg, data=HAR)
    assert [r.seed for r in rows] == [0, 1]
    for r in rows:
        assert r.valid_count + r.decline_count + r.reject_count == 4
        assert r.validation_rate == r.valid_count / 4
        assert r.proof_size_bytes == 193
        assert r.total_upload_bytes >= r.valid_count * r.submission_size_bytes
        assert r.mean_client_time_s > 0


def test_non_timing_columns_are_deterministic(tmp_path):
    cfg = ExperimentConfig("har", 3, 1.0, seeds=[5], backend="mock", distribution="noniid:0.5", key_dir=str(tmp_path))
    a, b = run_experiment(cfg, data=HAR)[0], run_experiment(cfg, data=HAR)[0]
    for col in COLUMNS:
        if col not in TIMING_COLUMNS:
            assert getattr(a, col) == getattr(b, col), col


def test_all_declines_leave_verify_columns_empty(tmp_path):
    cfg = ExperimentConfig("har", 3, 0.000001, seeds=[0], backend="mock", key_dir=str(tmp_path))
    (row,) = run_experiment(cfg, data=HAR)
    assert row.valid_count == 0 and row.decline_count == 3
    assert row.mean_verify_time_s is None and row.proof_size_bytes is None
    assert row.validation_rate == 0.0
    path = tmp_path / "r.csv"
    write_rows(path, [row])
    assert read_rows(path) == [row]


def make_row(**kw):
    base = dict(
        dataset="mnist", n_clients=5, threshold=1.0, seed=0, distribution="iid", backend="snark",
        transport="inproc", batch_size=32, mean_client_time_s=1.0, mean_verify_time_s=0.01,
        total_verify_time_s=0.05, proof_size_bytes=193, submission_size_bytes=1024, total_upload_bytes=5120,
        valid_count=5, decline_count=0, reject_count=0, validation_rate=1.0,
    )
    base.update(kw)
    return MetricsRow(**base)


def test_csv_round_trip(tmp_path):
    rows = [make_row(seed=s, mean_client_time_s=0.1 * (s + 1)) for s in range(3)]
    path = tmp_path / "rows.csv"
    write_rows(path, rows)
    with open(path) as fh:
        assert next(csv.reader(fh)) == COLUMNS
    assert read_rows(path) == rows


def test_read_rows_rejects_other_headers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ConfigError):
        read_rows(path)


def test_summarize_example():
    rows = [
        make_row(seed=0, validation_rate=1.0, mean_client_time_s=2.0),
        make_row(seed=1, validation_rate=0.8, mean_client_time_s=4.0),
        make_row(seed=2, validation_rate=0.6, mean_client_time_s=3.0),
        make_row(dataset="har", n_clients=10, validation_rate=0.5),
    ]
    out = summarize(rows)
    assert [(r["dataset"], r["n_clients"]) for r in out] == [("har", 10), ("mnist", 5)]
    mnist = out[1]
    assert list(mnist) == SUMMARY_COLUMNS
    assert mnist["valid_proofs_pct"] == pytest.approx(80.0)
    assert mnist["client_time_s"] == pytest.approx(3.0)
    assert mnist["comm_cost_kib"] == pytest.approx(1.0)
    assert mnist["proof_size_bytes"] == 193
    assert mnist["rows"] == 3
    with pytest.raises(ConfigError):
        summarize([])


def test_linear_fit():
    slope, intercept, r2 = linear_fit([5, 10, 20, 50], [0.05, 0.1, 0.2, 0.5])
    assert slope == pytest.approx(0.01) and intercept == pytest.approx(0.0, abs=1e-12) and r2 == pytest.approx(1.0)
    _, _, r2 = linear_fit([1, 2, 3, 4], [1, 3, 2, 4])
    assert r2 == pytest.approx(0.64)


def test_scaling_run(tmp_path):
    res = scaling_run("har", 1.0, clients=[2, 4, 8], data=HAR, key_dir=tmp_path)
    assert [r["n_clients"] for r in res.rows] == [2, 4, 8]
    assert all(r["valid_count"] == r["n_clients"] for r in res.rows)
    assert res.slope > 0


def test_scaling_with_no_valid_proofs(tmp_path):
    res = scaling_run("har", 0.000001, clients=[2, 4], data=HAR, key_dir=tmp_path)
    assert all(r["total_verify_time_s"] == 0.0 and r["per_proof_time_s"] is None for r in res.rows)
    assert res.r_squared == 1.0 or math.isnan(res.r_squared) or res.slope == 0


# -- command line --------------------------------------------------------------


def test_cli_run_summarize_scaling(tmp_path, capsys):
    data = write_har_dir(tmp_path / "har", n_train=3000, n_test=60)
    out = tmp_path / "results.csv"
    keys = tmp_path / "keys"
    rc = cli.main([
        "run", "--dataset", "har", "--clients", "2,3", "--threshold", "0.5,1.0", "--seeds", "0",
        "--data-dir", str(data), "--key-dir", str(keys), "--out", str(out), "--any-size",
    ])
    assert rc == 0
    rows = read_rows(out)
    assert len(rows) == 4
    assert {(r.n_clients, r.threshold) for r in rows} == {(2, 0.5), (2, 1.0), (3, 0.5), (3, 1.0)}

    summary = tmp_path / "summary.csv"
    assert cli.main(["summarize", str(out), "--out", str(summary)]) == 0
    with open(summary) as fh:
        assert next(csv.reader(fh)) == SUMMARY_COLUMNS

    scaling = tmp_path / "scaling.csv"
    rc = cli.main([
        "scaling", "--dataset", "har", "--clients", "2,4", "--data-dir", str(data),
        "--key-dir", str(keys), "--out", str(scaling), "--any-size",
    ])
    assert rc == 0
    assert "R^2=" in capsys.readouterr().out


def test_cli_mnist_mock(tmp_path):
    data = write_mnist_dir(tmp_path / "mnist", n_train=200, n_test=40)
    out = tmp_path / "m.csv"
    rc = cli.main([
        "run", "--dataset", "mnist", "--clients", "2", "--seeds", "0", "--backend", "mock",
        "--transport", "tcp", "--data-dir", str(data), "--out", str(out), "--any-size",
    ])
    assert rc == 0
    assert read_rows(out)[0].transport == "tcp"


def test_cli_missing_data_exits_3(tmp_path, capsys):
    rc = cli.main(["run", "--dataset", "mnist", "--data-dir", str(tmp_path), "--out", str(tmp_path / "x.csv")])
    assert rc == 3
    assert "missing data file" in capsys.readouterr().err


def test_cli_size_mismatch_exits_3(tmp_path):
    data = write_har_dir(tmp_path, n_train=20, n_test=10)
    assert cli.main(["run", "--dataset", "har", "--data-dir", str(data), "--out", str(tmp_path / "x.csv")]) == 3


def test_cli_config_errors_exit_2(tmp_path):
    data = write_har_dir(tmp_path, n_train=20, n_test=10)
    base = ["run", "--dataset", "har", "--data-dir", str(data), "--any-size", "--out", str(tmp_path / "x.csv")]
    assert cli.main(base + ["--threshold", "-1"]) == 2
    assert cli.main(base + ["--backend", "mock", "--secure"]) == 2
    assert cli.main(base + ["--dist", "zipf"]) == 2
    assert cli.main(base + ["--clients", "11"]) == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "--dataset", "har", "--clients", "x", "--data-dir", "."])
    assert exc.value.code == 2


def test_cli_summarize_missing_file(tmp_path):
    assert cli.main(["summarize", str(tmp_path / "nope.csv")]) == 3
