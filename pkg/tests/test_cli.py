import json

import numpy as np
import pytest

from prodgraph import io
from prodgraph.cli import main


@pytest.fixture(scope="module")
def product_data(tmp_path_factory):
    out = tmp_path_factory.mktemp("sample")
    assert main(["sample", "--kind", "cartesian", "--dims", "4,4", "--num-samples", "300",
                 "--seed", "3", "--out", str(out)]) == 0
    return out


def read_manifest(d):
    return json.loads((d / "manifest.json").read_text())


def test_generate(tmp_path):
    assert main(["generate", "--family", "erdos_renyi", "--n", "8", "--seed", "1", "--out", str(tmp_path)]) == 0
    W = io.read_adjacency_csv(tmp_path / "W.csv")
    assert W.n == 8
    assert io.read_edge_list(tmp_path / "W.tsv") == W
    m = read_manifest(tmp_path)
    assert m["command"] == "generate" and m["seeds"] == [1]
    assert "W.csv" in m["outputs"]


def test_sample_outputs(product_data):
    X = io.read_signals(product_data / "signals.pgtn")
    assert X.shape == (300, 4, 4)
    assert (product_data / "true_factor_1.csv").exists()


def test_learn_writes_graph_residuals_and_manifest(product_data, tmp_path):
    rc = main(["learn", "--input", str(product_data / "signals.pgtn"), "--alpha", "auto",
               "--rho", "auto", "--max-iter", "300", "--out", str(tmp_path)])
    assert rc == 0
    assert io.read_adjacency_csv(tmp_path / "W.csv").n == 16
    rows = io.read_rows_csv(tmp_path / "residuals.csv")
    assert len(rows) == 300
    m = read_manifest(tmp_path)
    assert np.isclose(m["config"]["alpha"], np.sqrt(np.log(16) / 300))
    assert m["termination"] == ["max-iter"]
    assert str(product_data / "signals.pgtn") in m["inputs"]


def test_learn_product(product_data, tmp_path):
    rc = main(["learn-product", "--kind", "cartesian", "--dims", "4,4", "--input",
               str(product_data / "signals.pgtn"), "--max-iter", "2000", "--out", str(tmp_path)])
    assert rc == 0
    assert io.read_adjacency_csv(tmp_path / "factor_0.csv").n == 4
    hist = [float(r["objective"]) for r in io.read_rows_csv(tmp_path / "objective_history.csv")]
    assert all(b <= a for a, b in zip(hist, hist[1:]))


def test_dims_mismatch_is_usage_error(product_data, tmp_path, capsys):
    rc = main(["learn-product", "--kind", "cartesian", "--dims", "4,5", "--input",
               str(product_data / "signals.pgtn"), "--out", str(tmp_path)])
    assert rc == 2
    assert "dims product mismatch" in capsys.readouterr().err


def test_unknown_flag_named(capsys):
    assert main(["learn", "--bogus", "1"]) == 2
    assert "--bogus" in capsys.readouterr().err


def test_missing_input_is_usage_error(tmp_path):
    assert main(["learn", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2


def test_runtime_error_exit_1(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1\n0,0\n")
    truth = tmp_path / "t.csv"
    truth.write_text("0,1\n1,0\n")
    assert main(["eval", "--estimate", str(bad), "--truth", str(truth), "--out", str(tmp_path)]) == 1


def test_config_file_with_flag_override(product_data, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"input = {product_data / 'signals.pgtn'}\nmax_iter = 40\nalpha = 0.3\n")
    assert main(["learn", "--config", str(cfg), "--alpha", "0.2", "--out", str(tmp_path)]) == 0
    m = read_manifest(tmp_path)
    assert m["config"]["alpha"] == 0.2
    assert m["config"]["max_iter"] == 40
    cfg.write_text("unknown_key = 1\n")
    assert main(["learn", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_eval_and_predict(product_data, tmp_path):
    assert main(["eval", "--estimate", str(product_data / "true_factor_0.csv"),
                 "--truth", str(product_data / "true_factor_0.csv"), "--out", str(tmp_path)]) == 0
    row = io.read_rows_csv(tmp_path / "metrics.csv")[0]
    assert float(row["f_measure"]) == 1.0
    rc = main(["predict", "--input", str(product_data / "signals.pgtn"),
               "--train", str(product_data / "signals.pgtn"), "--miss-mode", "1", "--miss-index", "0",
               "--surrogate", "scm", "--surrogate", f"graph:{product_data / 'true_W.csv'}",
               "--out", str(tmp_path)])
    assert rc == 0
    rows = io.read_rows_csv(tmp_path / "predict.csv")
    assert [r["surrogate"] for r in rows][0] == "scm"
    assert float(rows[0]["db_vs_scm"]) == 0.0


def test_predict_out_of_range_slab(product_data, tmp_path):
    rc = main(["predict", "--input", str(product_data / "signals.pgtn"), "--miss-mode", "2",
               "--miss-index", "0", "--surrogate", f"cov:{product_data / 'true_W.csv'}",
               "--out", str(tmp_path)])
    assert rc == 1


def test_scaling_study_and_bench(tmp_path):
    rc = main(["scaling-study", "--kind", "strong", "--dims", "3,3", "--m-grid", "20,200",
               "--num-seeds", "2", "--max-iter", "300", "--max-sweeps", "2", "--out", str(tmp_path)])
    assert rc == 0
    rows = io.read_rows_csv(tmp_path / "scaling.csv")
    assert len(rows) == 2 * 2 * 2
    assert read_manifest(tmp_path)["seeds"] == [0, 1]
    rc = main(["bench", "--dims", "3,3", "--num-samples", "50", "--repeats", "1", "--warmup", "0",
               "--max-iter", "200", "--out", str(tmp_path)])
    assert rc == 0
    assert [r["method"] for r in io.read_rows_csv(tmp_path / "bench.csv")] == ["glp", "bpgl"]


def test_rerun_is_deterministic(product_data, tmp_path):
    outs = []
    for d in ("a", "b"):
        main(["learn", "--input", str(product_data / "signals.pgtn"), "--max-iter", "200",
              "--out", str(tmp_path / d)])
        outs.append((tmp_path / d / "W.csv").read_bytes())
    assert outs[0] == outs[1]
