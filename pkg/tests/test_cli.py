import numpy as np
import pytest

from gsinterp.cli import main


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_synth_schema_and_determinism(tmp_path):
    args = ["synth", "--n", "32", "--p", "0.5", "--sparsity", "0.1", "0.4",
            "--trials", "3", "--seed", "9", "--out", str(tmp_path / "a.csv"),
            "--no-plot"]
    assert main(args) == 0
    args2 = list(args)
    args2[args2.index(str(tmp_path / "a.csv"))] = str(tmp_path / "b.csv")
    assert main(args2) == 0
    assert read(tmp_path / "a.csv") == read(tmp_path / "b.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "#schema=v1"
    assert lines[1] == "p,sparsity,trial,snr_ratio,snr_db,iters_used"
    assert len(lines) == 2 + 2 * 3
    agg = (tmp_path / "a.agg.csv").read_text().splitlines()
    assert agg[1] == "p,sparsity,mean_snr_ratio,mean_snr_db,n_inf,n_trials"
    assert len(agg) == 2 + 2


def test_synth_p1_infinite_snr(tmp_path):
    out = tmp_path / "inf.csv"
    assert main(["synth", "--n", "24", "--p", "1.0", "--sparsity", "0.2",
                 "--trials", "1", "--iters", "1", "--epsilon", "0",
                 "--out", str(out), "--no-plot"]) == 0
    row = out.read_text().splitlines()[2].split(",")
    assert row[3] == "inf" and row[4] == "inf"


def test_synth_fixed_graph_differs(tmp_path):
    base = ["synth", "--n", "32", "--p", "0.6", "--sparsity", "0.2",
            "--trials", "2", "--seed", "4", "--no-plot"]
    assert main(base + ["--out", str(tmp_path / "fresh.csv")]) == 0
    assert main(base + ["--fixed-graph", "--out", str(tmp_path / "fixed.csv")]) == 0
    assert read(tmp_path / "fresh.csv") != read(tmp_path / "fixed.csv")


def test_synth_parallel_parity(tmp_path, monkeypatch):
    base = ["synth", "--n", "24", "--p", "0.5", "--sparsity", "0.2",
            "--trials", "4", "--seed", "2", "--no-plot"]
    monkeypatch.delenv("GSR_THREADS", raising=False)
    assert main(base + ["--out", str(tmp_path / "serial.csv")]) == 0
    monkeypatch.setenv("GSR_THREADS", "2")
    assert main(base + ["--out", str(tmp_path / "par.csv")]) == 0
    assert read(tmp_path / "serial.csv") == read(tmp_path / "par.csv")


def test_synth_renders_figure(tmp_path):
    assert main(["synth", "--n", "24", "--p", "0.5", "--sparsity", "0.2",
                 "--trials", "2", "--out", str(tmp_path / "f.csv")]) == 0
    assert (tmp_path / "f.png").exists()


def test_usage_errors(tmp_path, capsys):
    assert main(["synth", "--n", "32", "--p", "1.5", "--sparsity", "0.2",
                 "--trials", "1", "--out", str(tmp_path / "x.csv")]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["synth"])  # missing --out
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["probe", "--kind", "bogus", "--out", str(tmp_path / "x.csv")])
    assert exc.value.code == 1


def test_probe_lemma1(tmp_path):
    out = tmp_path / "l.csv"
    assert main(["probe", "--kind", "lemma1", "--n", "12", "--trials", "3000",
                 "--out", str(out), "--no-plot"]) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "quantity,component,estimate,theory,metric,pass"
    assert len(lines) == 2 + 12 + 1
    assert lines[-1].startswith("trace_variance")


def test_probe_lemma1_p1_zero_variance(tmp_path):
    out = tmp_path / "l1.csv"
    assert main(["probe", "--kind", "lemma1", "--n", "10", "--p", "1.0",
                 "--trials", "200", "--out", str(out), "--no-plot"]) == 0
    trace_row = out.read_text().splitlines()[-1].split(",")
    assert float(trace_row[2]) < 1e-24  # zero up to float round-off
    assert trace_row[-1] == "1"


def test_probe_contraction(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["probe", "--kind", "contraction", "--n", "24",
                 "--trials", "4000", "--iters", "6",
                 "--out", str(out), "--no-plot"]) == 0
    text = capsys.readouterr().out
    assert "lam*p=0.5" in text
    lines = out.read_text().splitlines()
    assert lines[-1].startswith("divergence")


def test_probe_variance(tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert main(["probe", "--kind", "variance", "--n", "32", "--trials", "400",
                 "--iters", "8", "--out", str(out), "--no-plot"]) == 0
    assert "MSE non-increasing" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert lines[1] == "k,mse,mse_stderr,sigma2,threshold,guard_sigma"
    assert len(lines) == 2 + 8


def test_recsys_file_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    rows = []
    for u in range(15):
        for i in range(20):
            if rng.random() < 0.7:
                rows.append(f"{u},{i},{rng.uniform(1, 5):.3f}")
    data = tmp_path / "ratings.csv"
    data.write_text("\n".join(rows) + "\n")
    out = tmp_path / "rep.csv"
    args = ["recsys", "--dataset", str(data), "--format", "csv-comma",
            "--method", "knn", "--seed", "1", "--iters", "5",
            "--out", str(out), "--no-plot"]
    assert main(args) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "dataset,method,fold,nrmse"
    assert lines[-1].startswith("ratings.csv,knn,mean,")
    out2 = tmp_path / "rep2.csv"
    args2 = list(args)
    args2[args2.index(str(out))] = str(out2)
    assert main(args2) == 0
    assert read(out).replace(b"rep.csv", b"") == read(out2).replace(b"rep2.csv", b"")


def test_recsys_figure(tmp_path):
    rng = np.random.default_rng(4)
    rows = [f"{u}\t{i}\t{rng.integers(1, 6)}\t0"
            for u in range(12) for i in range(15) if rng.random() < 0.8]
    data = tmp_path / "u.data"
    data.write_text("\n".join(rows) + "\n")
    out = tmp_path / "rep.csv"
    assert main(["recsys", "--dataset", str(data), "--method", "ilsr",
                 "--iters", "5", "--out", str(out)]) == 0
    assert (tmp_path / "rep.png").exists()


def test_recsys_missing_file_exit_2(tmp_path):
    assert main(["recsys", "--dataset", "/no/such/file", "--method", "imatgi",
                 "--out", str(tmp_path / "r.csv"), "--no-plot"]) == 2
