import json
import subprocess
import sys

import numpy as np
import pytest

from residual_sketch import cli, testkit as tk
from residual_sketch.datasets import Triplets, write_matrixmarket, write_uci_bow


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def strip_timings(obj):
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k != "timings_ms"}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj


@pytest.fixture
def small_mm(tmp_path):
    A = tk.low_rank_plus_noise(40, 30, 3, seed=1, signal=[50, 40, 30])
    p = tmp_path / "a.mtx"
    write_matrixmarket(p, Triplets.from_matrix(A))
    return p, A


def test_lowrank_report(capsys, small_mm, tmp_path):
    path, A = small_mm
    out = tmp_path / "r.json"
    code, rep = run(capsys, "lowrank", "--dataset", path, "--k", 3, "--m", 12, "--trials", 3,
                    "--with-exact", "--json-out", out)
    assert code == 0
    assert rep["command"] == "lowrank" and rep["dataset"] == str(path)
    assert rep["params"]["family"] == "osnap" and rep["params"]["m"] == 12
    assert len(rep["trials"]) == 3
    assert rep["exact"] == pytest.approx(tk.exact_matrix_residual(A, 3))
    assert rep["eps_rel"] == pytest.approx(np.mean([t["eps_rel"] for t in rep["trials"]]))
    assert all(t["estimate"] >= 0 for t in rep["trials"])
    assert all(v >= 0 for v in rep["timings_ms"].values())
    assert json.loads(out.read_text()) == rep


def test_lowrank_without_exact_has_no_eps(capsys, small_mm):
    code, rep = run(capsys, "lowrank", "--dataset", small_mm[0], "--k", 2, "--m", 8, "--trials", 1)
    assert code == 0 and rep["exact"] is None and rep["eps_rel"] is None
    assert rep["trials"][0]["eps_rel"] is None


@pytest.mark.parametrize("family", ["countsketch", "jl", "osnap", "gaussian", "composed"])
def test_lowrank_families(capsys, small_mm, family):
    code, rep = run(capsys, "lowrank", "--dataset", small_mm[0], "--k", 2, "--m", 10,
                    "--family", family, "--trials", 2)
    assert code == 0 and rep["estimate"] > 0


def test_report_determinism(capsys, small_mm):
    args = ("lowrank", "--dataset", small_mm[0], "--k", 2, "--m", 10, "--trials", 3,
            "--seed", 42, "--with-exact")
    _, a = run(capsys, *args)
    _, b = run(capsys, *args)
    assert strip_timings(a) == strip_timings(b)
    _, c = run(capsys, *args[:-2], 43, "--with-exact")
    assert strip_timings(c)["estimate"] != strip_timings(a)["estimate"]


def test_zero_matrix(capsys, tmp_path):
    p = tmp_path / "z.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n5 4 0\n")
    code, rep = run(capsys, "lowrank", "--dataset", p, "--k", 1, "--m", 3, "--trials", 2,
                    "--with-exact")
    assert code == 0
    assert rep["estimate"] == 0.0 and rep["exact"] == 0.0
    assert rep["eps_rel"] is None and rep["exact_is_zero"] is True


def test_bow_and_stream_formats(capsys, tmp_path):
    t = Triplets.from_lists([0, 1, 2, 2], [0, 3, 1, 2], [1.0, 2.0, 3.0, 4.0], (3, 4))
    write_uci_bow(tmp_path / "d.txt", t)
    code, rep = run(capsys, "exact", "--dataset", tmp_path / "d.txt", "--format", "bow", "--k", 1)
    assert code == 0 and rep["shape"] == [3, 4]
    (tmp_path / "s.txt").write_text("0 0 1.0\n1 3 2.0\n2 1 3.0\n2 2 4.0\n")
    code, rep2 = run(capsys, "exact", "--dataset", tmp_path / "s.txt", "--format", "stream",
                     "--k", 1, "--n", 3, "--d", 4)
    assert rep2["exact"] == pytest.approx(rep["exact"])


def test_vector_and_recover(capsys, tmp_path):
    p = tmp_path / "v.txt"
    code, gen = run(capsys, "gen", "zipf", "--n", 3000, "--updates", 30000, "--seed", 2, "--out", p)
    assert code == 0 and gen["updates"] == 30000
    code, rep = run(capsys, "vector", "--dataset", p, "--n", 3000, "--k", 5, "--p", 3,
                    "--eps", 0.5, "--trials", 3, "--with-exact")
    assert code == 0
    assert rep["params"]["buckets"] > 0 and rep["params"]["rows"] == 35
    assert abs(rep["eps_rel"]) <= 0.5
    code, rec = run(capsys, "recover", "--dataset", p, "--n", 3000, "--k", 5, "--with-exact")
    assert code == 0 and len(rec["recovered"]) == 5
    assert rec["ratio"] <= 1.5


def test_vector_k_sparse_is_exact(capsys, tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("10 50\n900 -70\n10 5\n4000 33\n")
    code, rep = run(capsys, "vector", "--dataset", p, "--n", 5000, "--k", 3, "--trials", 2,
                    "--with-exact")
    assert code == 0 and rep["exact"] == 0.0 and rep["estimate"] == pytest.approx(0, abs=1e-9)
    assert rep["eps_rel"] is None and rep["exact_is_zero"]


def test_vector_zero_stream(capsys, tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("3 5\n3 -5\n")
    code, rep = run(capsys, "vector", "--dataset", p, "--n", 100, "--k", 2, "--trials", 1)
    assert code == 0 and rep["estimate"] == 0.0


def test_bench_tiny(capsys, tmp_path):
    A = np.random.default_rng(0).standard_normal((10, 10))
    write_matrixmarket(tmp_path / "t.mtx", Triplets.from_matrix(A))
    code, rep = run(capsys, "bench", "--dataset", tmp_path / "t.mtx", "--k", 2, "--m", 4,
                    "--trials", 2)
    assert code == 0
    for fam in ("osnap", "gaussian"):
        assert rep[fam]["params"]["family"] == fam
        assert all(v >= 0 for v in rep[fam]["timings_ms"].values())


def test_gen_hard_and_gap(capsys, tmp_path):
    code, rep = run(capsys, "gen", "hard", "--k", 2, "--eps", 0.25, "--which", "D2",
                    "--out", tmp_path / "h.txt")
    assert code == 0 and rep["shape"] == [32, 2] and rep["alpha"] > 0
    code, rep = run(capsys, "exact", "--dataset", tmp_path / "h.txt", "--format", "stream",
                    "--k", 1)
    assert code == 0 and rep["exact"] > 0
    code, rep = run(capsys, "gen", "gap", "--k", 5, "--block", 100, "--spike", 8,
                    "--out", tmp_path / "g.txt")
    assert code == 0 and rep["n"] == 500
    code, rec = run(capsys, "recover", "--dataset", tmp_path / "g.txt", "--n", 500,
                    "--k", len(rep["planted"]) or 1)
    if rep["planted"]:
        assert sorted(r["index"] for r in rec["recovered"]) == rep["planted"]


def test_exact_vector(capsys, tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("0 5\n1 3\n2 1\n")
    code, rep = run(capsys, "exact", "--dataset", p, "--format", "vstream", "--k", 1, "--p", 3)
    assert code == 0 and rep["exact"] == 28.0


def test_parse_error_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 oops 1\n")
    code, rep = run(capsys, "lowrank", "--dataset", p)
    assert code == 2 and rep is None
    assert run(capsys, "exact", "--dataset", tmp_path / "missing.mtx")[0] == 2


def test_bad_arguments_exit_code(capsys, tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["lowrank", "--dataset", "x", "--family", "fft"])
    assert exc.value.code == 2
    p = tmp_path / "v.txt"
    p.write_text("1 1\n")
    assert run(capsys, "vector", "--dataset", p, "--p", 2)[0] == 2


def test_numerical_failure_exit_code(capsys, small_mm, monkeypatch):
    from residual_sketch.errors import NumericalFailure

    def boom(*a, **k):
        raise NumericalFailure("SVD did not converge")

    monkeypatch.setattr(cli, "batch_estimate", boom)
    code, _ = run(capsys, "lowrank", "--dataset", small_mm[0], "--k", 2, "--m", 6)
    assert code == 3


def test_module_entry_point(small_mm):
    proc = subprocess.run([sys.executable, "-m", "residual_sketch", "exact", "--dataset",
                           str(small_mm[0]), "--k", "3"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["exact"] == pytest.approx(tk.exact_matrix_residual(small_mm[1], 3))
    proc = subprocess.run([sys.executable, "-m", "residual_sketch", "exact", "--dataset",
                           "/nonexistent"], capture_output=True, text=True)
    assert proc.returncode == 2


def test_cmd_lowrank_synthetic_accuracy():
    A = tk.low_rank_plus_noise(300, 300, 5, seed=3)
    rep = cli.cmd_lowrank(A, 5, 100, family="composed", trials=10, seed=1, with_exact=True)
    assert rep["mean_abs_eps_rel"] <= 0.3
    assert len({t["seed"] for t in rep["trials"]}) == 10


def test_cmd_bench_families_agree_on_accuracy():
    A = tk.low_rank_plus_noise(300, 300, 5, seed=4)
    rep = cli.cmd_bench(A, 5, 100, trials=10, seed=2, with_exact=True)
    gap = abs(rep["osnap"]["mean_abs_eps_rel"] - rep["gaussian"]["mean_abs_eps_rel"])
    assert gap < 0.05
    assert [t["seed"] for t in rep["osnap"]["trials"]] == [t["seed"] for t in rep["gaussian"]["trials"]]


def test_cmd_vector_zipf_trials():
    st = tk.gen_zipf_stream(tk.ZipfStreamSpec(10**4, 1.1, 1, 100_000, 0.0, seed=6))
    rep = cli.cmd_vector(st.idx, st.vals, 10**4, 10, p=3.0, eps=0.5, trials=50, seed=3,
                         with_exact=True)
    within = sum(abs(t["eps_rel"]) <= 0.5 for t in rep["trials"])
    assert within >= 45
    assert all(t["estimate"] >= 0 for t in rep["trials"])
