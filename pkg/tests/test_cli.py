import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from rwot import DiscreteDistribution, __version__
from rwot.cli import main
from rwot.datasets import GridImage, draw_shape, embed_and_translate, save_grid_image, save_point_cloud


def _cloud(path, points, masses=None):
    save_point_cloud(DiscreteDistribution(points, masses), path)
    return str(path)


@pytest.fixture
def clouds(tmp_path):
    rng = np.random.default_rng(0)
    return {
        "a": _cloud(tmp_path / "a.csv", rng.normal(size=(8, 2))),
        "far": _cloud(tmp_path / "far.csv", rng.normal(size=(8, 2)) + [30.0, -20.0]),
        "d0": _cloud(tmp_path / "d0.csv", [[0.0, 0.0]]),
        "d1": _cloud(tmp_path / "d1.csv", [[3.0, 4.0]]),
        "l1": _cloud(tmp_path / "l1.csv", [[0.0], [1.0]]),
        "l2": _cloud(tmp_path / "l2.csv", [[0.0], [2.0]]),
        "p3": _cloud(tmp_path / "p3.csv", [[0.0, 0.0, 0.0]]),
    }


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestDist:
    def test_identical_rwp(self, clouds, capsys):
        code, out, _ = run(["dist", clouds["a"], clouds["a"], "--metric", "rwp", "--p", "2", "--solver", "exact"], capsys)
        doc = json.loads(out)
        assert code == 0
        assert doc["distance"] < 1e-7
        assert doc["tool"] == "rwot" and doc["version"] == __version__ and doc["seed"] == 42
        assert doc["config"]["lambda"] == 0.1 and doc["config"]["epsilon"] == 0.01
        # unit-spaced support: the entropic blur exp(-1 / lam) is negligible at lam = 0.01
        code, out, _ = run(["dist", clouds["l1"], clouds["l1"], "--metric", "rwp", "--p", "2",
                            "--lambda", "0.01", "--epsilon", "1e-12"], capsys)
        doc = json.loads(out)
        assert code == 0
        assert doc["distance"] < 1e-6

    def test_dirac_exact(self, clouds, capsys):
        code, out, _ = run(["dist", clouds["d0"], clouds["d1"], "--metric", "wp", "--p", "2", "--solver", "exact"], capsys)
        assert code == 0
        assert json.loads(out)["distance"] == pytest.approx(5.0, abs=1e-12)

    def test_line_pair_rwp_exact(self, clouds, capsys):
        code, out, _ = run(["dist", clouds["l1"], clouds["l2"], "--metric", "rwp", "--p", "2", "--solver", "exact"], capsys)
        doc = json.loads(out)
        assert code == 0
        assert doc["distance"] == pytest.approx(0.5, abs=1e-10)
        assert doc["w_distance"] == pytest.approx(np.sqrt(0.5), abs=1e-10)
        assert doc["mean_gap"] == pytest.approx(0.5, abs=1e-12)

    def test_general_p(self, clouds, capsys):
        code, out, _ = run(["dist", clouds["l1"], clouds["l2"], "--metric", "rwp", "--p", "1",
                            "--solver", "exact", "--starts", "3"], capsys)
        doc = json.loads(out)
        assert code == 0
        # min over s of (|s| + |s - 1|) / 2, pairing 0 -> 0 and 1 -> 2
        assert doc["distance"] == pytest.approx(0.5, abs=1e-6)
        assert doc["config"]["starts"] == 3

    def test_global_flags_after_subcommand(self, clouds, capsys):
        a = run(["--lambda", "0.5", "dist", clouds["l1"], clouds["l2"]], capsys)[1]
        b = run(["dist", clouds["l1"], clouds["l2"], "--lambda", "0.5"], capsys)[1]
        assert a == b
        assert json.loads(a)["config"]["lambda"] == 0.5

    def test_nonconvergence_exit_2(self, clouds, capsys):
        code, out, _ = run(["dist", clouds["a"], clouds["a"], "--lambda", "1", "--epsilon", "1e-300",
                            "--max-iter", "20"], capsys)
        doc = json.loads(out)
        assert code == 2
        assert doc["converged"] is False and doc["iterations"] == 20

    def test_underflow_exit_2(self, clouds, capsys):
        code, out, err = run(["dist", clouds["d0"], clouds["d1"], "--lambda", "0.001"], capsys)
        assert code == 2 and out == "" and "solver failure" in err

    def test_input_errors(self, clouds, tmp_path, capsys):
        assert run(["dist", clouds["a"], clouds["p3"]], capsys)[0] == 1
        assert run(["dist", str(tmp_path / "missing.csv"), clouds["a"]], capsys)[0] == 1
        bad = tmp_path / "bad.csv"
        bad.write_text("x1,mass\n1,oops\n")
        code, _, err = run(["dist", str(bad), clouds["l1"]], capsys)
        assert code == 1 and "bad.csv:2" in err
        assert run(["dist", clouds["l1"], clouds["l2"], "--p", "0.5"], capsys)[0] == 1

    @pytest.mark.parametrize(
        "argv",
        [
            ["dist", "a.csv", "b.csv", "--bogus"],
            ["dist", "a.csv", "b.csv", "--lambda", "-1"],
            ["dist", "a.csv", "b.csv", "--metric", "kl"],
            ["bench", "shift-sweep", "--trials", "0"],
            ["bench", "shift-sweep", "--lengths", "1,x"],
            ["frobnicate"],
        ],
    )
    def test_usage_errors(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 1
        assert "usage" in capsys.readouterr().err

    def test_out_file(self, clouds, tmp_path, capsys):
        dest = tmp_path / "r.json"
        code, out, _ = run(["dist", clouds["l1"], clouds["l2"], "--out", str(dest)], capsys)
        assert code == 0 and out == ""
        assert "distance" in json.loads(dest.read_text())


class TestBench:
    def test_shift_sweep(self, tmp_path, capsys):
        dest = tmp_path / "sweep.csv"
        argv = ["--seed", "3", "bench", "shift-sweep", "--m", "30", "--lengths", "0,2", "--trials", "2",
                "--out", str(dest)]
        assert run(argv, capsys)[0] == 0
        rows = list(csv.DictReader(dest.open()))
        assert len(rows) == 8
        assert {r["method"] for r in rows} == {"classic_sinkhorn", "rw2_sinkhorn"}
        meta = json.loads((tmp_path / "sweep.csv.meta.json").read_text())
        assert meta["seed"] == 3 and meta["config"]["m"] == 30 and meta["config"]["lengths"] == [0.0, 2.0]

    def test_stdout_reproducible_except_runtime(self, capsys):
        argv = ["bench", "shift-sweep", "--m", "20", "--lengths", "0,1", "--trials", "2"]
        _, out1, err1 = run(argv, capsys)
        _, out2, err2 = run(argv, capsys)

        def strip(text):
            return [{k: v for k, v in r.items() if k != "runtime_seconds"} for r in csv.DictReader(io.StringIO(text))]

        assert strip(out1) == strip(out2)
        assert err1 == err2


class TestClassify:
    def test_knn_synthetic(self, tmp_path, capsys):
        dest = tmp_path / "knn.csv"
        argv = ["classify", "knn", "--lengths", "0", "--metrics", "L1,L2", "--repeats", "2", "--out", str(dest)]
        assert run(argv, capsys)[0] == 0
        rows = list(csv.DictReader(dest.open()))
        assert [r["metric"] for r in rows] == ["L1", "L2"]
        assert all(0 <= float(r["accuracy"]) <= 1 for r in rows)
        first = dest.read_bytes()
        run(argv, capsys)
        assert dest.read_bytes() == first

    def test_knn_manifest(self, tmp_path, capsys):
        lines = []
        for i, (kind, lab) in enumerate([("ring", 0)] * 4 + [("bar", 1)] * 4):
            save_grid_image(draw_shape(kind, seed=i), tmp_path / f"img{i}.csv")
            lines.append(f"img{i}.csv,{lab}")
        (tmp_path / "corpus.txt").write_text("\n".join(lines) + "\n")
        code, out, _ = run(["classify", "knn", "--corpus", str(tmp_path / "corpus.txt"), "--lengths", "0",
                            "--metrics", "RW2", "--repeats", "2", "--canvas", "40"], capsys)
        assert code == 0
        assert list(csv.DictReader(io.StringIO(out)))[0]["metric"] == "RW2"

    def test_knn_bad_metric(self, capsys):
        assert run(["classify", "knn", "--metrics", "L7", "--repeats", "1"], capsys)[0] == 1
        assert run(["classify", "knn", "--k", "2", "--repeats", "1"], capsys)[0] == 1


class TestSearch:
    @pytest.fixture
    def corpus(self, tmp_path):
        ring = draw_shape("ring", seed=6)
        imgs = {
            "query": embed_and_translate(ring, 60, 60, (-10, 0)),
            "far_same": embed_and_translate(ring, 60, 60, (15, 10)),
            "near_diff": embed_and_translate(draw_shape("cross", seed=7), 60, 60, (-8, 0)),
        }
        for name, img in imgs.items():
            save_grid_image(img, tmp_path / f"{name}.csv")
        (tmp_path / "corpus.txt").write_text("far_same.csv\nnear_diff.csv\n")
        return tmp_path

    @pytest.mark.parametrize("metric, first", [("RW2", "far_same"), ("W2", "near_diff")])
    def test_topk(self, corpus, metric, first, capsys):
        dest = corpus / f"{metric}.json"
        argv = ["search", "topk", "--corpus", str(corpus / "corpus.txt"), "--query", str(corpus / "query.csv"),
                "--k", "2", "--metric", metric, "--out", str(dest)]
        assert run(argv, capsys)[0] == 0
        doc = json.loads(dest.read_text())
        assert doc["ranked_ids"][0] == first
        assert doc["query_id"] == "query" and doc["config"]["metric"] == metric
        first_bytes = dest.read_bytes()
        run(argv, capsys)
        assert dest.read_bytes() == first_bytes

    def test_sequences(self, tmp_path, capsys):
        frames = [draw_shape(k, seed=i) for i, k in enumerate(["ring", "bar"])]
        for name, offset in [("q", (0, 0)), ("moved", (5, 5)), ("other", None)]:
            seq = []
            for i, f in enumerate(frames if offset else frames[::-1]):
                img = embed_and_translate(f, 40, 40, offset or (0, 0))
                save_grid_image(img, tmp_path / f"{name}{i}.csv")
                seq.append(f"{name}{i}.csv")
            (tmp_path / f"{name}.seq").write_text("\n".join(seq) + "\n")
        (tmp_path / "corpus.txt").write_text("moved.seq\nother.seq\n")
        code, out, _ = run(["search", "topk", "--sequence", "--corpus", str(tmp_path / "corpus.txt"),
                            "--query", str(tmp_path / "q.seq"), "--k", "2"], capsys)
        assert code == 0
        assert json.loads(out)["ranked_ids"] == ["moved", "other"]

    def test_empty_corpus(self, tmp_path, capsys):
        (tmp_path / "empty.txt").write_text("")
        save_grid_image(GridImage([[1.0]]), tmp_path / "q.csv")
        code, _, err = run(["search", "topk", "--corpus", str(tmp_path / "empty.txt"),
                            "--query", str(tmp_path / "q.csv")], capsys)
        assert code == 1 and "empty" in err


class TestDiag:
    def test_identical(self, clouds, capsys):
        code, out, _ = run(["diag", "--src", clouds["a"], "--dst", clouds["a"], "--shifts", "3"], capsys)
        doc = json.loads(out)
        assert code == 0
        assert doc["zero_shift"]["log_g"] == doc["mean_shift"]["log_g"]
        assert doc["shifted_norm_comparison"]["improved"] is True

    def test_large_gap(self, clouds, capsys):
        code, out, _ = run(["diag", "--src", clouds["a"], "--dst", clouds["far"], "--shifts", "20"], capsys)
        doc = json.loads(out)
        assert doc["mean_shift"]["log_g"] > doc["zero_shift"]["log_g"]
        assert len(doc["random_shifts"]) == 20
        assert doc["mean_shift_is_max"] is True
        assert all(doc["mean_shift"]["log_g"] >= r["log_g"] for r in doc["random_shifts"])
        assert doc["config"]["shifts"] == 20

    def test_reproducible(self, clouds, capsys):
        argv = ["--seed", "5", "diag", "--src", clouds["a"], "--dst", clouds["far"]]
        assert run(argv, capsys)[1] == run(argv, capsys)[1]


def test_module_entry_point(clouds):
    proc = subprocess.run(
        [sys.executable, "-m", "rwot.cli", "dist", clouds["d0"], clouds["d1"], "--solver", "exact"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["distance"] == pytest.approx(5.0)
    proc = subprocess.run([sys.executable, "-m", "rwot.cli", "dist", "--nope"], capture_output=True, text=True)
    assert proc.returncode == 1
