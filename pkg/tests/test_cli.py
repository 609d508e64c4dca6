import json

import numpy as np
import pytest

from lkplo.cli import main
from lkplo.data import gen_three_gaussians, load_csv, save_csv
from lkplo.plo import (
    DirectionConfig,
    FitConfig,
    LossSpec,
    fit,
    load_model,
    score,
)


@pytest.fixture
def train_csv(tmp_path):
    path = tmp_path / "train.csv"
    ds = gen_three_gaussians(0)
    save_csv(ds, path)
    return path


def run(*argv):
    return main([str(a) for a in argv])


class TestFitCommand:
    def test_happy_path(self, tmp_path, train_csv, capsys):
        out = tmp_path / "model.json"
        rc = run("fit", "--data", train_csv, "--out", out,
                 "--variant", "plo", "--loss", "robust_z", "--seed", "1")
        assert rc == 0
        assert out.exists()
        assert "variant=plo" in capsys.readouterr().out

    def test_k_too_large_fails(self, tmp_path, train_csv, capsys):
        rc = run("fit", "--data", train_csv, "--out", tmp_path / "m.json",
                 "--variant", "lkplo", "--k", "100000")
        assert rc != 0
        assert "InvalidKError" in capsys.readouterr().err

    def test_byte_identical_reruns(self, tmp_path, train_csv):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["fit", "--data", train_csv, "--variant", "lkplo",
                "--gamma", "0.5", "--q", "6", "--k", "3", "--seed", "9"]
        assert run(*args, "--out", a) == 0
        assert run(*args, "--out", b) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_config_file_and_flag_override(self, tmp_path, train_csv):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[fit]\nvariant = plo\nseed = 5\nloss = robust_z\n")
        out = tmp_path / "m.json"
        rc = run("fit", "--data", train_csv, "--out", out,
                 "--config", cfg, "--seed", "7")
        assert rc == 0
        model = load_model(out)
        assert model.variant == "plo"  # from file
        assert model.seed == 7         # flag wins

    def test_unknown_config_key(self, tmp_path, train_csv, capsys):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[fit]\nnot_a_key = 1\n")
        rc = run("fit", "--data", train_csv, "--out", tmp_path / "m.json",
                 "--config", cfg)
        assert rc != 0
        assert "not_a_key" in capsys.readouterr().err


class TestScoreCommand:
    def test_round_trip_equals_in_process(self, tmp_path, train_csv):
        model_path = tmp_path / "m.json"
        scores_path = tmp_path / "s.csv"
        assert run("fit", "--data", train_csv, "--out", model_path,
                   "--variant", "lkplo", "--gamma", "0.5", "--q", "6",
                   "--k", "3", "--seed", "2") == 0
        assert run("score", "--model", model_path, "--data", train_csv,
                   "--out", scores_path) == 0

        ds = load_csv(train_csv)
        cfg = FitConfig(
            variant="lkplo", loss=LossSpec("svm_like", 2.0), gamma=0.5,
            q=6, k=3, direction_config=DirectionConfig(), seed=2,
        )
        expect = score(fit(ds.X, cfg), ds.X)

        lines = scores_path.read_text().strip().splitlines()
        assert lines[0] == "row_index,score"
        got = np.array([float(ln.split(",")[1]) for ln in lines[1:]])
        np.testing.assert_array_equal(got, expect)
        assert np.all(got >= 0) and np.all(np.isfinite(got))

    def test_dimension_mismatch_fails(self, tmp_path, train_csv, capsys):
        model_path = tmp_path / "m.json"
        assert run("fit", "--data", train_csv, "--out", model_path,
                   "--variant", "plo") == 0
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c,label\n1,2,3,0\n")
        rc = run("score", "--model", model_path, "--data", bad,
                 "--out", tmp_path / "s.csv")
        assert rc != 0


class TestBenchmarkCommand:
    def test_writes_reports(self, tmp_path, capsys):
        out = tmp_path / "rep"
        rc = run("benchmark", "--data", "synth:three_gaussians",
                 "--method", "lkplo-svm", "--folds", "3", "--trials", "2",
                 "--seed", "0", "--out", out)
        assert rc == 0
        report = json.loads((tmp_path / "rep.json").read_text())[0]
        assert len(report["fold_aucs"]) == 3
        csv_text = (tmp_path / "rep.csv").read_text()
        assert csv_text.startswith("dataset,method,mean,std,fold_aucs")
        assert "±" in capsys.readouterr().out

    def test_single_class_csv_fails(self, tmp_path, capsys):
        bad = tmp_path / "one_class.csv"
        bad.write_text("a,label\n" + "".join(f"{i},0\n" for i in range(20)))
        rc = run("benchmark", "--data", bad, "--method", "plo",
                 "--out", tmp_path / "rep")
        assert rc != 0
        assert "StratificationError" in capsys.readouterr().err

    def test_byte_identical_reruns(self, tmp_path):
        args = ["benchmark", "--data", "synth:moons", "--method", "kplo",
                "--folds", "3", "--trials", "2", "--seed", "1"]
        assert run(*args, "--out", tmp_path / "r1") == 0
        assert run(*args, "--out", tmp_path / "r2") == 0
        assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()
        assert (tmp_path / "r1.csv").read_bytes() == (tmp_path / "r2.csv").read_bytes()


class TestAblationCommand:
    def test_table_over_given_dataset(self, tmp_path, capsys):
        rc = run("ablation", "--data", "synth:three_gaussians",
                 "--folds", "3", "--trials", "2", "--seed", "0",
                 "--out", tmp_path / "abl")
        assert rc == 0
        rows = (tmp_path / "abl.csv").read_text().strip().splitlines()
        assert len(rows) == 4  # header + 3 variants
        table = capsys.readouterr().out
        for name in ("plo", "kplo", "lkplo-svm"):
            assert name in table


class TestGenCommand:
    def test_writes_dataset(self, tmp_path):
        out = tmp_path / "synth.csv"
        assert run("gen", "--name", "moons", "--seed", "3", "--out", out) == 0
        ds = load_csv(out)
        assert len(ds.y) == 425

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run("gen", "--name", "inside_outside", "--seed", "5", "--out", a) == 0
        assert run("gen", "--name", "inside_outside", "--seed", "5", "--out", b) == 0
        assert a.read_bytes() == b.read_bytes()


class TestBoundaryGridCommand:
    def fit_2d_model(self, tmp_path, train_csv, **flags):
        model_path = tmp_path / "m.json"
        args = ["fit", "--data", train_csv, "--out", model_path,
                "--variant", "plo", "--seed", "0"]
        for k, v in flags.items():
            args += [f"--{k}", str(v)]
        assert run(*args) == 0
        return model_path

    def test_lattice_rows(self, tmp_path, train_csv):
        model_path = self.fit_2d_model(tmp_path, train_csv)
        out = tmp_path / "grid.csv"
        rc = run("boundary-grid", "--model", model_path, "--bounds", "0,1,0,1",
                 "--resolution", "3", "--out", out)
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "x,y,score"
        assert len(lines) == 10
        xy = [tuple(map(float, ln.split(",")[:2])) for ln in lines[1:]]
        # Row-major: x slowest, y fastest.
        assert xy[0] == (0.0, 0.0)
        assert xy[1] == (0.0, 0.5)
        assert xy[3] == (0.5, 0.0)
        scores = [float(ln.split(",")[2]) for ln in lines[1:]]
        assert all(np.isfinite(s) and s >= 0 for s in scores)

    def test_deep_inlier_zero_with_svm(self, tmp_path, train_csv):
        model_path = self.fit_2d_model(
            tmp_path, train_csv, loss="svm_like", c=5.0
        )
        model = load_model(model_path)
        entry = model.per_cluster[0]
        # Grid point at the cluster centroid: every |u.f'| = 0 <= c * MAD.
        cx, cy = entry.centroid
        out = tmp_path / "grid.csv"
        rc = run("boundary-grid", "--model", model_path,
                 "--bounds", f"{cx},{cx + 1},{cy},{cy + 1}",
                 "--resolution", "2", "--out", out)
        assert rc == 0
        first = float(out.read_text().strip().splitlines()[1].split(",")[2])
        assert first == 0.0

    def test_non_2d_model_fails(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        from lkplo.data import Dataset
        ds = Dataset("d3", rng.standard_normal((20, 3)),
                     np.array([0] * 18 + [1] * 2))
        csv3 = tmp_path / "d3.csv"
        save_csv(ds, csv3)
        model_path = tmp_path / "m.json"
        assert run("fit", "--data", csv3, "--out", model_path,
                   "--variant", "plo") == 0
        rc = run("boundary-grid", "--model", model_path, "--out",
                 tmp_path / "g.csv")
        assert rc != 0
        assert "2-D" in capsys.readouterr().err

    def test_byte_identical_reruns(self, tmp_path, train_csv):
        model_path = self.fit_2d_model(tmp_path, train_csv)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["boundary-grid", "--model", model_path,
                "--bounds=-2,2,-2,2", "--resolution", "5"]
        assert run(*args, "--out", a) == 0
        assert run(*args, "--out", b) == 0
        assert a.read_bytes() == b.read_bytes()
