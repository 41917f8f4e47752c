import numpy as np
import pytest

from regnmf import io
from regnmf.cli import main
from regnmf.errors import ParseError, ValidationError
from regnmf.nmf import TraceRecord


def write(path, text):
    path.write_text(text)
    return path


class TestLoadMatrix:
    def test_dense(self, tmp_path):
        m = io.load_matrix(write(tmp_path / "y.csv", "1,2\n3,4\n"))
        np.testing.assert_array_equal(m, [[1, 2], [3, 4]])

    def test_dense_header(self, tmp_path):
        m = io.load_matrix(write(tmp_path / "y.csv", "a,b\n1,2\n3,4\n"))
        np.testing.assert_array_equal(m, [[1, 2], [3, 4]])

    def test_triplet(self, tmp_path):
        p = write(tmp_path / "t.csv", "row,col,value\n0,1,2.5\n")
        np.testing.assert_array_equal(io.load_matrix(p, "triplet_csv", (2, 2)), [[0, 2.5], [0, 0]])

    def test_triplet_duplicates_summed(self, tmp_path):
        p = write(tmp_path / "t.csv", "row,col,value\n1,0,1\n1,0,2\n")
        np.testing.assert_array_equal(io.load_matrix(p, "triplet_csv"), [[0], [3]])

    def test_triplet_missing_header(self, tmp_path):
        with pytest.raises(ParseError):
            io.load_matrix(write(tmp_path / "t.csv", "0,1,2.5\n"), "triplet_csv")

    def test_triplet_out_of_shape(self, tmp_path):
        p = write(tmp_path / "t.csv", "row,col,value\n0,5,1\n")
        with pytest.raises(ParseError) as info:
            io.load_matrix(p, "triplet_csv", (2, 2))
        assert info.value.line == 2

    def test_ragged(self, tmp_path):
        with pytest.raises(ParseError) as info:
            io.load_matrix(write(tmp_path / "y.csv", "1,2\n3\n"))
        assert info.value.line == 2
        assert "line 2" in str(info.value)

    def test_non_numeric(self, tmp_path):
        with pytest.raises(ParseError) as info:
            io.load_matrix(write(tmp_path / "y.csv", "1,2\n3,x\n"))
        assert info.value.line == 2

    def test_non_finite(self, tmp_path):
        with pytest.raises(ParseError):
            io.load_matrix(write(tmp_path / "y.csv", "1,nan\n"))

    def test_negative_rejected(self, tmp_path):
        p = write(tmp_path / "y.csv", "1,-2\n")
        assert io.load_matrix(p)[0, 1] == -2
        with pytest.raises(ValidationError):
            io.load_matrix(p, nonnegative=True)

    def test_vector(self, tmp_path):
        np.testing.assert_array_equal(io.load_vector(write(tmp_path / "v.csv", "1\n2\n")), [1, 2])
        np.testing.assert_array_equal(io.load_vector(write(tmp_path / "w.csv", "1,2\n")), [1, 2])
        with pytest.raises(ParseError):
            io.load_vector(write(tmp_path / "m.csv", "1,2\n3,4\n"))


def test_matrix_round_trip(tmp_path, rng):
    m = rng.normal(size=(5, 4)) * 10.0 ** rng.integers(-300, 300, size=(5, 4))
    io.write_matrix(tmp_path / "m.csv", m)
    assert io.load_matrix(tmp_path / "m.csv").tobytes() == m.tobytes()


def test_trace_schema(tmp_path):
    trace = [TraceRecord(0, 1.5, 2.0, clipped_count=0), TraceRecord(1, 0.1, 0.2, 0.5, 0.25)]
    io.write_trace(tmp_path / "t.csv", trace)
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iter,objective,frob_error,alpha_l,alpha_r,clipped_count"
    assert lines[1] == "0,1.5,2.0,,,0"
    assert lines[2] == "1,0.1,0.2,0.5,0.25,"
    back = io.read_trace(tmp_path / "t.csv")
    assert np.isnan(back["alpha_l"][0]) and back["alpha_r"][1] == 0.25


def test_summary_round_trip(tmp_path):
    io.write_summary(tmp_path / "s.txt", {"method": "aur", "iterations": 3, "r_squared": 0.5})
    assert io.read_summary(tmp_path / "s.txt") == {"method": "aur", "iterations": "3",
                                                    "r_squared": "0.5"}


def test_atomic_write_leaves_no_temp(tmp_path):
    io.atomic_write(tmp_path / "a.txt", "x")
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]


@pytest.fixture
def exact_csv(tmp_path, rng):
    y = rng.uniform(size=(10, 2)) @ rng.uniform(size=(2, 6))
    io.write_matrix(tmp_path / "y.csv", y)
    return tmp_path / "y.csv"


class TestFactorizeCommand:
    def test_exact_input(self, exact_csv, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["factorize", str(exact_csv), "-o", str(out), "--rank", "2"]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["factors_L.csv", "factors_R.csv", "summary.txt", "trace.csv"]
        summary = io.read_summary(out / "summary.txt")
        assert float(summary["r_squared"]) >= 0.999
        assert summary["method"] == "aur"
        r = io.load_matrix(out / "factors_R.csv")
        np.testing.assert_allclose(r.sum(axis=1), 1.0, atol=1e-12)
        assert "r_squared=" in capsys.readouterr().out

    def test_regularized_flags(self, exact_csv, tmp_path):
        out = tmp_path / "out"
        argv = ["factorize", str(exact_csv), "-o", str(out), "--rank", "3", "--method", "mur",
                "--l1-l", "0.4", "--l1-r", "0.4", "--ortho-r", "0.25", "--max-iters", "200"]
        assert main(argv) == 0
        trace = io.read_trace(out / "trace.csv")
        assert np.all(np.isnan(trace["alpha_l"]))
        assert np.all(trace["clipped_count"] >= 0)

    def test_weights_and_triplets(self, tmp_path):
        write(tmp_path / "t.csv", "row,col,value\n0,0,1\n1,1,2\n2,0,1\n2,1,1\n")
        write(tmp_path / "rw.csv", "1\n2\n1\n")
        out = tmp_path / "out"
        argv = ["factorize", str(tmp_path / "t.csv"), "--format", "triplet_csv",
                "--shape", "3", "2", "-o", str(out), "--rank", "2",
                "--row-weights", str(tmp_path / "rw.csv"), "--row-normalize", "--max-iters", "50"]
        assert main(argv) == 0
        assert io.load_matrix(out / "factors_L.csv").shape == (3, 2)

    @pytest.mark.parametrize("text", ["1,2\n3\n", "1,-2\n3,4\n", "a,b\n"])
    def test_malformed_input(self, tmp_path, text, capsys):
        out = tmp_path / "out"
        argv = ["factorize", str(write(tmp_path / "bad.csv", text)), "-o", str(out), "--rank", "1"]
        assert main(argv) != 0
        assert not out.exists()
        assert "error" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["factorize", str(tmp_path / "nope.csv"), "-o", str(tmp_path / "o"),
                     "--rank", "1"]) == 1


class TestSimulateCommand:
    argv = ["--max-iters", "40", "--seed", "3"]

    def test_outputs(self, tmp_path):
        out = tmp_path / "sim"
        assert main(["simulate", "-o", str(out), *self.argv]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["summary.txt", "trace_aur_dense.csv", "trace_mur_dense.csv"]
        summary = io.read_summary(out / "summary.txt")
        assert summary["scenario"] == "A" and summary["seed"] == "3"

    def test_sparse_scenario(self, tmp_path):
        out = tmp_path / "sim"
        assert main(["simulate", "-o", str(out), "--scenario", "B", *self.argv]) == 0
        assert {p.name for p in out.iterdir()} >= {"trace_mur_sparse.csv", "trace_aur_sparse.csv",
                                                   "trace_mur_dense.csv", "trace_aur_dense.csv"}

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "-o", str(a), *self.argv]) == 0
        assert main(["simulate", "-o", str(b), *self.argv]) == 0
        for p in a.iterdir():
            assert p.read_bytes() == (b / p.name).read_bytes()

    def test_repeats(self, tmp_path):
        out = tmp_path / "sim"
        assert main(["simulate", "-o", str(out), "--repeats", "2", *self.argv]) == 0
        assert sorted(p.name for p in out.iterdir()) == ["seed_3", "seed_4"]

    def test_bad_sparsity(self, tmp_path):
        assert main(["simulate", "-o", str(tmp_path / "s"), "--sparsity", "2"]) == 1


class TestQpCommand:
    def run(self, tmp_path, g, d, *extra):
        io.write_matrix(tmp_path / "g.csv", np.asarray(g, float))
        io.write_matrix(tmp_path / "d.csv", np.asarray(d, float).reshape(-1, 1))
        out = tmp_path / "out"
        code = main(["qp", "--G", str(tmp_path / "g.csv"), "--d", str(tmp_path / "d.csv"),
                     "-o", str(out), *extra])
        return code, out

    def test_interior(self, tmp_path):
        code, out = self.run(tmp_path, np.eye(2), [-1, -1])
        assert code == 0
        np.testing.assert_allclose(io.load_vector(out / "solution.csv"), [1, 1], atol=1e-8)
        assert io.read_summary(out / "summary.txt")["strategy"] == "scaled_gradient"
        header = (out / "trace.csv").read_text().splitlines()[0]
        assert header == "iter,objective,alpha,alpha_hat,alpha_star"

    def test_origin(self, tmp_path):
        code, out = self.run(tmp_path, np.eye(2), [1, 1])
        assert code == 0
        np.testing.assert_allclose(io.load_vector(out / "solution.csv"), [0, 0], atol=1e-8)

    def test_steepest_stall(self, tmp_path):
        write(tmp_path / "x0.csv", "0\n1\n")
        code, out = self.run(tmp_path, np.eye(2), [2, -2], "--strategy", "steepest",
                             "--x0", str(tmp_path / "x0.csv"))
        assert code == 0
        summary = io.read_summary(out / "summary.txt")
        assert summary["status"] == "stalled"
        assert summary["strategy"] == "steepest_descent"

    def test_asymmetric(self, tmp_path, capsys):
        code, out = self.run(tmp_path, [[1.0, 0.5], [0.0, 1.0]], [1, 1])
        assert code == 1
        assert not out.exists()
        assert "symmetric" in capsys.readouterr().err
