from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from riskcal.cli import format_loss_matrix, main, parse_grid, read_loss_matrix
from riskcal.calibration import LossMatrix

FIX = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_matrix(path, losses, grid):
    path.write_text(format_loss_matrix(LossMatrix(np.asarray(losses, float), np.asarray(grid, float))))
    return path


@pytest.fixture
def good_matrix(tmp_path):
    rng = np.random.default_rng(0)
    grid = np.linspace(0, 1, 21)
    u = rng.random(2000)
    losses = (u[:, None] < 0.4 * (1 - grid)[None, :]).astype(float)
    return write_matrix(tmp_path / "m.csv", losses, grid)


# calibrate


def test_golden_report_byte_identical(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, err = run(capsys, "calibrate", "--input", FIX / "matrix3x3.csv", "--alpha", 0.1, "--delta", 0.1,
                       "--bound", "wsr", "--output", out)
    assert code == 2 and "warning" in err
    assert out.read_bytes() == (FIX / "report3x3_wsr.json").read_bytes()
    rep = json.loads(out.read_text())
    assert rep["saturated"] is True and rep["lambda_hat"] == 1.0
    assert rep["risk_curve"] == [2 / 3, 1 / 3, 0.0]


def test_calibrate_valid(good_matrix, capsys):
    code, out, _ = run(capsys, "calibrate", "--input", good_matrix, "--alpha", 0.1, "--delta", 0.1, "--bound", "wsr")
    assert code == 0
    rep = json.loads(out)
    assert set(rep) == {"lambda_hat", "saturated", "alpha", "delta", "bound", "ucb_curve", "risk_curve", "relative_gap"}
    assert rep["lambda_hat"] in np.linspace(0, 1, 21).tolist()
    assert not rep["saturated"]
    assert all(u >= r for u, r in zip(rep["ucb_curve"], rep["risk_curve"]))


def test_calibrate_monotonicity_error_names_position(tmp_path, capsys):
    bad = write_matrix(tmp_path / "bad.csv", [[0.1, 0.1, 0.1], [0.5, 0.2, 0.3]], [0, 0.5, 1])
    code, _, err = run(capsys, "calibrate", "--input", bad, "--alpha", 0.1, "--delta", 0.1, "--bound", "wsr")
    assert code == 1
    assert "row 1" in err and "column 2" in err


def test_calibrate_malformed_csv(tmp_path, capsys):
    f = tmp_path / "bad.csv"
    f.write_text("0,1\n0.5,x\n")
    code, _, err = run(capsys, "calibrate", "--input", f, "--alpha", 0.1, "--delta", 0.1, "--bound", "wsr")
    assert code == 1 and "line 2" in err
    f.write_text("0,1\n0.5\n")
    assert run(capsys, "calibrate", "--input", f, "--alpha", 0.1, "--delta", 0.1, "--bound", "wsr")[0] == 1


@pytest.mark.parametrize("argv", [
    ["calibrate", "--alpha", "1.5", "--delta", "0.1", "--bound", "wsr", "--input", "x"],
    ["calibrate", "--alpha", "0.1", "--delta", "0.1", "--bound", "nope", "--input", "x"],
    ["calibrate", "--alpha", "0.1"],
    ["frobnicate"],
])
def test_errors_exit_one(argv, capsys, tmp_path):
    with pytest.raises(SystemExit) as e:
        code = main(argv)
        raise SystemExit(code)
    assert e.value.code == 1


# conformal


def test_conformal(tmp_path, capsys):
    grid = np.arange(1, 20, dtype=float)
    losses = (np.arange(1, 20)[:, None] > grid[None, :]).astype(float)  # score of row i is i+1
    f = write_matrix(tmp_path / "c.csv", losses, grid)
    code, out, _ = run(capsys, "conformal", "--input", f, "--alpha", 0.1)
    assert code == 0
    assert json.loads(out)["lambda_hat"] == 18.0


# bound


def test_bound_binomial_closed_form(tmp_path, capsys):
    f = tmp_path / "z.txt"
    f.write_text("0\n" * 100)
    code, out, _ = run(capsys, "bound", "--input", f, "--delta", 0.1, "--bound", "binomial-exact")
    rep = json.loads(out)
    assert code == 0
    assert rep["ucb"] == pytest.approx(1 - 0.1 ** 0.01, abs=1e-8)
    assert rep == {**rep, "bound": "binomial-exact", "n": 100, "rhat": 0.0, "finite": True, "clamped": False}


def test_bound_delta_one_is_rhat(tmp_path, capsys):
    f = tmp_path / "l.txt"
    f.write_text("0.2\n0.4\n\n# note\n0.9\n")
    code, out, _ = run(capsys, "bound", "--input", f, "--delta", 1, "--bound", "simple-hoeffding")
    rep = json.loads(out)
    assert code == 0 and rep["ucb"] == pytest.approx(0.5, abs=1e-15) and rep["n"] == 3


def test_bound_domain_error(tmp_path, capsys):
    f = tmp_path / "l.txt"
    f.write_text("0.2\n3.5\n")
    code, _, err = run(capsys, "bound", "--input", f, "--delta", 0.1, "--bound", "wsr")
    assert code == 1 and "[0, 1]" in err
    f.write_text("0\n0.5\n")
    assert run(capsys, "bound", "--input", f, "--delta", 0.1, "--bound", "binomial-exact")[0] == 1


def test_bound_infinite_pu(tmp_path, capsys):
    f = tmp_path / "l.txt"
    f.write_text("1\n2\n")
    code, out, _ = run(capsys, "bound", "--input", f, "--delta", 0.1, "--bound", "pinelis-utev", "--cv", 1)
    rep = json.loads(out)
    assert code == 0 and rep["ucb"] == "inf" and rep["finite"] is False


# simulate


def test_simulate_smoke_and_determinism(tmp_path, capsys):
    argv = ["simulate", "--dist", "beta", "--param", "a=1", "--param", "mu=0.1", "--n", "100,316",
            "--delta", "0.1", "--bound", "wsr,hoeffding-bentkus", "--reps", 1, "--seed", 5]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert run(capsys, *argv, "--output", a)[0] == 0
    assert run(capsys, *argv, "--output", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "family,params,mu,n,delta,bound,reps,coverage,median_gap,mean_relative_gap,seed"
    assert len(lines) == 1 + 2 * 2
    assert lines[1].startswith("beta,a=1;mu=0.1,0.1,100,0.1,wsr,1,")


def test_simulate_default_grid(capsys):
    code, out, _ = run(capsys, "simulate", "--dist", "bernoulli", "--param", "mu=0.1", "--n", "100,316,1000,3162,10000",
                       "--bound", "hoeffding-bentkus", "--reps", 2)
    assert code == 0
    ns = [int(line.split(",")[3]) for line in out.splitlines()[1:]]
    assert ns == [100, 316, 1000, 3162, 10000]


def test_simulate_bad_family(capsys):
    code, _, err = run(capsys, "simulate", "--dist", "cauchy", "--n", 10, "--bound", "clt", "--reps", 1)
    assert code == 1 and "unknown family" in err
    code, _, err = run(capsys, "simulate", "--dist", "gamma", "--param", "a=1", "--n", 10, "--bound", "wsr", "--reps", 1)
    assert code == 1


# loss-matrix


def test_grid_parsing():
    np.testing.assert_allclose(parse_grid("-1:0:5"), [-1, -0.75, -0.5, -0.25, 0])
    assert parse_grid("0.1,0.2").tolist() == [0.1, 0.2]


def test_matrix_round_trip_exact(tmp_path):
    rng = np.random.default_rng(1)
    m = LossMatrix(np.sort(rng.random((5, 4)), axis=1)[:, ::-1], np.sort(rng.normal(size=4)))
    f = tmp_path / "m.csv"
    f.write_text(format_loss_matrix(m))
    back = read_loss_matrix(f)
    np.testing.assert_array_equal(back.losses, m.losses)
    np.testing.assert_array_equal(back.grid, m.grid)


def test_hierarchical_fixture(tmp_path, capsys):
    out = tmp_path / "h.csv"
    code, _, _ = run(capsys, "loss-matrix", "--task", "hierarchical", "--input", FIX / "animals_tree.csv",
                     "--input", FIX / "animals_scores.csv", "--grid", "0,0.6,0.85,1", "--output", out)
    assert code == 0
    m = read_loss_matrix(out)
    np.testing.assert_array_equal(m.losses, [[0.5, 0, 0, 0], [1, 1, 0, 0], [0, 0, 0, 0]])


def test_multilabel_all_covered(tmp_path, capsys):
    f = tmp_path / "ml.csv"
    f.write_text("0;1,0.9,0.8,0.1\n2,0.1,0.2,0.6\n")
    code, out, _ = run(capsys, "loss-matrix", "--task", "multilabel", "--input", f, "--grid=-0.5,-0.05,0")
    assert code == 0
    assert out.splitlines() == ["-0.5,-0.05,0.0", "0.0,0.0,0.0", "0.0,0.0,0.0"]


def test_classification_with_weights(tmp_path, capsys):
    f = tmp_path / "cls.csv"
    f.write_text("0,0.6,0.3,0.1\n2,0.6,0.3,0.1\n")
    w = tmp_path / "w.txt"
    w.write_text("1\n1\n0.25\n")
    code, out, _ = run(capsys, "loss-matrix", "--task", "classification", "--input", f, "--input", w,
                       "--grid=-0.7,-0.25,-0.05")
    assert code == 0
    assert out.splitlines()[1:] == ["1.0,0.0,0.0", "0.25,0.25,0.0"]


def test_segmentation_fixture(tmp_path, capsys):
    y = np.zeros((1, 4, 6), bool)
    y[0, 0:2, 0:2] = True
    y[0, 3, 4:6] = True
    sc = np.zeros((1, 4, 6))
    sc[0, 0, 0:2] = 0.8
    sc[0, 3, 4:6] = 0.8
    sc[0, 1, 0:2] = 0.3
    f = tmp_path / "seg.npz"
    np.savez(f, scores=sc, masks=y)
    code, out, _ = run(capsys, "loss-matrix", "--task", "segmentation", "--input", f, "--grid=-0.9,-0.5,-0.2")
    assert code == 0
    assert out.splitlines()[1] == "1.0,0.25,0.0"


def test_protein_fixture(tmp_path, capsys):
    mass = np.array([[[[0.5, 0.3, 0.2]]]])
    f = tmp_path / "p.npz"
    np.savez(f, bins=np.array([2.0, 4.0, 6.0]), mass=mass, truth=np.array([[[5.0]]]))
    code, out, _ = run(capsys, "loss-matrix", "--task", "protein", "--input", f, "--grid=-0.4,-0.25,0")
    assert code == 0
    assert out.splitlines()[1] == "3.0,1.0,1.0"
    code, _, err = run(capsys, "loss-matrix", "--task", "protein", "--input", f, "--grid=-0.9,0")
    assert code == 1 and "restrict the grid" in err


def test_shape_mismatch(tmp_path, capsys):
    f = tmp_path / "seg.npz"
    np.savez(f, scores=np.zeros((2, 3, 3)), masks=np.ones((1, 3, 3), bool))
    assert run(capsys, "loss-matrix", "--task", "segmentation", "--input", f, "--grid=-0.5,0")[0] == 1


def test_round_trip_into_calibrate(tmp_path, capsys):
    rng = np.random.default_rng(3)
    probs = rng.dirichlet(np.ones(4), size=500)
    labels = [rng.choice(4, p=p) for p in probs]
    f = tmp_path / "cls.csv"
    f.write_text("".join(f"{y}," + ",".join(repr(float(v)) for v in p) + "\n" for y, p in zip(labels, probs)))
    mat = tmp_path / "m.csv"
    assert run(capsys, "loss-matrix", "--task", "classification", "--input", f, "--grid=-1:0:51", "--output", mat)[0] == 0
    code, out, _ = run(capsys, "calibrate", "--input", mat, "--alpha", 0.2, "--delta", 0.1, "--bound", "hoeffding-bentkus")
    assert code == 0
    assert -1 <= json.loads(out)["lambda_hat"] <= 0
    assert math.isfinite(json.loads(out)["relative_gap"])
