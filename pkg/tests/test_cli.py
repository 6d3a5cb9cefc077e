import json
import math

import numpy as np
import pytest

from lcnlab.cli import landscape_grid, main
from lcnlab.optim import QuadraticObjective, TrainConfig, gd_train
from lcnlab.poly_core import Architecture, end_to_end


def run_json(argv, tmp_path):
    out = tmp_path / "out.json"
    code = main(argv + ["--out", str(out)])
    assert code == 0
    return json.loads(out.read_text())


def test_analyze_arch_report(tmp_path):
    info = run_json(["analyze-arch", "--ks", "3,2,2"], tmp_path)
    assert info["filter_size"] == 5
    assert info["stride"] == 1
    assert info["e"] == 2
    assert info["filling"] is False
    assert info["regions"]["22|0"] == "boundary"
    assert info["regions"]["0|11"] == "exterior"
    assert "112|0" in info["compatible"]
    assert "0|2" not in info["compatible"]
    assert info["ed_bound"]["generic"] == 36


def test_analyze_arch_strided(tmp_path):
    info = run_json(["analyze-arch", "--ks", "2,2", "--strides", "1,2"], tmp_path)
    assert info["filter_size"] == 3
    assert info["stride"] == 2
    # interior strides are structural; the coefficient-space region table
    # does not apply
    assert info["regions"] is None


def test_classify_exterior_quadratic(tmp_path):
    out = run_json(["classify", "--ks", "2,2", "--w", "1,0,2"], tmp_path)
    assert out == {"rrmp": "0|1", "filling": False, "e": 2,
                   "region": "exterior"}


def test_classify_size_mismatch_exits_2(capsys):
    assert main(["classify", "--ks", "2,2", "--w", "1,0,2,5"]) == 2
    assert "size" in capsys.readouterr().err


def test_train_reaches_boundary_and_is_deterministic(tmp_path):
    argv = ["train", "--ks", "2,2", "--target", "1,0.5,2", "--seed", "3",
            "--max-steps", "200000", "--grad-tol", "1e-18"]
    first = run_json(argv, tmp_path)
    assert first["converged"] is True
    assert first["target_rrmp"] == "0|1"
    assert first["solution_rrmp"] == "2|0"
    assert first["loss"] > 0.1  # the target is outside the function space
    out2 = tmp_path / "again.json"
    assert main(argv + ["--out", str(out2)]) == 0
    assert json.loads(out2.read_text()) == first


def test_critpoints_single_stratum(tmp_path):
    rep = run_json(["critpoints", "--target", "2,0,5,0,2", "--lambda", "2,2",
                    "--starts", "120", "--seed", "0"], tmp_path)
    (stratum,) = rep["strata"]
    assert stratum["lambda"] == [2, 2]
    assert stratum["n_real"] == 5
    best = stratum["points"][0]
    assert best["kind"] == "MIN"
    assert best["loss"] == pytest.approx(1 / 3, abs=1e-9)
    assert np.allclose(best["w"], [7 / 3, 0, 14 / 3, 0, 7 / 3], atol=1e-7)


def test_critpoints_architecture_mode_filters_strata(tmp_path):
    rep = run_json(["critpoints", "--target", "2,0,5,0,2", "--ks", "4,2",
                    "--starts", "40", "--seed", "0"], tmp_path)
    # of the nontrivial partitions of 4 only (2,1,1) has a real form this
    # architecture can realize
    assert [s["lambda"] for s in rep["strata"]] == [[2, 1, 1]]


def test_critpoints_bad_partition_exits_2(capsys):
    assert main(["critpoints", "--target", "1,0,2", "--lambda", "3,2"]) == 2
    capsys.readouterr()


def test_invariants_and_recover_scales(tmp_path):
    inv = run_json(["invariants", "--theta", "1,6,11,6;4,1"], tmp_path)
    assert inv["gaps"] == [-177.0]
    assert inv["balancedness"][0][1] == 177.0

    prof = run_json(["recover-scales", "--filters", "2,0,5,0;1,0",
                     "--gaps", "-177"], tmp_path)
    assert len(prof) == 1
    assert prof[0]["kappa_abs"][1] == pytest.approx(
        math.sqrt((math.sqrt(31445.0) - 177.0) / 2.0), abs=1e-9)
    assert prof[0]["residual"] < 1e-9


def test_rrmp_table_csv_and_thread_independence(tmp_path):
    base = ["experiment", "rrmp-table", "--ks", "2,2", "--n", "24",
            "--seed", "4", "--max-steps", "50000"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(base + ["--threads", "1", "--out", str(a)]) == 0
    assert main(base + ["--threads", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().strip().splitlines()
    assert lines[0] == "target,target_share_pct,solution,solution_share_pct,mean_loss"
    shares = {}
    for line in lines[1:]:
        target, tshare, solution, sshare, _ = line.split(",")
        shares.setdefault((target, float(tshare)), 0.0)
        shares[(target, float(tshare))] += float(sshare)
    for (target, _), total in shares.items():
        assert total == pytest.approx(100.0), target
    assert sum(t for _, t in shares) == pytest.approx(100.0)


def test_distinct_csv_shape(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["experiment", "distinct", "--ks", "2,2", "--n", "4",
                 "--inits", "4", "--seed", "7", "--threads", "2",
                 "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "metric,n_distinct,count,share_pct"
    metrics = {line.split(",")[0] for line in lines[1:]}
    assert metrics == {"bombieri", "euclidean"}
    counts = sum(int(line.split(",")[2]) for line in lines[1:])
    assert counts == 8  # 4 targets x 2 metrics


def test_landscape_grid_constant_directions():
    arch = Architecture((2, 2))
    obj = QuadraticObjective.euclidean(np.array([1.0, 0.0, 2.0]))
    theta0 = [np.array([1.0, 0.5]), np.array([-0.3, 2.0])]
    zero = [np.zeros(2), np.zeros(2)]
    rows = landscape_grid(arch, obj, (theta0, zero, zero), n=3, span=1.0)
    w, _ = end_to_end(theta0, arch)
    expected = math.log10(obj.value(w))
    assert len(rows) == 9
    for _, _, logloss, absdisc in rows:
        assert logloss == pytest.approx(expected, abs=1e-12)
        assert absdisc == pytest.approx(rows[0][3], abs=1e-12)


def test_landscape_grid_minimum_matches_descent_limits():
    # descend from a few random starts, then verify a grid centered at one
    # limit bottoms out exactly there (and on a vanishing discriminant)
    arch = Architecture((2, 2))
    u = np.array([1.0, 0.0, 2.0])
    obj = QuadraticObjective.euclidean(u)
    rng = np.random.default_rng(11)
    cfg = TrainConfig(step=0.01, max_steps=100000, grad_sq_tol=1e-18)
    runs = [gd_train(obj, arch, arch.random_theta(rng), cfg) for _ in range(5)]
    runs = [r for r in runs if r.converged]
    assert runs, "no start converged"
    best = min(runs, key=lambda r: r.loss)
    dirs = ([np.array([1.0, 0.0]), np.zeros(2)],
            [np.zeros(2), np.array([0.0, 1.0])])
    rows = landscape_grid(arch, obj, (best.theta, *dirs), n=5, span=0.2)
    center = [r for r in rows if r[0] == 0.0 and r[1] == 0.0][0]
    assert center[2] == pytest.approx(math.log10(best.loss), abs=1e-9)
    assert min(r[2] for r in rows) >= center[2] - 1e-12
    # the limit sits on the boundary of the function space: double root
    assert center[3] < 1e-5 * max(r[3] for r in rows)


def test_landscape_cli_rejects_bad_grids(tmp_path, capsys):
    assert main(["landscape", "--ks", "2,2", "--target", "1,0,2",
                 "--n", "600"]) == 2
    assert main(["landscape", "--ks", "2,2", "--strides", "1,2",
                 "--target", "1,0,2"]) == 2
    capsys.readouterr()
    out = tmp_path / "g.csv"
    assert main(["landscape", "--ks", "2,2", "--target", "1,0,2",
                 "--n", "4", "--seed", "2", "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "s,t,logloss,absdisc"
    assert len(lines) == 17


def test_case_study_smoke(tmp_path):
    report = run_json(["case-study", "--runs", "2", "--starts", "120",
                       "--seed", "0", "--threads", "2"], tmp_path)
    assert report["discrepancies"] == []
    assert [s["n_real"] for s in report["strata"]] == [4, 5, 4, 4]
    assert report["kappa"]["recovered"] == pytest.approx(
        report["kappa"]["expected"], abs=1e-9)
    assert report["kappa"]["trained_scale"] > 0
    for g in report["gd"]:
        assert g["n_converged"] == 2
        assert g["worst_match_distance"] < 1e-4


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
