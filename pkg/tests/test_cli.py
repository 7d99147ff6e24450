import json

import numpy as np
import pytest

from sgm_semiconvex import cli


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    return code, capsys.readouterr()


def write(path, doc):
    path.write_text(json.dumps(doc))
    return path


def test_constants(capsys):
    code, out = run(capsys, "constants")
    doc = json.loads(out.out)
    assert code == 0
    assert doc["t_bar"] == pytest.approx(3.2377, abs=5e-4) and doc["t_star"] > doc["t_bar"]
    assert doc["L"] == pytest.approx(doc["K"] + doc["mu"])


def test_score_profile_outputs_and_determinism(tmp_path, capsys):
    code, _ = run(capsys, "--out", tmp_path / "a", "score-profile")
    assert code == 0
    lines = (tmp_path / "a" / "score_profile.csv").read_text().splitlines()
    assert lines[0] == "#schema=1" and lines[1].startswith("#config_hash=")
    assert lines[2] == "t,x,score,beta_os_kmu_t"
    assert len(lines) == 3 + 2 * 500
    run(capsys, "--out", tmp_path / "b", "score-profile")
    svg_a = (tmp_path / "a" / "score_profile.svg").read_bytes()
    assert svg_a == (tmp_path / "b" / "score_profile.svg").read_bytes()
    assert b"t_bar = 3.2377" in svg_a


def test_score_profile_flat_for_gaussian(tmp_path, capsys):
    cfg = write(tmp_path / "g.json", {"potential": {"family": "gaussian_mixture", "weights": [1], "means": [0], "stds": [1]}})
    code, _ = run(capsys, "--out", tmp_path, "score-profile", "--config", cfg)
    assert code == 0
    rows = np.loadtxt(tmp_path / "score_profile.csv", delimiter=",", skiprows=3)
    np.testing.assert_allclose(rows[:, 2], -rows[:, 1], atol=1e-12)


def test_sample_fit_w2_roundtrip(tmp_path, capsys):
    cfg = write(tmp_path / "s.json", {"sampler": {"T": 4, "epsilon": 0.01, "gamma": 0.02, "n": 500}})
    assert run(capsys, "--seed", 1, "sample", "--config", cfg, "--out", tmp_path / "a.csv")[0] == 0
    assert run(capsys, "--seed", 1, "sample", "--config", cfg, "--out", tmp_path / "a2.csv")[0] == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "a2.csv").read_bytes()
    fcfg = write(tmp_path / "f.json", {"model": {"n_features": 16, "T": 4}, "n_data": 5000})
    code, out = run(capsys, "fit", "--config", fcfg, "--model-out", tmp_path / "m.json")
    assert code == 0 and json.loads(out.out)["residual"] < 0.05
    code, _ = run(capsys, "--seed", 2, "sample", "--config", cfg, "--score", f"model:{tmp_path / 'm.json'}", "--out", tmp_path / "b.csv")
    assert code == 0
    code, out = run(capsys, "w2", tmp_path / "a.csv", tmp_path / "b.csv", "--method", "exact-assignment")
    doc = json.loads(out.out)
    assert code == 0 and doc["method"] == "exact-assignment" and doc["n"] == 500
    code, out = run(capsys, "w2", tmp_path / "a.csv", tmp_path / "b.csv")
    assert json.loads(out.out)["value"] == pytest.approx(doc["value"], abs=1e-10)


def test_bounds_command(tmp_path, capsys):
    inputs = {"d": 1, "second_moment": 13, "K": 8 / 81, "mu": 1 / 81, "T": 2, "epsilon": 0.01, "gamma": 0.001, "K_total": 0.5, "delta": 0.5}
    code, out = run(capsys, "bounds", "--config", write(tmp_path / "b.json", inputs))
    doc = json.loads(out.out)
    assert code == 0
    t = doc["theorem_312"]
    assert t["total"] == pytest.approx(sum(t["terms"].values()))
    assert doc["thresholds"]["eps_delta"] == pytest.approx(0.25 / (64 * (13**0.5 + 1) ** 2))


def test_sweep(tmp_path, capsys):
    spec = {"gammas": [0.04, 0.02], "Ts": [3.0], "n": 400, "replicates": 2}
    code, out = run(capsys, "--threads", 2, "--out", tmp_path, "sweep", "--config", write(tmp_path / "sw.json", spec))
    assert code == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(lines) == 3 + 4
    header = lines[2].split(",")
    assert header[:4] == ["T", "epsilon", "gamma", "replicate"] and "eps_sn" in header and "bound_total" in header
    assert [ln.split(",")[2] for ln in lines[3:]] == ["0.04", "0.04", "0.02", "0.02"]
    summary = json.loads((tmp_path / "sweep_summary.json").read_text())
    assert summary["slopes"][0]["axis"] == "gamma"
    # single-thread run writes identical bytes
    run(capsys, "--threads", 1, "--out", tmp_path / "one", "sweep", "--config", tmp_path / "sw.json")
    assert (tmp_path / "one" / "sweep.csv").read_bytes() == (tmp_path / "sweep.csv").read_bytes()


def test_sweep_spec_validation(tmp_path, capsys):
    for bad in ({"gammas": []}, {"replicates": 0}, {"score": "nope"}, {"typo": 1}):
        code, out = run(capsys, "sweep", "--config", write(tmp_path / "bad.json", bad))
        assert code == 1, bad


def test_verify_assumptions(tmp_path, capsys):
    code, out = run(capsys, "verify-assumptions", "--config", write(tmp_path / "v.json", {"n_pairs": 2000}))
    doc = json.loads(out.out)
    assert code == 0 and doc["passed"]
    nonconvex = [f for f in doc["families"] if f["potential"]["family"] == "max_norm_nonconvex"]
    assert all(f["empirical_K"] > 0 for f in nonconvex)
    wrong = {"potential": {"family": "gaussian_mixture", "weights": [1], "means": [0], "stds": [1], "overrides": {"K": 0, "mu": 2.0, "R": 0}}}
    code, _ = run(capsys, "verify-assumptions", "--config", write(tmp_path / "w.json", wrong))
    assert code == 2
    narrow = {"potential": {"family": "gaussian_mixture", "weights": [0.5, 0.5], "means": [-3, 3], "stds": [1, 1]}}
    code, _ = run(capsys, "verify-assumptions", "--config", write(tmp_path / "n.json", narrow))
    assert code == 1


def test_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as ei:
        cli.main(["nope"])
    assert ei.value.code == 1
    assert run(capsys, "constants", "--config", tmp_path / "missing.json")[0] == 1
    far = {"d": 1, "second_moment": 13, "K": 8 / 81, "mu": 1 / 81, "T": 2, "epsilon": 0.01, "gamma": 0.001, "delta": 1e-300}
    assert run(capsys, "bounds", "--config", write(tmp_path / "far.json", far))[0] == 3
