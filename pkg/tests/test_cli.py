import cmath
import json
import math

import numpy as np
import pytest

from stochexp import cli
from stochexp.levycalc import levy_khintchin


MV_SPEC = {
    "levy": {"mu": 0.2, "sigma": 0.2,
             "jump": {"type": "gaussian_cpp", "intensity": 1.0,
                      "mean": 0.0, "var": 0.01}},
    "representation": {"id": "exp_return", "a": 4.484438439009606},
    "horizon": 1.0,
    "sim": {"n_paths": 4000, "seed": 7},
}


@pytest.fixture
def spec_file(tmp_path):
    def write(doc):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(doc))
        return str(path)

    return write


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_schema_rejects_unknown_keys(spec_file, capsys):
    doc = dict(MV_SPEC)
    doc["unexpected"] = 1
    code, _, err = run(capsys, "charfn", "--spec", spec_file(doc), "--u", "1")
    assert code == 2
    assert "unexpected" in err


def test_schema_rejects_non_finite(spec_file, capsys):
    doc = json.loads(json.dumps(MV_SPEC))
    doc["levy"]["mu"] = float("inf")
    path = spec_file(MV_SPEC)
    import json as js
    with open(path, "w") as fh:
        fh.write(js.dumps(doc).replace("Infinity", "1e999"))
    code, _, err = run(capsys, "charfn", "--spec", path, "--u", "1")
    assert code == 2


def test_schema_rejects_bad_catalog_id(spec_file, capsys):
    doc = json.loads(json.dumps(MV_SPEC))
    doc["representation"] = {"id": "mystery"}
    code, _, err = run(capsys, "simulate", "--spec", spec_file(doc))
    assert code == 2
    assert "id" in err


def test_missing_spec_file(capsys):
    code, _, err = run(capsys, "charfn", "--spec", "/nonexistent.json", "--u", "1")
    assert code == 2


def test_charfn_matches_module(spec_file, capsys, tmp_path):
    path = spec_file(MV_SPEC)
    out_dir = tmp_path / "out"
    code, _, _ = run(capsys, "charfn", "--spec", path, "--u", "0,1,2.5",
                     "--out", str(out_dir))
    assert code == 0
    rows = (out_dir / "charfn.csv").read_text().strip().splitlines()
    assert rows[0] == "u,re,im"
    spec = cli.load_spec(path)
    for line in rows[1:]:
        u, re, im = (float(tok) for tok in line.split(","))
        want = levy_khintchin(u, spec.triplet, spec.schedule, spec.horizon)
        assert complex(re, im) == want


def test_charfn_csv_deterministic(spec_file, capsys, tmp_path):
    path = spec_file(MV_SPEC)
    texts = []
    for sub in ("a", "b"):
        out_dir = tmp_path / sub
        code, _, _ = run(capsys, "charfn", "--spec", path, "--out", str(out_dir))
        assert code == 0
        texts.append((out_dir / "charfn.csv").read_bytes())
    assert texts[0] == texts[1]


def test_simulate_deterministic_and_reproducible(spec_file, capsys, tmp_path):
    path = spec_file(MV_SPEC)
    outs = []
    for sub in ("a", "b"):
        out_dir = tmp_path / sub
        code, _, _ = run(capsys, "simulate", "--spec", path, "--out",
                         str(out_dir), "--json")
        assert code == 0
        outs.append((out_dir / "paths.csv").read_bytes())
    assert outs[0] == outs[1]


def test_simulate_seed_override_changes_output(spec_file, capsys, tmp_path):
    path = spec_file(MV_SPEC)
    a = tmp_path / "a"
    b = tmp_path / "b"
    run(capsys, "simulate", "--spec", path, "--out", str(a))
    run(capsys, "simulate", "--spec", path, "--out", str(b), "--seed", "8")
    assert (a / "paths.csv").read_bytes() != (b / "paths.csv").read_bytes()


def test_mv_demo_outputs(capsys):
    code, out, _ = run(capsys, "mv-demo", "--json")
    assert code == 0
    env = json.loads(out)
    a = env["outputs"]["optimal_fraction"]["re"]
    gm0 = env["outputs"]["negative_sign_probability"]["re"]
    assert abs(a - 4.48) <= 0.01
    assert abs(gm0 - 0.022) <= 0.002


def test_mellin_envelope(spec_file, capsys):
    path = spec_file(MV_SPEC)
    code, out, _ = run(capsys, "mellin", "--spec", path, "--u", "0,2", "--json")
    assert code == 0
    env = json.loads(out)
    assert env["outputs"]["g_plus_0"]["re"] + env["outputs"]["g_minus_0"]["re"] \
        == pytest.approx(1.0, abs=1e-9)


def test_utility_command(spec_file, capsys):
    doc = json.loads(json.dumps(MV_SPEC))
    del doc["representation"]
    doc["levy"]["truncation"] = {"type": "identity"}
    doc["utility"] = {"lambda_continuous": 1.0, "lambda_scheduled": 1.0,
                      "theta": 2.0, "law": {"type": "gaussian", "mean": 0.0,
                                            "var": 0.01}}
    code, out, _ = run(capsys, "utility", "--spec", spec_file(doc), "--json")
    assert code == 0
    env = json.loads(out)
    assert env["outputs"]["expected_utility"]["re"] == pytest.approx(
        0.8187609987274722, abs=1e-9)


def test_girsanov_command(spec_file, capsys):
    doc = json.loads(json.dumps(MV_SPEC))
    doc["representation"] = {"id": "identity"}
    doc["tilt"] = {"id": "exponential", "zeta": 0.5}
    code, out, _ = run(capsys, "girsanov", "--spec", spec_file(doc), "--json")
    assert code == 0
    env = json.loads(out)
    lam_q = 1.0 * math.exp(0.5 * 0.0 + 0.5 * 0.25 * 0.01)
    assert env["outputs"]["q_jump_intensity"]["re"] == pytest.approx(
        lam_q, rel=1e-10)


def test_girsanov_rejects_invalid_tilt(spec_file, capsys):
    doc = json.loads(json.dumps(MV_SPEC))
    doc["tilt"] = {"id": "affine", "zeta": -500.0}
    code, _, err = run(capsys, "girsanov", "--spec", spec_file(doc))
    assert code == 3
    assert "numerical_failure" in err


def test_verify_suites_pass(spec_file, capsys):
    doc = json.loads(json.dumps(MV_SPEC))
    doc["sim"] = {"n_paths": 20000, "seed": 5}
    path = spec_file(doc)
    for suite in ("yor", "pii-mean", "martingale"):
        code, out, _ = run(capsys, "verify", "--spec", path, "--suite", suite)
        assert code == 0, f"{suite} failed: {out}"
        assert "PASS" in out


def test_verify_importance_suite(spec_file, capsys):
    doc = json.loads(json.dumps(MV_SPEC))
    doc["representation"] = {"id": "exp_return", "a": 1.5}
    doc["tilt"] = {"id": "exponential", "zeta": 0.4}
    doc["sim"] = {"n_paths": 20000, "seed": 5}
    code, out, _ = run(capsys, "verify", "--spec", spec_file(doc),
                       "--suite", "importance")
    assert code == 0
    assert out.count("PASS") == 2


def test_verify_unknown_suite(spec_file, capsys):
    code, _, err = run(capsys, "verify", "--spec", spec_file(MV_SPEC),
                       "--suite", "nope")
    assert code == 2


def test_density_command_emits_panels(spec_file, capsys, tmp_path):
    doc = {
        "levy": {"mu": 0.1, "sigma": 0.2, "jump": {"type": "none"}},
        "representation": {"id": "exp_return", "a": 0.8},
        "horizon": 1.0,
        "grids": {"x_min": -8.0, "x_max": 4.0, "n": 256,
                  "U": 60.0, "n_u": 4096},
    }
    out_dir = tmp_path / "figs"
    code, out, _ = run(capsys, "density", "--spec", spec_file(doc),
                       "--out", str(out_dir), "--json")
    assert code == 0
    env = json.loads(out)
    assert env["outputs"]["negative_mass"]["re"] == 0.0
    assert env["outputs"]["positive_mass"]["re"] == pytest.approx(1.0, abs=1e-3)
    assert env["outputs"]["wealth_mass"]["re"] == pytest.approx(1.0, abs=1e-3)
    names = {p.split("/")[-1] for p in env["files"]}
    assert names == {"fig1_negative_part.csv", "fig1_positive_part.csv",
                     "fig2_terminal_wealth.csv"}
    header = (out_dir / "fig1_positive_part.csv").read_text().splitlines()[0]
    assert header == "log_modulus,positive_part_subdensity"


def test_density_rejects_non_decaying_transform(spec_file, capsys):
    # pure-jump models give a conditional transform with no diffusion decay;
    # the inversion window check must fail loudly, exit code 3
    doc = {
        "levy": {"mu": 0.0, "sigma": 0.0,
                 "jump": {"type": "atoms", "atoms": [[0.3, 0.5], [-0.2, 0.8]]}},
        "representation": {"id": "exp_return", "a": 1.5},
        "horizon": 1.0,
        "grids": {"x_min": -8.0, "x_max": 4.0, "n": 256, "U": 60.0,
                  "n_u": 4096},
    }
    code, _, err = run(capsys, "density", "--spec", spec_file(doc), "--out",
                       "/tmp/unused_density_out")
    assert code == 3
    assert "numerical_failure" in err


def test_schedule_spec_roundtrip(spec_file, capsys):
    doc = json.loads(json.dumps(MV_SPEC))
    doc["schedule"] = [
        {"time": 0.4, "law": {"type": "gaussian", "mean": 0.0, "var": 0.01}},
        {"time": 0.9, "law": {"type": "atoms", "atoms": [[0.1, 0.5], [-0.1, 0.5]]}},
    ]
    code, out, _ = run(capsys, "charfn", "--spec", spec_file(doc), "--u", "1",
                       "--json")
    assert code == 0
    env = json.loads(out)
    val = env["outputs"]["phi_at_first_u"]
    assert math.hypot(val["re"], val["im"]) <= 1.0 + 1e-12
