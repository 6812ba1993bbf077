import json
import math

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from delaywave import scenario
from delaywave.cli import main
from delaywave.scenario import PRESETS, ScenarioError


MINIMAL = {
    "model": {
        "length": math.pi, "modes": 16, "quad_points": 64,
        "damping_region": [[0.0, math.pi]],
        "delay_region": [[0.0, math.pi]],
        "damping_coefficient": 0.5,
    },
    "physics": {
        "nonlinearity": {"kind": "linear"},
        "coefficient": {"kind": "constant", "value": 0.0},
        "delay": {"kind": "constant", "bound": 0.5, "value": 0.5},
    },
    "data": {
        "u0": {"kind": "modes", "coefficients": [0.1]},
        "u1": {"kind": "modes", "coefficients": [0.0]},
        "g": {"kind": "constant", "value": 0.0},
    },
    "stepper": {"dt": 0.001, "t_end": 1.0, "stride": 10},
}


def _write(tmp_path, doc, name="scn.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return str(p)


# --- scenario loading -------------------------------------------------

def test_presets_all_load():
    for name in PRESETS:
        scn = scenario.load(name)
        scn.build_model()


def test_minimal_scenario(tmp_path):
    scn = scenario.load(_write(tmp_path, MINIMAL))
    m = scn.build_model()
    assert m.n_modes == 16
    assert scn.beta is None


def test_unknown_key_rejected(tmp_path):
    import copy
    doc = copy.deepcopy(MINIMAL)
    doc["physics"]["typo_key"] = 1
    with pytest.raises(ScenarioError, match="typo_key"):
        scenario.load(_write(tmp_path, doc))


def test_missing_block_rejected(tmp_path):
    doc = {k: v for k, v in MINIMAL.items() if k != "stepper"}
    with pytest.raises(ScenarioError, match="stepper"):
        scenario.load(_write(tmp_path, doc))


def test_unknown_preset():
    with pytest.raises(ScenarioError, match="no such file or preset"):
        scenario.load("does-not-exist")


def test_overrides_and_aliases():
    scn = scenario.load("constant-delay-small")
    over = scn.with_overrides({scenario.resolve_param("k0"): 0.07,
                               scenario.resolve_param("t_end"): 5.0})
    assert over.build_coefficient().value == 0.07
    assert over.raw["stepper"]["t_end"] == 5.0
    # base object untouched
    assert scn.build_coefficient().value == 0.05


def test_random_fields_seeded():
    scn = scenario.load("destabilization")
    m = scn.build_model()
    u0a, v0a = scn.build_initial_data(m)
    u0b, v0b = scn.build_initial_data(m)
    assert np.array_equal(u0a, u0b) and np.array_equal(v0a, v0b)
    other = scn.with_overrides({"seed": 99})
    _, v0c = other.build_initial_data(m)
    assert not np.array_equal(v0a, v0c)


# --- CLI --------------------------------------------------------------

runner = CliRunner()


def test_simulate_writes_schema(tmp_path):
    out = tmp_path / "run"
    res = runner.invoke(main, ["simulate", "--scenario", "degenerate-delay",
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header == ("t,E,scriptE,cbar_bound,normU,norm_ut,ahalf_u,psi,"
                      "k_t,tau_t,delayed_term_norm,envelope_r2")


def test_simulate_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        res = runner.invoke(main, ["simulate", "--scenario", "vanishing-delay",
                                   "--out", str(out)])
        assert res.exit_code == 0, res.output
        outs.append((out / "trajectory.csv").read_bytes())
    assert outs[0] == outs[1]


def test_simulate_invalid_scenario(tmp_path):
    res = runner.invoke(main, ["simulate", "--scenario", "nope",
                               "--out", str(tmp_path)])
    assert res.exit_code == 2


def test_simulate_zero_data(tmp_path, monkeypatch):
    import copy
    doc = copy.deepcopy(MINIMAL)
    doc["data"]["u0"]["coefficients"] = [0.0]
    p = tmp_path / "zero.yaml"
    p.write_text(yaml.safe_dump(doc))
    out = tmp_path / "run"
    res = runner.invoke(main, ["simulate", "--scenario", str(p),
                               "--out", str(out)])
    assert res.exit_code == 0
    data = np.genfromtxt(out / "trajectory.csv", delimiter=",", names=True)
    assert np.all(data["normU"] == 0.0) and np.all(data["E"] == 0.0)


def test_certify_and_report(tmp_path):
    out = tmp_path / "run"
    res = runner.invoke(main, ["simulate", "--scenario",
                               "constant-delay-small", "--out", str(out)])
    assert res.exit_code == 0, res.output
    res = runner.invoke(main, ["certify", "--scenario",
                               "constant-delay-small", "--out", str(out)])
    assert res.exit_code == 0, res.output
    doc = json.loads((out / "certificate.json").read_text())
    assert doc["hypotheses_passed"] and doc["data_certified"]
    assert doc["rho"] > 0.0 and doc["rate_r2"] > 0.0
    res = runner.invoke(main, ["report", "--out", str(out)])
    assert res.exit_code == 0, res.output
    rep = json.loads(res.output)
    assert rep["fitted_rate"] > 0.0
    assert rep["certificate"]["rho"] == doc["rho"]


def test_certify_linear_rho_null(tmp_path):
    out = tmp_path / "run"
    res = runner.invoke(main, ["certify", "--scenario", "linear-damped",
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    doc = json.loads((out / "certificate.json").read_text())
    assert doc["rho"] is None  # unconstrained linear problem


def test_certify_hypotheses_fail_exit4(tmp_path):
    res = runner.invoke(main, ["certify", "--scenario", "destabilization",
                               "--out", str(tmp_path)])
    assert res.exit_code == 4


def test_verify_pass_and_tamper(tmp_path):
    out = tmp_path / "run"
    res = runner.invoke(main, ["verify", "--scenario", "constant-delay-small",
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    doc = json.loads((out / "verify.json").read_text())
    assert all(entry["passed"] for entry in doc.values())
    # tamper hook: shrinking Cbar must surface as an exit-6 violation
    res = runner.invoke(main, ["verify", "--scenario", "constant-delay-small",
                               "--out", str(out), "--cbar-scale", "1e-6"])
    assert res.exit_code == 6


def test_sweep_empty_values(tmp_path):
    res = runner.invoke(main, ["sweep", "--scenario", "linear-damped",
                               "--out", str(tmp_path), "--param", "a",
                               "--values", ""])
    assert res.exit_code == 2


def test_sweep_damping_rates(tmp_path):
    out = tmp_path / "run"
    res = runner.invoke(main, ["sweep", "--scenario", "linear-damped",
                               "--out", str(out), "--param", "a",
                               "--values", "0.1,0.2,0.4"])
    assert res.exit_code == 0, res.output
    rows = (out / "sweep.csv").read_text().splitlines()[1:]
    for row, a in zip(rows, (0.1, 0.2, 0.4)):
        rate = float(row.split(",")[1])
        assert abs(rate - a / 2.0) <= 0.05 * (a / 2.0)


def test_converge_validation(tmp_path):
    res = runner.invoke(main, ["converge", "--scenario", "vanishing-delay",
                               "--out", str(tmp_path), "--eps", "2.0"])
    assert res.exit_code == 2
    res = runner.invoke(main, ["converge", "--scenario", "vanishing-delay",
                               "--out", str(tmp_path), "--eps", "abc"])
    assert res.exit_code == 2


def test_converge_zero_shift(tmp_path):
    out = tmp_path / "run"
    res = runner.invoke(main, ["converge", "--scenario", "degenerate-delay",
                               "--out", str(out), "--eps", "0"])
    assert res.exit_code == 0, res.output
    rows = (out / "convergence.csv").read_text().splitlines()[1:]
    assert float(rows[0].split(",")[1]) == 0.0
