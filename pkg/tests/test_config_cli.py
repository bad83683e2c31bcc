"""Strict-config parsing and the command-line front end.

Configs must round-trip exactly and reject anything they don't understand;
every CLI command must be a pure function of (config, seed) whose reruns
produce byte-identical files, with documented exit codes.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from spindetect.cli import main
from spindetect.config import (
    SCHEMA_VERSION,
    LevelsSettings,
    RunSettings,
    config_from_preset,
    load_config,
    parse_config,
    serialize_config,
)
from spindetect.errors import ConfigError, NumericalFailure
from spindetect.presets import device_bundle, sim_model


# ---------------------------------------------------------------------------
# config schema
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("system", ["nv", "bi", "sim"])
def test_roundtrip_is_idempotent(system):
    cfg = config_from_preset(system)
    doc = serialize_config(cfg)
    cfg2 = parse_config(json.loads(json.dumps(doc)))
    assert serialize_config(cfg2) == doc
    assert cfg2.model == cfg.model
    assert cfg2.run == cfg.run
    assert cfg2.levels == cfg.levels
    assert cfg2.spin_point == cfg.spin_point


def test_preset_sim_matches_model_factory():
    cfg = config_from_preset("sim")
    assert cfg.model == sim_model()
    assert cfg.system == "sim"
    with pytest.raises(ConfigError):
        config_from_preset("xyz")
    # The bare simulation preset carries no device to design around.
    with pytest.raises(ConfigError):
        cfg.bundle()


def test_unknown_fields_rejected_with_dotted_path():
    with pytest.raises(ConfigError, match=r"model\.gee"):
        parse_config({"schema_version": SCHEMA_VERSION, "system": "sim",
                      "model": {"gee": 1.0}})
    with pytest.raises(ConfigError, match=r"run\.trial"):
        parse_config({"schema_version": SCHEMA_VERSION, "system": "sim",
                      "run": {"trial": 10}})
    with pytest.raises(ConfigError, match="bogus"):
        parse_config({"schema_version": SCHEMA_VERSION, "system": "sim",
                      "bogus": {}})


def test_schema_version_is_mandatory_and_checked():
    with pytest.raises(ConfigError, match="schema_version"):
        parse_config({"system": "sim"})
    with pytest.raises(ConfigError, match="schema_version"):
        parse_config({"schema_version": 99, "system": "sim"})
    with pytest.raises(ConfigError, match="system"):
        parse_config({"schema_version": SCHEMA_VERSION})
    with pytest.raises(ConfigError, match="system"):
        parse_config({"schema_version": SCHEMA_VERSION, "system": "weird"})


def test_model_overrides_apply_on_top_of_preset():
    doc = {
        "schema_version": SCHEMA_VERSION,
        "system": "sim",
        "model": {"eta": 0.25, "beta_per_sqrt_s": [40.0, 15.0]},
    }
    cfg = parse_config(doc)
    base = sim_model()
    assert cfg.model.eta == 0.25
    assert cfg.model.beta == complex(40.0, 15.0)
    assert cfg.model.g == base.g
    assert cfg.model.kappa == base.kappa
    with pytest.raises(ConfigError, match=r"model\.beta_per_sqrt_s"):
        parse_config({"schema_version": SCHEMA_VERSION, "system": "sim",
                      "model": {"beta_per_sqrt_s": [1.0, 2.0, 3.0]}})
    # Invalid physics surfaces as a config error naming the section.
    with pytest.raises(ConfigError, match="model"):
        parse_config({"schema_version": SCHEMA_VERSION, "system": "sim",
                      "model": {"eta": 2.0}})


def test_custom_system_requires_g_and_kappa():
    with pytest.raises(ConfigError, match=r"model\.g_rad_per_s"):
        parse_config({"schema_version": SCHEMA_VERSION, "system": "custom"})
    cfg = parse_config({
        "schema_version": SCHEMA_VERSION,
        "system": "custom",
        "model": {"g_rad_per_s": 5e4, "kappa_per_s": 5e5},
    })
    assert cfg.model.g == 5e4
    assert cfg.resonator is None and cfg.geometry is None
    with pytest.raises(ConfigError):
        cfg.bundle()


def test_run_settings_validation():
    with pytest.raises(ConfigError, match="exactly one"):
        RunSettings(duration_s=1.0, duration_tau1=20.0)
    with pytest.raises(ConfigError, match="exactly one"):
        RunSettings(duration_s=None, duration_tau1=None)
    with pytest.raises(ConfigError, match="prior"):
        RunSettings(prior=1.0)
    with pytest.raises(ConfigError, match="master_seed"):
        RunSettings(master_seed=-1)
    with pytest.raises(ConfigError, match="master_seed"):
        RunSettings(master_seed=2 ** 64)
    with pytest.raises(ConfigError, match="eta_list"):
        RunSettings(eta_list=(0.5, 1.5))
    with pytest.raises(ConfigError, match="dt_s"):
        RunSettings(dt_s=0.0)
    s = RunSettings(duration_tau1=20.0, duration_s=None)
    assert s.duration_seconds(2.5e-4) == pytest.approx(5e-3)
    s = RunSettings(duration_s=1.25e-3, duration_tau1=None)
    assert s.duration_seconds(2.5e-4) == 1.25e-3
    with pytest.raises(ConfigError, match="mutually exclusive"):
        parse_config({"schema_version": SCHEMA_VERSION, "system": "sim",
                      "run": {"duration_s": 1.0, "duration_tau1": 20.0}})


def test_levels_settings_validation():
    with pytest.raises(ConfigError, match="b_max"):
        LevelsSettings(b_min=2e-3, b_max=1e-3)
    with pytest.raises(ConfigError, match="steps"):
        LevelsSettings(steps=0)
    with pytest.raises(ConfigError, match=r"bi\.nuclear_spin"):
        parse_config({"schema_version": SCHEMA_VERSION, "system": "bi",
                      "bi": {"nuclear_spin": 0.4}})


def test_load_config_rejects_invalid_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"schema_version": SCHEMA_VERSION,
                                "system": "sim"}), encoding="utf-8")
    assert load_config(good).system == "sim"


# ---------------------------------------------------------------------------
# CLI plumbing
# ---------------------------------------------------------------------------

def _read_bytes(directory: Path, names) -> dict:
    return {name: (directory / name).read_bytes() for name in names}


def test_cli_usage_and_config_errors_exit_2(tmp_path, capsys):
    assert main(["design", "--out", str(tmp_path / "a")]) == 2  # no device
    assert main(["simulate", "--duration", "banana"]) == 2
    assert main(["simulate", "--duration", "5"]) == 2  # missing unit
    assert main(["simulate", "--no-such-flag"]) == 2
    assert main(["ensemble", "--eta", "abc", "--out", str(tmp_path / "b")]) == 2
    assert main(["ensemble", "--eta", "1.5", "--out", str(tmp_path / "b")]) == 2
    assert main(["design", "--preset", "nv", "--zr", "-3"]) == 2
    assert main(["simulate", "--seed", "-1"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": SCHEMA_VERSION,
                               "system": "sim", "oops": 1}), encoding="utf-8")
    assert main(["simulate", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "error:" in err


def test_cli_help_exits_0(capsys):
    assert main(["--help"]) == 0
    out = capsys.readouterr().out
    for name in ("design", "levels", "simulate", "ensemble"):
        assert name in out


def test_cli_numerical_failure_exits_3(tmp_path, monkeypatch, capsys):
    import spindetect.cli as cli_mod

    def boom(*args, **kwargs):
        raise NumericalFailure("synthetic blow-up")

    monkeypatch.setattr(cli_mod, "generate_record", boom)
    code = main(["simulate", "--duration", "1tau1",
                 "--out", str(tmp_path / "x")])
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# design
# ---------------------------------------------------------------------------

def test_cli_design_outputs_and_reruns(tmp_path, capsys):
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(["design", "--preset", "nv", "--out", str(out1)]) == 0
    assert main(["design", "--preset", "nv", "--out", str(out2)]) == 0
    stdout = capsys.readouterr().out
    assert "zero-point current" in stdout

    names = ("design_report.json", "fieldmap.csv", "fieldmap.png")
    blobs1 = _read_bytes(out1, names)
    blobs2 = _read_bytes(out2, names)
    for name in names:
        assert blobs1[name] == blobs2[name], f"{name} differs between reruns"
        assert len(blobs1[name]) > 0

    report = json.loads(blobs1["design_report.json"])
    assert report["system"] == "nv"
    for key in ("delta_i_A", "delta_b_T", "g_from_field_rad_per_s",
                "gamma_p_per_s", "tau_1_s", "kinetic_inductance_H"):
        assert key in report and np.isfinite(report[key])

    header = blobs1["fieldmap.csv"].decode().splitlines()[0]
    assert header == "x_m,y_m,Bx_T,By_T,|B|_T"


def test_cli_design_zr_override_scales_current(tmp_path):
    out_base = tmp_path / "base"
    out_zr = tmp_path / "zr"
    assert main(["design", "--preset", "nv", "--out", str(out_base)]) == 0
    z_nominal = device_bundle("nv").resonator.z_r
    assert main(["design", "--preset", "nv", "--out", str(out_zr),
                 "--zr", str(4.0 * z_nominal)]) == 0
    base = json.loads((out_base / "design_report.json").read_text())
    quad = json.loads((out_zr / "design_report.json").read_text())
    # delta_i scales as 1/sqrt(Z), so quadrupling Z halves the current.
    assert quad["delta_i_A"] == pytest.approx(base["delta_i_A"] / 2, rel=1e-12)


# ---------------------------------------------------------------------------
# levels
# ---------------------------------------------------------------------------

def test_cli_levels_outputs_and_reruns(tmp_path):
    config = {
        "schema_version": SCHEMA_VERSION,
        "system": "bi",
        "levels": {"b_min_T": 0.0, "b_max_T": 5e-3, "steps": 7},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config), encoding="utf-8")
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    assert main(["levels", "--config", str(cfg_path), "--out", str(out1)]) == 0
    assert main(["levels", "--config", str(cfg_path), "--out", str(out2)]) == 0
    assert (out1 / "levels.csv").read_bytes() == (out2 / "levels.csv").read_bytes()
    assert (out1 / "levels.png").read_bytes() == (out2 / "levels.png").read_bytes()

    lines = (out1 / "levels.csv").read_text().splitlines()
    assert lines[0] == "B0_T,level_index,label,energy_over_h_Hz"
    # Bi in silicon: electron 1/2 with nucleus 9/2 gives 20 levels per field.
    assert len(lines) - 1 == 7 * 20
    # Sim system has no level structure to draw.
    assert main(["levels", "--preset", "sim", "--out", str(tmp_path / "r3")]) == 2


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

_SIM_FILES = ("record_spin.csv", "record_nospin.csv", "record_spin.json",
              "record_nospin.json", "zeta.csv", "posterior.csv", "simulate.png")


def test_cli_simulate_outputs_and_reruns(tmp_path):
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    args = ["simulate", "--duration", "4e-5s", "--seed", "999"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    blobs1 = _read_bytes(out1, _SIM_FILES)
    blobs2 = _read_bytes(out2, _SIM_FILES)
    for name in _SIM_FILES:
        assert blobs1[name] == blobs2[name], f"{name} differs between reruns"

    sidecar = json.loads(blobs1["record_spin.json"])
    assert sidecar["seed"] == 999
    assert sidecar["spin_present"] is True
    assert sidecar["params_hash"] == sim_model().params_hash()
    n = sidecar["n_steps"]
    assert n >= 50
    for name in ("record_spin.csv", "record_nospin.csv", "zeta.csv"):
        assert len(blobs1[name].decode().splitlines()) == n + 1

    # A different seed must change the record bytes.
    out3 = tmp_path / "r3"
    assert main(["simulate", "--duration", "4e-5s", "--seed", "1000",
                 "--out", str(out3)]) == 0
    assert (out3 / "record_spin.csv").read_bytes() != blobs1["record_spin.csv"]


def test_cli_simulate_zero_duration(tmp_path):
    out = tmp_path / "zero"
    assert main(["simulate", "--duration", "0", "--out", str(out)]) == 0
    assert (out / "zeta.csv").read_text().splitlines() == ["t_s,zeta_spin,zeta_nospin"]
    assert (out / "posterior.csv").read_text().splitlines() == ["t_s,p_spin,p_nospin"]


# ---------------------------------------------------------------------------
# ensemble
# ---------------------------------------------------------------------------

def test_cli_ensemble_outputs_and_reruns(tmp_path):
    out1 = tmp_path / "e1"
    out2 = tmp_path / "e2"
    args = ["ensemble", "--trials", "120", "--duration", "0.5tau1",
            "--eta", "0.5", "--seed", "4242"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0

    names = ("fig5b_eta0.5.csv", "fig6_eta0.5.csv", "fig7.csv", "manifest.json",
             "fig5b_eta0.5.png", "fig6_eta0.5.png", "fig7.png")
    blobs1 = _read_bytes(out1, names)
    blobs2 = _read_bytes(out2, names)
    for name in names:
        assert blobs1[name] == blobs2[name], f"{name} differs between reruns"

    manifest = json.loads(blobs1["manifest.json"])
    assert manifest["trials"] == 120
    assert manifest["master_seed"] == 4242
    assert [run["eta"] for run in manifest["runs"]] == [0.5]
    assert manifest["runs"][0]["params_hash"] == \
        sim_model().with_updates(eta=0.5).params_hash()
    # The output directory must not leak into the manifest (rerun identity).
    assert "out_dir" not in manifest["config"]["run"]

    # fig5b holds one zeta per trial and hypothesis at the final time.
    lines = blobs1["fig5b_eta0.5.csv"].decode().splitlines()
    assert lines[0] == "zeta,hypothesis"
    assert len(lines) - 1 == 2 * 120

    header = blobs1["fig7.csv"].decode().splitlines()[0]
    assert header == ("eta,t_s,error_threshold_analytic,"
                      "error_threshold_empirical,error_bayes_empirical")


def test_cli_ensemble_multiple_eta(tmp_path):
    out = tmp_path / "multi"
    assert main(["ensemble", "--trials", "100", "--duration", "0.25tau1",
                 "--eta", "0.25,1", "--seed", "7", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert [run["eta"] for run in manifest["runs"]] == [0.25, 1.0]
    for tag in ("eta0.25", "eta1"):
        assert (out / f"fig5b_{tag}.csv").exists()
        assert (out / f"fig6_{tag}.png").exists()
    rows = (out / "fig7.csv").read_text().splitlines()[1:]
    etas = {row.split(",")[0] for row in rows}
    assert etas == {"0.25", "1"}
