import json
import math

import pytest

from gyrospin.cli import ConfigError, main, parse_config

APPB = {
    "particle": {"l1_nm": 60.0, "l3_nm": 200.0},
    "fields": {"B_mT": -100.0, "rotation_Hz": 1e6},
}


def write_config(tmp_path, payload, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return p


class TestParseConfig:
    def test_minimal_with_defaults(self, tmp_path):
        cfg = parse_config(write_config(tmp_path, APPB))
        assert cfg.geometry.l2 == cfg.geometry.l1
        assert cfg.geometry.density == 3500.0
        assert cfg.fields.gamma0 == pytest.approx(2 * math.pi * 28.024e9)
        assert cfg.fields.d_nv == pytest.approx(2 * math.pi * 2.87e9)
        assert cfg.environment.t2 == pytest.approx(10e-6)

    def test_cyclic_to_angular_conversion(self, tmp_path):
        cfg = parse_config(write_config(tmp_path, APPB))
        assert cfg.fields.omega == pytest.approx(2 * math.pi * 1e6)
        assert cfg.trap.omega_ac == pytest.approx(2 * math.pi * 0.5e6)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(tmp_path / "nope.json")

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError):
            parse_config(p)

    def test_unknown_key_rejected(self, tmp_path):
        bad = {**APPB, "particle": {**APPB["particle"], "l4_nm": 3.0}}
        with pytest.raises(ConfigError, match="l4_nm"):
            parse_config(write_config(tmp_path, bad))

    def test_unknown_section_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="extra"):
            parse_config(write_config(tmp_path, {**APPB, "extra": {}}))

    def test_negative_semiaxis_rejected(self, tmp_path):
        bad = {**APPB, "particle": {"l1_nm": 60.0, "l3_nm": -200.0}}
        with pytest.raises(ConfigError):
            parse_config(write_config(tmp_path, bad))

    def test_pressure_unit_conversion(self, tmp_path):
        cfg = parse_config(write_config(tmp_path, APPB))
        assert cfg.environment.gas_pressure == pytest.approx(1e-6)  # 1e-8 mbar in Pa


class TestExitCodes:
    def test_config_error_is_2(self, tmp_path, capsys):
        bad = write_config(tmp_path, {"particle": {"l1_nm": 60.0}})
        assert main(["derive", "--config", str(bad)]) == 2

    def test_ok_is_0(self, tmp_path):
        cfg = write_config(tmp_path, APPB)
        assert main(["derive", "--config", str(cfg),
                     "--out", str(tmp_path / "out")]) == 0

    def test_numeric_failure_is_3(self, tmp_path, capsys):
        # interferometer outside the dispersive regime: Delta < 0
        payload = {
            "particle": {"l1_nm": 20.0, "l3_nm": 100.0},
            "fields": {"B_mT": -120.0, "rotation_Hz": 1e6},
        }
        cfg = write_config(tmp_path, payload)
        assert main(["interfere", "--config", str(cfg),
                     "--out", str(tmp_path / "out")]) == 3

    def test_strict_regime_warning_is_4(self, tmp_path, capsys):
        # Delta/g ~ 0.67 at -60 mT: dispersive closed form degraded
        payload = {
            "particle": {"l1_nm": 20.0, "l3_nm": 100.0},
            "fields": {"B_mT": -60.0, "rotation_Hz": 1e6},
            "simulation": {"tau_points": 3, "fock_dim": 40},
        }
        cfg = write_config(tmp_path, payload)
        out = tmp_path / "out"
        assert main(["interfere", "--config", str(cfg), "--out", str(out)]) == 0
        assert main(["interfere", "--config", str(cfg), "--out", str(out),
                     "--strict"]) == 4


class TestDeriveCommand:
    def test_appendix_manifest_values(self, tmp_path):
        cfg = write_config(tmp_path, APPB)
        out = tmp_path / "out"
        assert main(["derive", "--config", str(cfg), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        ratio = manifest["flags"]["omega_beta_over_omega"]
        assert 4e-5 / 3 < ratio < 4e-5 * 3
        assert manifest["artifact_version"]
        assert manifest["config"]["particle"]["l3_nm"] == 200.0


class TestAlignmentCommand:
    PAYLOAD = {
        "particle": {"l1_nm": 60.0, "l3_nm": 200.0},
        "fields": {"B_mT": 0.0, "rotation_Hz": 1e9},
        "environment": {"T_K": 0.05},
        "simulation": {"sweep": {"B_mT": [-1.0, 1.0, 9], "T_K": [0.05], "m": 1}},
    }

    def test_csv_columns_and_crossing(self, tmp_path):
        cfg = write_config(tmp_path, self.PAYLOAD)
        out = tmp_path / "out"
        assert main(["alignment", "--config", str(cfg), "--out", str(out)]) == 0
        lines = [l for l in (out / "alignment.csv").read_text().splitlines()
                 if not l.startswith("#")]
        assert lines[0] == "B_mT,T_K,mean_cos_gamma,variance"
        gamma0_ghz = 28.024
        b0_mt = 1e9 / (gamma0_ghz * 1e9) * 1e3
        rows = [l.split(",") for l in lines[1:]]
        crossing = [r for r in rows if abs(float(r[0]) - b0_mt) < 1e-12]
        assert crossing and float(crossing[0][2]) == 0.0 and float(crossing[0][3]) == 0.5

    def test_missing_sweep_is_config_error(self, tmp_path):
        payload = {k: v for k, v in self.PAYLOAD.items() if k != "simulation"}
        cfg = write_config(tmp_path, payload)
        assert main(["alignment", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 2


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path):
        payload = {
            **APPB,
            "simulation": {"sweep": {"B_mT": [-5.0, 5.0, 11], "T_K": [0.1, 300.0],
                                     "m": -1}},
        }
        cfg = write_config(tmp_path, payload)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["alignment", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["alignment", "--config", str(cfg), "--out", str(out2)]) == 0
        assert (out1 / "alignment.csv").read_bytes() == (out2 / "alignment.csv").read_bytes()
        assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()

    def test_manifest_checksums_match_files(self, tmp_path):
        import hashlib

        payload = {
            **APPB,
            "simulation": {"sweep": {"B_mT": [-5.0, 5.0, 5], "T_K": [1.0], "m": 1}},
        }
        cfg = write_config(tmp_path, payload)
        out = tmp_path / "out"
        assert main(["alignment", "--config", str(cfg), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        for name, info in manifest["outputs"].items():
            digest = hashlib.sha256((out / name).read_bytes()).hexdigest()
            assert digest == info["sha256"]

    def test_config_echo_round_trips(self, tmp_path):
        payload = {
            **APPB,
            "simulation": {"sweep": {"B_mT": [-5.0, 5.0, 5], "T_K": [1.0], "m": 1}},
        }
        cfg_path = write_config(tmp_path, payload)
        out = tmp_path / "out"
        assert main(["alignment", "--config", str(cfg_path), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        echo_path = tmp_path / "echo.json"
        echo_path.write_text(json.dumps(manifest["config"]))
        cfg1 = parse_config(cfg_path)
        cfg2 = parse_config(echo_path)
        assert cfg1.geometry == cfg2.geometry
        assert cfg1.fields == cfg2.fields
        assert cfg1.environment == cfg2.environment


class TestUnitDiscipline:
    def test_headers_carry_units(self, tmp_path):
        payload = {
            **APPB,
            "simulation": {"gamma_points": 17},
        }
        cfg = write_config(tmp_path, payload)
        out = tmp_path / "out"
        assert main(["surfaces", "--config", str(cfg), "--out", str(out)]) == 0
        header = [l for l in (out / "surfaces.csv").read_text().splitlines()
                  if not l.startswith("#")][0]
        for col in header.split(","):
            assert any(col.endswith(sfx) for sfx in ("_rad", "_rad_s", "_s", "_mT",
                                                     "_K", "_Hz", "_nm", "_per_s"))

    def test_surfaces_reconvert(self, tmp_path):
        from gyrospin.analytics import potential_surfaces
        from gyrospin.model import Environment, derive_scales

        payload = {**APPB, "simulation": {"gamma_points": 9}}
        cfg_path = write_config(tmp_path, payload)
        out = tmp_path / "out"
        assert main(["surfaces", "--config", str(cfg_path), "--out", str(out)]) == 0
        cfg = parse_config(cfg_path)
        scales = derive_scales(cfg.geometry, cfg.trap, cfg.fields, cfg.environment)
        rows = [l.split(",") for l in (out / "surfaces.csv").read_text().splitlines()
                if l and not l.startswith("#")][1:]
        for row in rows:
            sp = potential_surfaces(scales.delta, scales.g, float(row[0]))
            assert float(row[1]) == pytest.approx(sp.omega_plus, rel=1e-15)


class TestOtherCommands:
    def test_validity_command(self, tmp_path):
        payload = {
            "particle": {"l1_nm": 20.0, "l3_nm": 100.0},
            "fields": {"B_mT": -100.0, "rotation_Hz": 1e6},
            "simulation": {"sweep": {"omega_Hz": [1e6, 3e7, 5], "l3_nm": [80, 300, 4]}},
        }
        cfg = write_config(tmp_path, payload)
        out = tmp_path / "out"
        assert main(["validity", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "validity.csv").read_text().splitlines()
        assert sum(1 for l in lines if not l.startswith("#")) == 21  # header + 20

    def test_decoherence_command(self, tmp_path):
        cfg = write_config(tmp_path, APPB)
        out = tmp_path / "out"
        assert main(["decoherence", "--config", str(cfg), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["flags"]["rate_photon_over_2pi_Hz"] == pytest.approx(7.2e6, rel=0.05)

    def test_interfere_with_sweep(self, tmp_path):
        payload = {
            "particle": {"l1_nm": 20.0, "l3_nm": 100.0},
            "fields": {"B_mT": -102.0, "rotation_Hz": 1e6},
            "simulation": {"tau_points": 5, "fock_dim": 40,
                           "sweep": {"B_mT": [-100.0, -90.0, 3]}},
        }
        cfg = write_config(tmp_path, payload)
        out = tmp_path / "out"
        assert main(["interfere", "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "interference_trace.csv").exists()
        assert (out / "interference_sweep.csv").exists()

    def test_jobs_flag_deterministic(self, tmp_path):
        payload = {
            "particle": {"l1_nm": 20.0, "l3_nm": 100.0},
            "fields": {"B_mT": -102.0, "rotation_Hz": 1e6},
            "simulation": {"tau_points": 5, "fock_dim": 32},
        }
        cfg = write_config(tmp_path, payload)
        out1, out2 = tmp_path / "j1", tmp_path / "j2"
        assert main(["interfere", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["interfere", "--config", str(cfg), "--out", str(out2),
                     "--jobs", "2"]) == 0
        assert (out1 / "interference_trace.csv").read_bytes() == \
               (out2 / "interference_trace.csv").read_bytes()

    def test_crosscheck_command(self, tmp_path):
        payload = {
            "particle": {"l1_nm": 20.0, "l3_nm": 100.0},
            "fields": {"B_mT": -100.0, "rotation_Hz": 1e6},
            "simulation": {"pair": "zeeman-term", "fock_dim": 40, "n_out": 17},
        }
        cfg = write_config(tmp_path, payload)
        out = tmp_path / "out"
        assert main(["crosscheck", "--config", str(cfg), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["flags"]["normalized_deviation"] < 0.05
