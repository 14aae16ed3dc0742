import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from lanekoop.cli import main
from lanekoop.config import (
    ConfigError,
    config_from_mapping,
    default_config,
    load_config,
    parse_rule,
)
from lanekoop.edmd import EnergyRule, FixedRule, FullRule, HardThresholdRule


class TestConfigDefaults:
    def test_empty_file_gives_standard_setup(self, tmp_path):
        p = tmp_path / "cfg.yaml"
        p.write_text("")
        cfg = load_config(p)
        assert cfg.lane.w_L == 3.5
        assert cfg.lane.w_V == 1.5
        assert cfg.lane.sigma_y == pytest.approx(1 / 3)
        assert cfg.lane.sigma_a == pytest.approx(0.2 / 3)
        assert cfg.lane.T == 0.1
        assert cfg.lane.s0 == 0.0
        assert cfg.lane.v0 == 10.0
        assert cfg.lane.a0 == 0.0
        assert cfg.lane.psi0_max == pytest.approx(math.radians(15))
        assert cfg.n_m == 2
        assert cfg.bases == ["monomial", "thin_plate_radial"]
        assert cfg.rules == ["energy90", "energy99", "ht"]

    def test_unknown_key_is_hard_error(self, tmp_path):
        p = tmp_path / "cfg.yaml"
        p.write_text("lane_widht: 3.5\n")
        with pytest.raises(ConfigError, match="unknown config keys"):
            load_config(p)

    def test_zero_yaw_rejected(self):
        with pytest.raises(ConfigError, match="psi0_max"):
            config_from_mapping({"psi0_max_deg": 0})

    def test_multiple_violations_all_listed(self):
        with pytest.raises(ConfigError) as e:
            config_from_mapping({"w_L": -1, "T": 0, "N_T": 0})
        msg = str(e.value)
        assert "w_L" in msg and "T" in msg and "N_T" in msg

    def test_non_mapping_rejected(self, tmp_path):
        p = tmp_path / "cfg.yaml"
        p.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            load_config(p)

    def test_parse_error(self, tmp_path):
        p = tmp_path / "cfg.yaml"
        p.write_text("w_L: [unclosed\n")
        with pytest.raises(ConfigError, match="cannot parse"):
            load_config(p)


class TestRuleParsing:
    def test_known_rules(self):
        assert parse_rule("ht") == HardThresholdRule()
        assert parse_rule("full") == FullRule()
        assert parse_rule("energy90", energy_slack=1.5) == EnergyRule(90.0, 1.5)
        assert parse_rule("energy99.5") == EnergyRule(99.5, 0.0)
        assert parse_rule("fixed2") == FixedRule(2)

    def test_unknown_rule(self):
        with pytest.raises(ConfigError):
            parse_rule("magic")
        with pytest.raises(ConfigError):
            parse_rule("energyx")


def write_small_config(path, seed=3, out_dir="out"):
    path.write_text(
        "\n".join(
            [
                "N_T: 12",
                f"master_seed: {seed}",
                "repeats: 5",
                "warmups: 1",
                f"output_dir: {out_dir}",
            ]
        )
        + "\n"
    )


class TestCli:
    def test_run_all_produces_outputs(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        out = tmp_path / "out"
        write_small_config(cfg_path, out_dir=str(out))
        assert main(["run-all", "--config", str(cfg_path)]) == 0
        for name in ["trajectories.csv", "trajectories_meta.json", "spectrum.csv",
                     "table1.csv", "manifest.json"]:
            assert (out / name).exists(), name
        models = sorted(p.name for p in (out / "models").glob("*.json"))
        # 2 bases x (3 rules + full reference)
        assert len(models) == 8

    def test_staged_execution(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        out = tmp_path / "out"
        write_small_config(cfg_path, out_dir=str(out))
        assert main(["generate", "--config", str(cfg_path)]) == 0
        assert main(["identify", "--config", str(cfg_path)]) == 0
        assert main(["evaluate", "--config", str(cfg_path)]) == 0
        assert (out / "table1.csv").exists()

    def test_evaluate_without_identify_is_io_error(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        write_small_config(cfg_path, out_dir=str(tmp_path / "empty"))
        assert main(["evaluate", "--config", str(cfg_path)]) == 3

    def test_config_error_exit_code(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text("bogus_key: 1\n")
        assert main(["run-all", "--config", str(cfg_path)]) == 2

    def test_seed_flag_overrides(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        write_small_config(cfg_path, seed=3, out_dir=str(out_a))
        assert main(["generate", "--config", str(cfg_path)]) == 0
        assert main(
            ["generate", "--config", str(cfg_path), "--seed", "4", "--out", str(out_b)]
        ) == 0
        assert (out_a / "trajectories.csv").read_bytes() != (
            out_b / "trajectories.csv"
        ).read_bytes()

    def test_generate_deterministic_bytes(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        write_small_config(cfg_path, out_dir=str(out_a))
        main(["generate", "--config", str(cfg_path)])
        main(["generate", "--config", str(cfg_path), "--out", str(out_b)])
        assert (out_a / "trajectories.csv").read_bytes() == (
            out_b / "trajectories.csv"
        ).read_bytes()

    def test_fingerprint_tracks_lane_parameters(self, tmp_path):
        from lanekoop.pipeline import dataset_fingerprint

        base = default_config()
        changed = config_from_mapping({"w_L": 3.6})
        assert dataset_fingerprint(base) != dataset_fingerprint(changed)
        assert dataset_fingerprint(base) == dataset_fingerprint(default_config())

    def test_manifest_records_centers_and_files(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        out = tmp_path / "out"
        write_small_config(cfg_path, out_dir=str(out))
        main(["run-all", "--config", str(cfg_path)])
        manifest = json.loads((out / "manifest.json").read_text())
        c = manifest["resolved_centers"]
        assert -1.75 <= c["c_s"] <= 1.75 and -1.75 <= c["c_y"] <= 1.75
        # centers in the manifest equal those used by the saved radial models
        model = json.loads((out / "models" / "thin_plate_radial_full.json").read_text())
        assert model["basis"]["c_s"] == c["c_s"]
        assert model["basis"]["c_y"] == c["c_y"]
        for name in manifest["files"]:
            assert (out / name).exists(), name

    def test_table_has_expected_columns_and_rows(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        out = tmp_path / "out"
        write_small_config(cfg_path, out_dir=str(out))
        main(["run-all", "--config", str(cfg_path)])
        with open(out / "table1.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 6  # 2 bases x 3 rules
        assert set(rows[0]) == {
            "basis", "rule", "rank", "re_percent", "t_rel_min_percent",
            "t_rel_median_percent", "flops_full", "flops_trunc",
        }

    def test_spectrum_file_shape(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        out = tmp_path / "out"
        write_small_config(cfg_path, out_dir=str(out))
        main(["run-all", "--config", str(cfg_path)])
        with open(out / "spectrum.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert {r["basis"] for r in rows} == {"monomial", "thin_plate_radial"}
        mono = [r for r in rows if r["basis"] == "monomial"]
        assert [int(r["r"]) for r in mono] == [1, 2, 3, 4]
        energies = [float(r["energy_percent"]) for r in mono]
        assert energies == sorted(energies)
        assert energies[-1] == pytest.approx(100.0, abs=1e-9)
