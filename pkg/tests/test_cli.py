import numpy as np
import pytest

from netbeam import BlerCurve, ConfigError, RngSeed, Scheme, gap_at_bler, parse_config
from netbeam.cli import ExperimentConfig, main
from netbeam.channel import Topology, TopologyKind
from netbeam.report import CSV_COLUMNS

UNIT2 = Topology(kind=TopologyKind.UNIT_VARIANCE, relay_count=2)


def curve_from(power_db, bler, scheme=Scheme.BEAMFORM_NO_DL):
    n = len(power_db)
    return BlerCurve(scheme=scheme, topology=UNIT2, power_db=tuple(power_db),
                     bler=tuple(bler), trials=tuple([10 ** 5] * n),
                     errors=tuple(max(0, int(b * 10 ** 5)) for b in bler),
                     ci95=tuple((b * 0.9, b * 1.1) for b in bler),
                     seed=RngSeed(seed=1),
                     low_confidence=tuple(b == 0 for b in bler))


MINIMAL_CONFIG = """
[experiment]
schemes = beamform_no_dl, best_relay
topology = unit_variance
relay_count = 2
start_db = 6
stop_db = 10
step_db = 2
trials_per_point = 1000
seed = 314
output = {out}
"""


class TestGapAtBler:
    def test_identical_curves(self):
        a = curve_from([10, 15, 20], [1e-2, 1e-3, 1e-4])
        b = curve_from([10, 15, 20], [1e-2, 1e-3, 1e-4], Scheme.BEST_RELAY)
        assert gap_at_bler(a, b, 1e-3) == pytest.approx(0.0)

    def test_exact_shift(self):
        a = curve_from([10, 15, 20], [1e-2, 1e-3, 1e-4])
        b = curve_from([13, 18, 23], [1e-2, 1e-3, 1e-4], Scheme.BEST_RELAY)
        assert gap_at_bler(a, b, 3e-3) == pytest.approx(3.0)

    def test_antisymmetry(self):
        a = curve_from([10, 15, 20], [2e-2, 1.3e-3, 0.9e-4])
        b = curve_from([10, 15, 20], [3e-2, 2.5e-3, 2.2e-4], Scheme.BEST_RELAY)
        assert gap_at_bler(a, b, 1e-3) == pytest.approx(-gap_at_bler(b, a, 1e-3))

    def test_target_outside_range(self):
        a = curve_from([10, 15], [1e-2, 1e-3])
        b = curve_from([10, 15], [1e-2, 1e-3], Scheme.BEST_RELAY)
        assert gap_at_bler(a, b, 1e-5) is None

    def test_zero_bler_points_skipped(self):
        a = curve_from([10, 15, 20], [1e-2, 1e-3, 0.0])
        b = curve_from([10, 15, 20], [1e-2, 1e-3, 0.0], Scheme.BEST_RELAY)
        assert gap_at_bler(a, b, 3e-3) == pytest.approx(0.0)
        assert gap_at_bler(a, b, 1e-4) is None

    def test_invalid_target(self):
        a = curve_from([10], [1e-2])
        with pytest.raises(ValueError):
            gap_at_bler(a, a, 0.0)


class TestConfigParsing:
    def test_minimal_roundtrip(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(MINIMAL_CONFIG.format(out=tmp_path / "out"))
        config = parse_config(cfg)
        assert config.schemes == (Scheme.BEAMFORM_NO_DL, Scheme.BEST_RELAY)
        assert config.topology.kind is TopologyKind.UNIT_VARIANCE
        assert config.power_sweep_db() == [6.0, 8.0, 10.0]
        budget = config.budget_for(10.0)
        assert budget.p0 == pytest.approx(10.0)
        np.testing.assert_allclose(budget.p, 10.0)

    def test_power_overrides(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(MINIMAL_CONFIG.format(out=tmp_path) + """
[power_overrides]
p2 = 0.5
""")
        config = parse_config(cfg)
        budget = config.budget_for(10.0)
        assert budget.p[0] == pytest.approx(10.0)
        assert budget.p[1] == pytest.approx(5.0)

    def test_override_bad_index_rejected(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(MINIMAL_CONFIG.format(out=tmp_path) + """
[power_overrides]
p7 = 0.5
""")
        with pytest.raises(ConfigError, match="exceeds relay_count"):
            parse_config(cfg)

    def test_syntax_error_reports_line_and_column(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("[experiment]\nthis line has no assignment\n")
        with pytest.raises(ConfigError, match=r"line 2, column 1"):
            parse_config(cfg)

    def test_bad_value_reports_location(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        bad = MINIMAL_CONFIG.format(out=tmp_path).replace("seed = 314",
                                                          "seed = banana")
        cfg.write_text(bad)
        with pytest.raises(ConfigError, match="bad value for 'seed'"):
            parse_config(cfg)

    def test_missing_key_rejected(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("[experiment]\nschemes = best_relay\n")
        with pytest.raises(ConfigError, match="missing required key"):
            parse_config(cfg)

    def test_bad_step_rejected(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(MINIMAL_CONFIG.format(out=tmp_path).replace(
            "step_db = 2", "step_db = 0"))
        with pytest.raises(ConfigError, match="step_db"):
            parse_config(cfg)

    def test_comments_and_blank_lines(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("# leading comment\n" +
                       MINIMAL_CONFIG.format(out=tmp_path) +
                       "\n; trailing comment\n")
        assert parse_config(cfg).seed == 314


class TestCliRun:
    def run_main(self, tmp_path, extra="", args=()):
        out = tmp_path / "out"
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(MINIMAL_CONFIG.format(out=out) + extra)
        code = main(["run", str(cfg), *args])
        return code, out

    def test_artifacts_written(self, tmp_path):
        code, out = self.run_main(tmp_path)
        assert code == 0
        beam = out / "beamform_no_dl__unit_variance.csv"
        best = out / "best_relay__unit_variance.csv"
        assert beam.exists() and best.exists()
        assert (out / "summary.txt").exists()
        assert (out / "bler_curves.png").exists()
        lines = beam.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 4  # header + 3 sweep points
        row = lines[1].split(",")
        assert row[0] == "beamform_no_dl"
        assert row[2] == "2"
        assert float(row[3]) == 6.0

    def test_rerun_byte_identical(self, tmp_path):
        _, out1 = self.run_main(tmp_path)
        first = (out1 / "beamform_no_dl__unit_variance.csv").read_bytes()
        summary1 = (out1 / "summary.txt").read_bytes()
        cfg = tmp_path / "exp.cfg"
        code = main(["run", str(cfg)])
        assert code == 0
        assert (out1 / "beamform_no_dl__unit_variance.csv").read_bytes() == first
        assert (out1 / "summary.txt").read_bytes() == summary1

    def test_flag_overrides(self, tmp_path):
        out2 = tmp_path / "elsewhere"
        code, _ = self.run_main(tmp_path, args=["--trials", "500",
                                                "--seed", "999",
                                                "--out", str(out2)])
        assert code == 0
        row = (out2 / "best_relay__unit_variance.csv").read_text().splitlines()[1]
        fields = row.split(",")
        assert fields[4] == "500"
        assert fields[-1] == "999"

    def test_config_error_exit_code(self, tmp_path):
        cfg = tmp_path / "broken.cfg"
        cfg.write_text("[experiment]\nnot a config\n")
        assert main(["run", str(cfg)]) == 2

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.cfg")]) == 2

    def test_csv_line_endings_lf_only(self, tmp_path):
        _, out = self.run_main(tmp_path)
        raw = (out / "beamform_no_dl__unit_variance.csv").read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")


class TestWorkersDeterminism:
    def test_worker_count_does_not_change_csv(self, tmp_path):
        outs = []
        for workers, sub in ((1, "w1"), (4, "w4")):
            out = tmp_path / sub
            cfg = tmp_path / f"exp_{sub}.cfg"
            cfg.write_text(MINIMAL_CONFIG.format(out=out)
                           + f"workers = {workers}\n"
                           + "trials_per_point = 20000\n")
            # later duplicate keys win: bump trials over several chunks
            assert main(["run", str(cfg)]) == 0
            outs.append((out / "beamform_no_dl__unit_variance.csv").read_bytes())
        assert outs[0] == outs[1]
