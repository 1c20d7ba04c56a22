import subprocess
import sys

import pytest
import yaml

from rfharvest.cli import main
from rfharvest.config import (
    dump_config,
    load_config,
    parse_config,
)
from rfharvest.exceptions import ConfigError

EXPLICIT = """
circuit: {resistance: 750.0, capacitance: 0.68, v_max: 2.5}
seed: 7
runs: 4
scenario:
  initial_energy: 0.5
  packets:
    - [10.0, 5.0]
    - [20.0, 5.0]
  deadline: 30.0
"""

GENERATED = """
seed: 9
runs: 4
generator: {packet_count: 3}
"""


@pytest.fixture
def explicit_config(tmp_path):
    path = tmp_path / "explicit.yaml"
    path.write_text(EXPLICIT)
    return path


@pytest.fixture
def generated_config(tmp_path):
    path = tmp_path / "generated.yaml"
    path.write_text(GENERATED)
    return path


class TestConfigParsing:
    def test_defaults(self):
        config = parse_config({})
        assert config.circuit.resistance == 4000.0
        assert config.circuit.capacitance == 0.05
        assert config.link.frequency == 2.4e9
        assert config.link.noise_density == -174.0
        assert config.rate_model == "normalized"
        assert config.runs == 30
        assert config.scenario is None

    def test_explicit_scenario(self, explicit_config):
        config = load_config(explicit_config)
        assert config.scenario.n_packets == 2
        assert config.scenario.deadline == 30.0
        assert config.circuit.v_max == 2.5

    def test_round_trip_is_identity(self, explicit_config):
        config = load_config(explicit_config)
        once = dump_config(config)
        again = dump_config(parse_config(yaml.safe_load(once)))
        assert once == again

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"nonsense": 1})
        with pytest.raises(ConfigError):
            parse_config({"circuit": {"resistance": 1.0, "tau": 5.0}})

    def test_bad_values_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"rate_model": "psychic"})
        with pytest.raises(ConfigError):
            parse_config({"runs": 0})
        with pytest.raises(ConfigError):
            parse_config({"scenario": {"initial_energy": 0.1,
                                       "packets": [[1.0]], "deadline": 2.0}})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.yaml")

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("foo: [unclosed")
        with pytest.raises(ConfigError):
            load_config(path)


class TestOptimizeCommand:
    def test_writes_schedule_and_summary(self, explicit_config, tmp_path):
        out = tmp_path / "out"
        rc = main(["optimize", "--config", str(explicit_config),
                   "--out", str(out)])
        assert rc == 0
        lines = (out / "schedule.csv").read_text().splitlines()
        manifest = [l for l in lines if l.startswith("#")]
        assert any("config_sha256" in l for l in manifest)
        assert not any(("time" in l or "date" in l) for l in manifest)
        header = lines[len(manifest)]
        assert header.split(",")[:4] == ["epoch", "t_start", "t_end", "power"]
        assert lines[-1].startswith("summary,")

    def test_bit_identical_reruns(self, explicit_config, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        main(["optimize", "--config", str(explicit_config), "--out", str(first)])
        main(["optimize", "--config", str(explicit_config), "--out", str(second)])
        assert (first / "schedule.csv").read_bytes() \
            == (second / "schedule.csv").read_bytes()

    def test_csv_matches_library_solve_field_for_field(self, explicit_config,
                                                       tmp_path):
        from rfharvest import ChargeCircuit, EnergyScenario, solve
        out = tmp_path / "out"
        main(["optimize", "--config", str(explicit_config), "--out", str(out)])
        report = solve(
            EnergyScenario(initial_energy=0.5,
                           packets=((10.0, 5.0), (20.0, 5.0)), deadline=30.0),
            ChargeCircuit(resistance=750.0, capacitance=0.68, v_max=2.5))
        lines = [l for l in (out / "schedule.csv").read_text().splitlines()
                 if not l.startswith("#")]
        body = [line.split(",") for line in lines[1:]]
        for i, row in enumerate(body[:-1]):
            assert float(row[3]) == report.schedule.powers[i]
            assert float(row[4]) == report.trace.residuals[i]
            assert float(row[6]) == report.trace.consumed[i]
            if i < len(report.trace.harvested):
                assert float(row[5]) == report.trace.harvested[i]
        summary = body[-1]
        assert float(summary[-2]) == report.throughput
        assert float(summary[-1]) == report.terminal_residual_error

    def test_generated_config_needs_scenario(self, generated_config, tmp_path):
        rc = main(["optimize", "--config", str(generated_config),
                   "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_malformed_config_writes_nothing(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("nonsense_key: 1\n")
        out = tmp_path / "never"
        rc = main(["optimize", "--config", str(bad), "--out", str(out)])
        assert rc == 2
        assert not out.exists()

    def test_unsolvable_scenario_exits_3(self, tmp_path):
        # energies far below the harvest-optimal residual: no interior
        # stationary point exists, which is a solver failure, not a
        # config error
        path = tmp_path / "hard.yaml"
        path.write_text(
            "scenario:\n"
            "  initial_energy: 1.0e-4\n"
            "  packets: [[20.0, 30.0], [40.0, 30.0]]\n"
            "  deadline: 60.0\n")
        rc = main(["optimize", "--config", str(path),
                   "--out", str(tmp_path / "o")])
        assert rc == 3


class TestSimulateCommand:
    def test_zero_strategy_zero_throughput(self, generated_config, tmp_path):
        out = tmp_path / "out"
        rc = main(["simulate", "--config", str(generated_config),
                   "--strategy", "zero", "--out", str(out)])
        assert rc == 0
        lines = (out / "trace_zero.csv").read_text().splitlines()
        summary = lines[-1].split(",")
        assert float(summary[-2]) == 0.0

    def test_tight_string_trace_has_clamp_column(self, generated_config, tmp_path):
        out = tmp_path / "out"
        rc = main(["simulate", "--config", str(generated_config),
                   "--strategy", "tight_string", "--out", str(out)])
        assert rc == 0
        lines = (out / "trace_tight_string.csv").read_text().splitlines()
        header = [l for l in lines if l.startswith("epoch,")][0]
        assert "clamped" in header.split(",")

    def test_unknown_strategy(self, generated_config, tmp_path):
        rc = main(["simulate", "--config", str(generated_config),
                   "--strategy", "warp-drive", "--out", str(tmp_path)])
        assert rc == 2

    def test_tight_string_rejects_explicit_scenario(self, explicit_config, tmp_path):
        rc = main(["simulate", "--config", str(explicit_config),
                   "--strategy", "tight_string", "--out", str(tmp_path)])
        assert rc == 2


class TestSweepCommand:
    def test_fig8_columns(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("seed: 5\nruns: 2\n"
                        "generator: {packet_count: 6}\n"
                        "sweep: {impact_epochs: [1, 5], scenarios: 2}\n")
        out = tmp_path / "out"
        rc = main(["sweep", "--config", str(path), "--figure", "fig8",
                   "--out", str(out)])
        assert rc == 0
        lines = (out / "sweep_fig8.csv").read_text().splitlines()
        header = [l for l in lines if not l.startswith("#")][0].split(",")
        assert header[:5] == ["scenario_index", "d", "length_delta",
                              "packet_delta", "relative_power_change"]
        data = [l for l in lines if not l.startswith("#")][1:]
        assert len(data) == 4  # 2 scenarios x 2 depths

    def test_fig6_deterministic(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("seed: 5\nruns: 2\n"
                        "sweep: {epoch_lengths: [0.006, 0.01]}\n")
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["sweep", "--config", str(path), "--figure", "fig6",
                     "--out", str(a)]) == 0
        assert main(["sweep", "--config", str(path), "--figure", "fig6",
                     "--out", str(b)]) == 0
        assert (a / "sweep_fig6.csv").read_bytes() \
            == (b / "sweep_fig6.csv").read_bytes()


class TestOracleCheckCommand:
    def test_passes_on_small_instances(self, generated_config):
        assert main(["oracle-check", "--config", str(generated_config)]) == 0

    def test_twenty_seed_two_packet_batch(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("seed: 3\nruns: 20\ngenerator: {packet_count: 2}\n")
        assert main(["oracle-check", "--config", str(path)]) == 0

    def test_corrupted_tolerance_fails_with_gap(self, generated_config, capsys):
        rc = main(["oracle-check", "--config", str(generated_config),
                   "--solver-tolerance", "1e-3"])
        assert rc == 4
        assert "worst gap" in capsys.readouterr().out

    def test_too_many_packets(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text("generator: {packet_count: 4}\n")
        assert main(["oracle-check", "--config", str(path)]) == 2


class TestEntryPoint:
    def test_module_invocation(self, explicit_config, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "rfharvest.cli", "optimize",
             "--config", str(explicit_config), "--out", str(tmp_path / "o")],
            capture_output=True, text=True)
        assert result.returncode == 0
        assert "throughput" in result.stdout
