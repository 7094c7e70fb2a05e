"""Sweep orchestration, output serialization and CLI tests."""

import csv
import io
import json
import math

import numpy as np
import pytest

from rfqkd import cli
from rfqkd.channel import RotatorSetting, sweep_settings
from rfqkd.detection import NoiseConfig
from rfqkd.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    SweepRow,
    emit,
    run_sweep,
    selftest,
    suite_delta_norm,
)

FAST_CONFIG = ExperimentConfig(
    noise=NoiseConfig.four_meter(),
    schemes=("none", "flip_half"),
    duration_s=8.0,
    seed=2718,
)


def fake_rows(n=10):
    rng = np.random.default_rng(0)
    return [
        SweepRow(
            setting_index=i,
            scheme="none",
            conclusive_rate_hz=float(rng.uniform(0.1, 5.0)),
            normalized_coincidence=float(rng.uniform(0.0, 1.0)),
            qber=float(rng.uniform(0.0, 0.5)),
            qber_stderr=float(rng.uniform(0.0, 0.05)),
            p_S=float(rng.uniform(0.5, 1.0)),
            key_rate_fraction=float(rng.uniform(-1.0, 1.0)),
        )
        for i in range(n)
    ]


class TestExperimentConfig:
    def test_defaults_valid(self):
        ExperimentConfig().validate()

    def test_empty_settings_rejected_before_simulation(self):
        cfg = ExperimentConfig(settings=())
        with pytest.raises(ValueError):
            run_sweep(cfg)

    def test_bad_scheme_rejected(self):
        cfg = ExperimentConfig(schemes=("sometimes",))
        with pytest.raises(ValueError):
            cfg.validate()

    def test_bad_duration_rejected(self):
        cfg = ExperimentConfig(duration_s=0.0)
        with pytest.raises(ValueError):
            cfg.validate()

    def test_dict_round_trip(self):
        cfg = ExperimentConfig(
            noise=NoiseConfig.one_km(),
            schemes=("haar",),
            settings=(RotatorSetting(0.0, 10.0, 5.0),),
            duration_s=3.5,
            seed=99,
        )
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_dict_accepts_single_scheme_string(self):
        cfg = ExperimentConfig.from_dict({"schemes": "flip_half"})
        assert cfg.schemes == ("flip_half",)


class TestRunSweep:
    def test_row_count_and_indices(self):
        rows = run_sweep(FAST_CONFIG)
        assert len(rows) == len(FAST_CONFIG.schemes) * len(FAST_CONFIG.settings)
        assert [r.setting_index for r in rows[:5]] == list(range(5))
        assert set(r.scheme for r in rows) == {"none", "flip_half"}

    def test_normalization_peaks_at_one(self):
        rows = run_sweep(FAST_CONFIG)
        top = max(r.normalized_coincidence for r in rows)
        assert abs(top - 1.0) < 1e-12
        assert all(0.0 <= r.normalized_coincidence <= 1.0 for r in rows)

    def test_deterministic_given_seed(self):
        assert run_sweep(FAST_CONFIG) == run_sweep(FAST_CONFIG)

    def test_different_seed_changes_counts(self):
        import dataclasses

        other = dataclasses.replace(FAST_CONFIG, seed=1)
        assert run_sweep(other) != run_sweep(FAST_CONFIG)

    def test_uncompensated_sweep_rises_toward_half(self):
        # without the random rotation the error rate sits near the intrinsic
        # level at the identity setting and climbs toward 50% at the bit-flip,
        # where only the accidental floor is left
        cfg = ExperimentConfig(
            noise=NoiseConfig.four_meter(), schemes=("none",), duration_s=1500.0, seed=5
        )
        rows = run_sweep(cfg)
        assert abs(rows[0].qber - 0.065) < 0.01
        assert rows[-1].qber > 0.3
        assert rows[-1].conclusive_rate_hz < 0.01 * rows[0].conclusive_rate_hz


class TestEmit:
    def test_csv_line_count(self):
        text = emit(fake_rows(10), "csv")
        assert len(text.strip().split("\n")) == 11

    def test_csv_round_trip_six_digits(self):
        rows = fake_rows(10)
        text = emit(rows, "csv")
        parsed = list(csv.DictReader(io.StringIO(text)))
        assert list(parsed[0].keys()) == list(CSV_COLUMNS)
        for row, rec in zip(rows, parsed):
            for col in CSV_COLUMNS:
                want = getattr(row, col)
                got = rec[col]
                if isinstance(want, float):
                    assert math.isclose(float(got), want, rel_tol=1e-5)
                else:
                    assert str(want) == got

    def test_json_array(self):
        rows = fake_rows(10)
        data = json.loads(emit(rows, "json"))
        assert isinstance(data, list) and len(data) == 10
        assert set(data[0].keys()) == set(CSV_COLUMNS)

    def test_config_echo_csv(self):
        text = emit(fake_rows(2), "csv", config=FAST_CONFIG)
        first = text.split("\n", 1)[0]
        assert first.startswith("# config: ")
        echoed = json.loads(first[len("# config: "):])
        assert echoed["seed"] == FAST_CONFIG.seed
        assert echoed["noise"]["pair_rate_hz"] == FAST_CONFIG.noise.pair_rate_hz

    def test_config_echo_json(self):
        data = json.loads(emit(fake_rows(2), "json", config=FAST_CONFIG))
        assert data["config"]["seed"] == FAST_CONFIG.seed
        assert len(data["rows"]) == 2

    def test_writes_file(self, tmp_path):
        path = tmp_path / "rows.csv"
        emit(fake_rows(3), "csv", path=str(path))
        assert path.read_text().count("\n") == 4

    def test_empty_rows_rejected(self):
        with pytest.raises(ValueError):
            emit([], "csv")

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            emit(fake_rows(1), "xml")


class TestSelftest:
    def test_all_suites_pass_within_budget(self):
        import time

        lines = []
        start = time.perf_counter()
        assert selftest(out=lines.append)
        elapsed = time.perf_counter() - start
        assert len(lines) == 6
        assert all(line.startswith("PASS") for line in lines)
        assert elapsed < 60.0

    def test_negative_control_broken_delta(self):
        # a deliberately wrong delta extraction must trip the norm suite
        class BrokenDelta:
            def __init__(self, u):
                self.d1 = complex(abs(u.a) ** 2)  # missing the |b|^2 term
                self.d2 = 0.0j
                self.d3 = 0.0j

        rng = np.random.default_rng(5)
        ok, detail = suite_delta_norm(rng, n=50, delta_fn=BrokenDelta)
        assert not ok
        assert "norm" in detail


class TestCli:
    def test_sweep_writes_deterministic_csv(self, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        args = ["sweep", "--preset", "4m", "--seed", "7", "--duration-scale", "0.005"]
        assert cli.main(args + ["--out", str(out1)]) == 0
        assert cli.main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_sweep_json_format(self, tmp_path):
        out = tmp_path / "rows.json"
        code = cli.main(
            ["sweep", "--preset", "4m", "--seed", "3", "--duration-scale", "0.005",
             "--format", "json", "--out", str(out)]
        )
        assert code == 0
        data = json.loads(out.read_text())
        assert "config" in data and len(data["rows"]) == 10

    def test_single_then_keyrate(self, tmp_path, capsys):
        tally_path = tmp_path / "tally.json"
        code = cli.main(
            ["single", "--preset", "4m", "--seed", "5", "--duration-scale", "0.01",
             "--scheme", "flip_half", "--setting", "0", "--out", str(tally_path)]
        )
        assert code == 0
        payload = json.loads(tally_path.read_text())
        assert payload["tally"]["conclusive"] > 0
        assert payload["config"]["seed"] == 5
        code = cli.main(["keyrate", str(tally_path)])
        assert code == 0
        assert "key fraction" in capsys.readouterr().out

    def test_config_file_and_overrides(self, tmp_path):
        config_path = tmp_path / "config.json"
        config_path.write_text(
            json.dumps(
                {
                    "seed": 11,
                    "duration_s": 400.0,
                    "schemes": ["none"],
                    "noise": {"pair_rate_hz": 6000.0, "singles_rate_hz": 1500.0},
                }
            )
        )
        out = tmp_path / "rows.csv"
        code = cli.main(
            ["sweep", "--config", str(config_path), "--duration-scale", "0.01",
             "--out", str(out)]
        )
        assert code == 0
        header = out.read_text().split("\n", 1)[0]
        echoed = json.loads(header[len("# config: "):])
        assert echoed["seed"] == 11
        assert echoed["duration_s"] == 4.0
        assert echoed["noise"]["pair_rate_hz"] == 6000.0

    def test_selftest_exit_code(self):
        assert cli.main(["selftest"]) == 0
