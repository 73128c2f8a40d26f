"""Tests for the factorial simulation harness."""
import math
import os
from dataclasses import asdict

import numpy as np
import pandas as pd
import pytest

from config.constants import RECORD_COLUMNS
from config.settings import PROJECT_ROOT
from src.models.errors import ConfigError, NotConverged
from src.models.simulation import SimConfig
from src.services import simulation
from src.services.simulation import (
    SimulationHarness, derive_seed, load_config, parse_config, run_replication,
)
from src.services.summary import SummaryBuilder


def _without_time(record):
    data = asdict(record)
    data.pop('elapsed_ms')
    return data


def _without_time_column(path):
    return pd.read_csv(path).drop(columns=['elapsed_ms'])


def _small_config(tmp_path, **kwargs):
    values = dict(sample_sizes=[60, 120], gammas=[0.5], ratios=[0.05],
                  data_types=["normal", "ordinal"], replications=2, n_lambdas=10,
                  truth_p=6, truth_density=0.4, truth_seed=3,
                  records_path=str(tmp_path / "records.csv"))
    values.update(kwargs)
    return SimConfig(**values)


class TestSeeds:
    """Per-replication seed derivation."""

    def test_stable_and_in_range(self):
        seed = derive_seed(2016, 50, 0, 1, "normal", 1)
        assert seed == derive_seed(2016, 50, 0, 1, "normal", 1)
        assert 0 <= seed < 2 ** 63

    def test_every_coordinate_matters(self):
        base = derive_seed(1, 50, 0, 0, "normal", 1)
        variants = [
            derive_seed(2, 50, 0, 0, "normal", 1),
            derive_seed(1, 100, 0, 0, "normal", 1),
            derive_seed(1, 50, 1, 0, "normal", 1),
            derive_seed(1, 50, 0, 1, "normal", 1),
            derive_seed(1, 50, 0, 0, "ordinal", 1),
            derive_seed(1, 50, 0, 0, "normal", 2),
        ]
        assert base not in variants
        assert len(set(variants)) == len(variants)


class TestReplication:
    """Single replications."""

    def test_deterministic(self, small_truth):
        a = run_replication(small_truth, 200, 0.5, 0.01, "normal", seed=42, n_lambdas=20)
        b = run_replication(small_truth, 200, 0.5, 0.01, "normal", seed=42, n_lambdas=20)
        assert _without_time(a) == _without_time(b)
        assert a.converged
        assert a.tp + a.fn == small_truth.network.edge_count == a.edges_true

    def test_ordinal_replication(self, small_truth):
        record = run_replication(small_truth, 300, 0.5, 0.01, "ordinal", seed=7, n_lambdas=20)
        assert 0.0 <= record.sensitivity <= 1.0
        assert 0.0 <= record.specificity <= 1.0
        assert record.tp + record.fp + record.tn + record.fn == 15

    def test_large_normal_sample_is_specific(self, benchmark_truth):
        record = run_replication(benchmark_truth, 2500, 0.5, 0.01, "normal", seed=3)
        assert record.specificity >= 0.9

    def test_small_ordinal_sample_with_high_gamma(self, benchmark_truth):
        record = run_replication(benchmark_truth, 50, 1.0, 0.01, "ordinal", seed=11)
        assert not math.isnan(record.sensitivity)
        if record.edges_est == 0:
            assert record.sensitivity == 0.0
            assert record.weight_correlation == 0.0

    def test_failure_is_recorded(self, small_truth, monkeypatch):
        def fail(*args, **kwargs):
            raise NotConverged(10, lambda_index=3)

        monkeypatch.setattr(simulation, "select_path", fail)
        record = run_replication(small_truth, 100, 0.5, 0.01, "normal", seed=1, n_lambdas=10)
        assert math.isnan(record.sensitivity)
        assert record.edges_est is None
        assert not record.converged


class TestConfig:
    """Grid bookkeeping and config files."""

    def test_full_design_record_count(self):
        assert SimConfig.benchmark().record_count() == 180_000

    def test_desk_design_record_count(self):
        config = SimConfig(sample_sizes=[50, 250, 1000], gammas=[0.0, 0.5], ratios=[0.01],
                           replications=50)
        assert config.record_count() == 600

    def test_conditions_in_order(self):
        config = SimConfig(sample_sizes=[50, 100], gammas=[0.0, 1.0], ratios=[0.01],
                           data_types=["normal"], replications=1)
        assert [(c.n, c.gamma) for c in config.conditions()] == [
            (50, 0.0), (50, 1.0), (100, 0.0), (100, 1.0)]

    @pytest.mark.parametrize("kwargs", [
        {"sample_sizes": []}, {"replications": 0}, {"n_lambdas": 1},
        {"ratios": [1.5]}, {"data_types": ["binary"]},
    ])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ConfigError):
            SimConfig(**kwargs)

    def test_default_config_file(self):
        config = load_config(PROJECT_ROOT / "config" / "simulation.ini")
        assert config.record_count() == 1800
        assert config.gammas == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_parse_and_override(self):
        text = "[grid]\nsample_sizes = 50, 100\nreplications = 3\n\n[run]\nworkers = 2\n"
        config = parse_config(text, workers=4, replications=None)
        assert config.sample_sizes == [50, 100]
        assert config.replications == 3
        assert config.workers == 4

    def test_bad_value_reports_line(self):
        text = "[grid]\nsample_sizes = 50\nreplications = ten\n"
        with pytest.raises(ConfigError, match="line 3") as excinfo:
            parse_config(text)
        assert excinfo.value.line == 3

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError, match="line 4"):
            parse_config("[grid]\nreplications = 2\n[run]\nthreads = 2\n")

    def test_missing_section_header(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("replications = 2\n")

    def test_seed_from_environment(self, monkeypatch):
        monkeypatch.setenv("GELASSO_SEED", "77")
        assert parse_config("[grid]\nreplications = 1\n").root_seed == 77
        assert parse_config("[run]\nroot_seed = 5\n").root_seed == 5

    def test_unparseable_environment_seed_ignored(self, monkeypatch):
        monkeypatch.setenv("GELASSO_SEED", "abc")
        assert parse_config("[grid]\nreplications = 1\n").root_seed == SimConfig().root_seed


class TestHarness:
    """Whole-grid runs."""

    def test_record_count_and_schema(self, tmp_path, storage):
        config = _small_config(tmp_path)
        records = list(SimulationHarness(config, storage).run_grid(progress=False))
        assert len(records) == config.record_count() == 8
        frame = pd.read_csv(config.records_path)
        assert list(frame.columns) == RECORD_COLUMNS
        assert len(frame) == 8
        assert [r.key for r in records] == [
            (n, 0.5, 0.05, t, rep) for n in (60, 120) for t in ("normal", "ordinal")
            for rep in (1, 2)]

    def test_single_cell(self, tmp_path, storage):
        config = _small_config(tmp_path, sample_sizes=[60], data_types=["normal"],
                               replications=1)
        SimulationHarness(config, storage).run(progress=False)
        assert len(pd.read_csv(config.records_path)) == 1

    def test_rerun_is_identical(self, tmp_path, storage):
        first = _small_config(tmp_path, records_path=str(tmp_path / "a.csv"))
        second = _small_config(tmp_path, records_path=str(tmp_path / "b.csv"))
        SimulationHarness(first, storage).run(progress=False)
        SimulationHarness(second, storage).run(progress=False)
        pd.testing.assert_frame_equal(_without_time_column(first.records_path),
                                      _without_time_column(second.records_path))

    def test_parallel_matches_serial(self, tmp_path, storage):
        serial = _small_config(tmp_path, records_path=str(tmp_path / "serial.csv"))
        parallel = _small_config(tmp_path, records_path=str(tmp_path / "parallel.csv"),
                                 workers=2)
        SimulationHarness(serial, storage).run(progress=False)
        SimulationHarness(parallel, storage).run(progress=False)
        pd.testing.assert_frame_equal(_without_time_column(serial.records_path),
                                      _without_time_column(parallel.records_path))

    def test_resume_completes_partial_file(self, tmp_path, storage):
        full = _small_config(tmp_path, records_path=str(tmp_path / "full.csv"))
        SimulationHarness(full, storage).run(progress=False)

        partial_path = tmp_path / "partial.csv"
        lines = (tmp_path / "full.csv").read_text().splitlines(keepends=True)
        partial_path.write_text("".join(lines[:4]) + lines[4][:12])
        partial = _small_config(tmp_path, records_path=str(partial_path))
        resumed = list(SimulationHarness(partial, storage).run_grid(resume=True, progress=False))

        assert len(resumed) == 5
        pd.testing.assert_frame_equal(_without_time_column(full.records_path),
                                      _without_time_column(partial_path))

    def test_fixed_thresholds_share_scheme(self, tmp_path, storage, small_truth):
        config = _small_config(tmp_path, fixed_thresholds=True)
        tasks = SimulationHarness(config, storage).tasks(small_truth)
        schemes = [task[-1] for task in tasks if task[4] == "ordinal"]
        assert all(s is schemes[0] for s in schemes)
        assert schemes[0] is not None

    def test_truth_from_file(self, tmp_path, storage, small_truth):
        truth_path = storage.write_network(small_truth, tmp_path / "truth.csv", fmt="edges")
        config = _small_config(tmp_path, truth_path=str(truth_path))
        loaded = SimulationHarness(config, storage).load_truth()
        assert loaded.weights == pytest.approx(small_truth.weights, abs=1e-9)

    @pytest.mark.slow
    def test_two_replications_of_full_grid(self, tmp_path, storage):
        config = SimConfig(replications=2, n_lambdas=20, records_path=str(tmp_path / "r.csv"),
                           workers=os.cpu_count() or 1)
        SimulationHarness(config, storage).run(progress=False)
        frame = pd.read_csv(config.records_path)
        assert len(frame) == 360
        assert list(frame.columns) == RECORD_COLUMNS


@pytest.mark.slow
class TestDeskReplication:
    """Qualitative findings on a 25-node truth with 50 replications."""

    @pytest.fixture(scope="class")
    def records(self, tmp_path_factory):
        out = tmp_path_factory.mktemp("desk")
        workers = os.cpu_count() or 1
        main = SimConfig(sample_sizes=[50, 250, 1000], gammas=[0.5], ratios=[0.01],
                         data_types=["normal"], replications=50, workers=workers,
                         records_path=str(out / "main.csv"))
        small = SimConfig(sample_sizes=[50], gammas=[0.0], ratios=[0.001],
                          data_types=["normal", "ordinal"], replications=50,
                          workers=workers, records_path=str(out / "small.csv"))
        paths = []
        for config in (main, small):
            SimulationHarness(config).run(progress=False)
            paths.append(config.records_path)
        return out, paths

    @staticmethod
    def _medians(path, metric, **where):
        frame = pd.read_csv(path)
        for column, value in where.items():
            frame = frame[frame[column] == value]
        return frame.groupby('n')[metric].median()

    def test_sensitivity_grows_with_n(self, records):
        medians = self._medians(records[1][0], 'sensitivity')
        assert medians[50] <= medians[250] <= medians[1000]

    def test_specificity_high_for_normal_data(self, records):
        medians = self._medians(records[1][0], 'specificity')
        assert np.all(medians >= 0.85)

    def test_weight_correlation_good_from_250(self, records):
        medians = self._medians(records[1][0], 'weight_correlation')
        assert medians[1000] >= medians[250] >= 0.5

    def test_ordinal_small_sample_less_specific(self, records):
        path = records[1][1]
        normal = self._medians(path, 'specificity', data_type="normal")[50]
        ordinal = self._medians(path, 'specificity', data_type="ordinal")[50]
        assert ordinal < normal

    def test_rerun_is_byte_identical_without_time(self, records):
        out, paths = records
        again = SimConfig(sample_sizes=[50, 250, 1000], gammas=[0.5], ratios=[0.01],
                          data_types=["normal"], replications=50,
                          workers=os.cpu_count() or 1, records_path=str(out / "again.csv"))
        SimulationHarness(again).run(progress=False)
        first = _without_time_column(paths[0]).to_csv(index=False, float_format='%.10g')
        second = _without_time_column(again.records_path).to_csv(index=False, float_format='%.10g')
        assert first == second

    def test_summary_of_desk_run(self, records):
        summaries, table = SummaryBuilder().summarize(pd.read_csv(records[1][0]))
        assert len(table) == 9
        assert all(s.q1 <= s.median <= s.q3 for s in summaries if s.count)
