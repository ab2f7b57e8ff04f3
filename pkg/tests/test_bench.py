"""Dataset construction, labels, metrics, and smoke-scale task runs."""

import math

import numpy as np
import pytest

from qrc_sensor import bench
from qrc_sensor.bench import (BenchSettings, Dataset, Readout, SweepAxis, Task,
                              TomographyGrid, classification_label,
                              confusion_matrix, generate_dataset)
from qrc_sensor.errors import InvalidArgumentError
from qrc_sensor.states import StateKind, StateSpec


def smoke_settings(**overrides):
    base = dict(n_nodes=2, kerr=0.05, n_trajectories=150,
                n_samples={"classification": 20, "regression": 13, "tomography": 15},
                hyper=bench.ReadoutHyper(max_epochs=150, patience=50,
                                         hidden_classification=(24,),
                                         hidden_regression=(16,),
                                         hidden_tomography=(16, 8),
                                         lambda_grid=(1e-2,)),
                grid=TomographyGrid(size=8, extent=5.0, cutoff=30))
    base.update(overrides)
    return BenchSettings(**base)


class TestClassificationLabel:
    def test_region_centers_are_c1(self):
        cat = StateSpec(StateKind.CAT, amplitude_mag=2.35, amplitude_phase=1.15)
        sq = StateSpec(StateKind.SQUEEZED_VACUUM, squeeze_mag=0.05, squeeze_phase=0.7)
        assert classification_label(cat) == 0
        assert classification_label(sq) == 0

    def test_cat_outside_region_is_c3(self):
        spec = StateSpec(StateKind.CAT, amplitude_mag=1.12, amplitude_phase=0.01)
        # (1.12-2.35)^2 + (0.01-1.15)^2 = 2.813 > 1.44
        assert classification_label(spec) == 2

    def test_squeezed_outside_region_is_c2(self):
        spec = StateSpec(StateKind.SQUEEZED_VACUUM, squeeze_mag=1.1, squeeze_phase=0.0)
        assert classification_label(spec) == 1

    def test_boundary_excluded_from_c1(self):
        spec = StateSpec(StateKind.SQUEEZED_VACUUM, squeeze_mag=0.05 + 1.0,
                         squeeze_phase=0.7)
        assert classification_label(spec) == 1

    def test_coherent_rejected(self):
        with pytest.raises(InvalidArgumentError):
            classification_label(StateSpec(StateKind.COHERENT, amplitude_mag=1.0))


class TestGenerateDataset:
    def test_classification_split_and_balance(self):
        ds = generate_dataset(Task.CLASSIFICATION, 250, seed=4)
        assert len(ds.train_indices) == 125 and len(ds.test_indices) == 125
        kinds = [s.kind for s in ds.specs]
        assert kinds.count(StateKind.SQUEEZED_VACUUM) == 125
        assert kinds.count(StateKind.CAT) == 125
        for c in (0, 1, 2):
            assert np.sum(ds.labels == c) >= 1

    def test_regression_split_ratio(self):
        ds = generate_dataset(Task.REGRESSION, 130, seed=5)
        assert len(ds.train_indices) == 30 and len(ds.test_indices) == 100
        assert all(s.kind is StateKind.SQUEEZED_VACUUM for s in ds.specs)
        assert np.all(ds.labels >= 0) and np.all(ds.labels <= math.pi / 2)

    def test_tomography_split_and_targets(self):
        grid = TomographyGrid(size=8, extent=5.0, cutoff=30)
        ds = generate_dataset(Task.TOMOGRAPHY, 15, seed=6, grid=grid)
        assert len(ds.train_indices) == 14 and len(ds.test_indices) == 1
        assert ds.labels.shape == (15, 64)
        kinds = [s.kind for s in ds.specs]
        assert len(set(kinds)) == 3

    def test_parameter_ranges(self):
        ds = generate_dataset(Task.CLASSIFICATION, 100, seed=7)
        for s in ds.specs:
            if s.kind is StateKind.CAT:
                assert 1.12 <= s.amplitude_mag <= 1.38
                assert 0.0 <= s.amplitude_phase <= math.pi / 2
            else:
                assert 0.9 <= s.squeeze_mag <= 1.1

    def test_deterministic(self):
        a = generate_dataset(Task.CLASSIFICATION, 40, seed=8)
        b = generate_dataset(Task.CLASSIFICATION, 40, seed=8)
        assert a.specs == b.specs
        assert np.array_equal(a.train_indices, b.train_indices)

    def test_indivisible_count_rejected(self):
        with pytest.raises(InvalidArgumentError):
            generate_dataset(Task.CLASSIFICATION, 41, seed=0)


class TestConfusionMatrix:
    def test_diagonal(self):
        labels = np.array([0, 1, 2, 1])
        assert np.array_equal(confusion_matrix(labels, labels, 3),
                              np.diag([1, 2, 1]))

    def test_single_column(self):
        preds = np.zeros(4, dtype=int)
        labels = np.array([0, 1, 2, 2])
        out = confusion_matrix(preds, labels, 3)
        assert np.array_equal(out[:, 0], [1, 1, 2])
        assert out[:, 1:].sum() == 0

    def test_hand_case(self):
        pairs = [(0, 0), (0, 1), (1, 1), (1, 1), (2, 2), (2, 0)]
        labels = np.array([p[0] for p in pairs])
        preds = np.array([p[1] for p in pairs])
        expected = np.array([[1, 1, 0], [0, 2, 0], [1, 0, 1]])
        assert np.array_equal(confusion_matrix(preds, labels, 3), expected)

    def test_out_of_range_rejected(self):
        with pytest.raises(InvalidArgumentError):
            confusion_matrix(np.array([3]), np.array([0]), 3)


class TestRunTask:
    def test_classification_smoke(self):
        settings = smoke_settings()
        seeds = bench.repeat_seeds(777, 0)
        dataset = generate_dataset(Task.CLASSIFICATION, 20, seeds["dataset"])
        config = bench.build_bench_reservoir(settings, seeds["reservoir"])
        outcome = bench.run_task(Task.CLASSIFICATION, config, dataset,
                                 Readout.LINEAR, seeds["readout"],
                                 hyper=settings.hyper, threads=2)
        assert 0.0 <= outcome.metric <= 1.0
        assert outcome.confusion.sum() == len(dataset.test_indices)
        acc = np.trace(outcome.confusion) / outcome.confusion.sum()
        assert acc == pytest.approx(outcome.metric, abs=1e-12)

    def test_repeated_evaluation_is_stable(self):
        settings = smoke_settings()
        seeds = bench.repeat_seeds(778, 0)
        dataset = generate_dataset(Task.CLASSIFICATION, 20, seeds["dataset"])
        config = bench.build_bench_reservoir(settings, seeds["reservoir"])
        fs = bench.simulate_features(config, dataset, settings.feature_window,
                                     settings.n_bins, threads=2)
        a = bench.evaluate_readout(Task.CLASSIFICATION, fs, dataset,
                                   Readout.MLP, settings.hyper, seeds["readout"])
        b = bench.evaluate_readout(Task.CLASSIFICATION, fs, dataset,
                                   Readout.MLP, settings.hyper, seeds["readout"])
        assert a.metric == b.metric
        assert np.array_equal(a.predictions, b.predictions)

    def test_regression_outcome(self):
        settings = smoke_settings()
        seeds = bench.repeat_seeds(779, 0)
        dataset = generate_dataset(Task.REGRESSION, 13, seeds["dataset"])
        config = bench.build_bench_reservoir(settings, seeds["reservoir"])
        fs = bench.simulate_features(config, dataset, settings.feature_window,
                                     settings.n_bins, threads=2)
        out = bench.evaluate_readout(Task.REGRESSION, fs, dataset, Readout.LINEAR,
                                     settings.hyper, seeds["readout"])
        assert out.metric >= 0.0
        assert out.predictions.shape == (len(dataset.test_indices), 1)

    def test_tomography_extras(self):
        settings = smoke_settings()
        seeds = bench.repeat_seeds(780, 0)
        dataset = generate_dataset(Task.TOMOGRAPHY, 15, seeds["dataset"],
                                   grid=settings.grid)
        config = bench.build_bench_reservoir(settings, seeds["reservoir"])
        fs = bench.simulate_features(config, dataset, settings.feature_window,
                                     settings.n_bins, threads=2)
        out = bench.evaluate_readout(Task.TOMOGRAPHY, fs, dataset, Readout.LINEAR,
                                     settings.hyper, seeds["readout"])
        assert "pred_min" in out.extras and "test_kinds" in out.extras
        assert out.extras["pred_min"].shape == (1,)


class TestBenchmarkAndSweep:
    def test_benchmark_task_shapes(self):
        settings = smoke_settings()
        results = bench.benchmark_task(Task.CLASSIFICATION, settings, 2, 555,
                                       readouts=(Readout.MLP, Readout.LINEAR),
                                       threads=2)
        assert set(results) == {Readout.MLP, Readout.LINEAR}
        for res in results.values():
            assert len(res.repeats) == 2
            assert 0.0 <= res.mean <= 1.0

    def test_sweep_emits_all_series(self):
        settings = smoke_settings()
        cells = bench.sweep(SweepAxis.KERR, [0.0, 0.05], 1, settings,
                            Task.CLASSIFICATION, 999, threads=2)
        assert len(cells) == 6
        readouts = {(c.value, c.readout) for c in cells}
        assert (0.0, Readout.MLP) in readouts
        assert (0.05, Readout.MLP_U0) in readouts
        for c in cells:
            assert not c.failed
            assert c.std == 0.0  # single repeat

    def test_permuted_labels_preserve_multiset(self):
        labels = np.array([0, 0, 1, 2, 2, 2])
        shuffled = bench.permuted_labels(labels, seed=3)
        assert sorted(shuffled.tolist()) == sorted(labels.tolist())
