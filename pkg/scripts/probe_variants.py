"""Probe feature/training variants for the classification gap on shared sims."""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from qrc_sensor import bench, features as feat, learn, reservoir, seeding
from qrc_sensor.bench import BenchSettings, Readout, Task

N_REPEATS = 3
SEED = 20250810


def corrected_series(settings, n_repeats):
    """Simulate once per repeat; keep the corrected per-sample series."""
    out = []
    for rep in range(n_repeats):
        seeds = bench.repeat_seeds(SEED, rep)
        dataset = bench.generate_dataset(Task.CLASSIFICATION,
                                         settings.samples_for(Task.CLASSIFICATION),
                                         seeds["dataset"])
        config = bench.build_bench_reservoir(settings, seeds["reservoir"])
        reference = reservoir.simulate_ensemble(config, None, threads=2)
        series = []
        for i, spec in enumerate(dataset.specs):
            perturbed = reservoir.simulate_ensemble(
                bench.sample_config(config, i), spec, threads=2)
            series.append(feat.subtract_reference(perturbed, reference))
        out.append((dataset, series, seeds))
        print(f"  sims repeat {rep + 1}/{n_repeats} done", flush=True)
    return out


def features_for(series, window, n_bins):
    return np.stack([feat.bin_features(c, window, n_bins).values for c in series])


def evaluate(dataset, matrix, seeds, hyper, full_train):
    n_nodes = 5
    n_bins = matrix.shape[1] // n_nodes
    vectors = bench._feature_vectors(matrix, n_nodes, n_bins, (0.0, 1.0))
    scaler = feat.fit_standardizer([vectors[i] for i in dataset.train_indices])
    x = feat.standardize_matrix(scaler, matrix)
    tr, te = dataset.train_indices, dataset.test_indices
    y = dataset.labels.astype(int)
    onehot = np.eye(3)[y]

    if full_train:
        net = learn.init_mlp([x.shape[1], 300, 3], learn.Activation.SOFTMAX,
                             seed=seeding.derive_seed(seeds["readout"],
                                                      seeding.STREAM_READOUT))
        net, hist = learn.train_mlp(net, x[tr], onehot[tr], x[tr], onehot[tr],
                                    learn.LossKind.CROSS_ENTROPY,
                                    max_epochs=hyper.max_epochs,
                                    patience=hyper.patience)
        preds = np.argmax(learn.mlp_forward(net, x[te]), axis=1)
        acc_mlp = float(np.mean(preds == y[te]))
    else:
        fitted = bench.fit_readout(Task.CLASSIFICATION, x[tr], y[tr],
                                   Readout.MLP, hyper, seeds["readout"])
        acc_mlp = bench.score_readout(fitted, x[te], y[te]).metric
    fitted_lin = bench.fit_readout(Task.CLASSIFICATION, x[tr], y[tr],
                                   Readout.LINEAR, hyper, seeds["readout"])
    acc_lin = bench.score_readout(fitted_lin, x[te], y[te]).metric
    return acc_mlp, acc_lin


def main():
    settings = BenchSettings()
    data = corrected_series(settings, N_REPEATS)
    hyper = settings.hyper
    variants = [
        ("K=10 val-split", (10.0, 25.0), 10, False),
        ("K=10 full-train", (10.0, 25.0), 10, True),
        ("K=5  full-train", (10.0, 25.0), 5, True),
        ("K=20 full-train", (10.0, 25.0), 20, True),
        ("K=10 window 10-18 full", (10.0, 18.0), 10, True),
        ("K=6  window 10-16 full", (10.0, 16.0), 6, True),
    ]
    for name, window, n_bins, full_train in variants:
        t0 = time.time()
        gaps, mlps, lins = [], [], []
        for dataset, series, seeds in data:
            matrix = features_for(series, window, n_bins)
            acc_mlp, acc_lin = evaluate(dataset, matrix, seeds, hyper, full_train)
            mlps.append(acc_mlp)
            lins.append(acc_lin)
            gaps.append(acc_mlp - acc_lin)
        print(f"{name:26s} mlp {np.mean(mlps):.4f} lin {np.mean(lins):.4f} "
              f"gap {np.mean(gaps):+.4f} (per-rep {np.round(gaps, 3)}) "
              f"[{time.time() - t0:.0f}s]", flush=True)


if __name__ == "__main__":
    main()
