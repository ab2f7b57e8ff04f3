"""Reduced-repeat probe of the benchmark margins before the full acceptance run."""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from qrc_sensor import bench
from qrc_sensor.bench import BenchSettings, Readout, Task


def main():
    settings = BenchSettings()  # N=5, U=0.05, 2000 trajectories, desk defaults
    t0 = time.time()
    cls = bench.benchmark_task(
        Task.CLASSIFICATION, settings, n_repeats=3, master_seed=20250810,
        readouts=(Readout.MLP, Readout.LINEAR, Readout.MLP_U0), threads=2,
        progress=lambda i, n: print(f"  classification repeat {i}/{n}", flush=True))
    print(f"classification ({time.time() - t0:.0f}s):")
    for r, res in cls.items():
        print(f"  {r.value:8s} acc = {res.mean:.4f} +/- {res.std:.4f}  {res.repeats}")

    t0 = time.time()
    reg = bench.benchmark_task(
        Task.REGRESSION, settings, n_repeats=3, master_seed=20250811,
        readouts=(Readout.MLP, Readout.LINEAR), threads=2,
        progress=lambda i, n: print(f"  regression repeat {i}/{n}", flush=True))
    print(f"regression ({time.time() - t0:.0f}s):")
    for r, res in reg.items():
        print(f"  {r.value:8s} mse = {res.mean:.5f} +/- {res.std:.5f}  {res.repeats}")

    t0 = time.time()
    tom = bench.benchmark_task(
        Task.TOMOGRAPHY, settings, n_repeats=2, master_seed=20250812,
        readouts=(Readout.MLP, Readout.LINEAR), threads=2,
        progress=lambda i, n: print(f"  tomography repeat {i}/{n}", flush=True))
    print(f"tomography ({time.time() - t0:.0f}s):")
    for r, res in tom.items():
        print(f"  {r.value:8s} mse = {res.mean:.6f} +/- {res.std:.6f}  {res.repeats}")
        mins_mlp = [np.mean(o.extras["pred_min"][o.extras["test_kinds"] == "squeezed"])
                    for o in res.outcomes]
        print(f"           mean squeezed pred_min per repeat: {mins_mlp}")


if __name__ == "__main__":
    main()
