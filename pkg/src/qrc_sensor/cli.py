"""Command-line interface and experiment orchestration.

Subcommands: run (fused pipeline), simulate / features / train / evaluate
(the same pipeline in standalone stages over persisted artifacts), sweep, and
wigner (emit a target grid).  Exit codes: 0 ok, 2 configuration error,
3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, bench, config as cfgmod, features as feat
from . import fock, reservoir, runio, seeding
from .bench import Readout, Task
from .errors import (ConfigError, ConvergenceError, DegenerateSamplingError,
                     DivergenceError, InvalidArgumentError,
                     NumericalConsistencyError, QrcError)
from .states import StateKind, StateSpec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

RESULT_COLUMNS = ["task", "axis", "value", "repeat", "readout", "metric"]
READOUTS = (Readout.MLP, Readout.LINEAR)
WIGNER_PAIR_COUNT = 3


def _rep_dir(run_dir: Path, task: Task, repeat: int, single_task: bool) -> Path:
    base = run_dir if single_task else run_dir / task.value
    return base / f"rep{repeat:03d}"


def _scaler_for(dataset, matrix, settings):
    vectors = bench._feature_vectors(matrix, settings.n_nodes, settings.n_bins,
                                     settings.feature_window)
    return feat.fit_standardizer([vectors[i] for i in dataset.train_indices])


def _write_outcome_artifacts(rep_dir: Path, task: Task, dataset, outcome,
                             readout: Readout, write_wigner_pairs: bool):
    name = readout.value
    test_idx = dataset.test_indices
    if task is Task.CLASSIFICATION:
        rows = [(int(i), int(dataset.labels[i]), int(p))
                for i, p in zip(test_idx, outcome.predictions)]
        runio.write_csv(rep_dir / f"predictions_{name}.csv",
                        ["sample", "true", "pred"], rows)
        conf = outcome.confusion
        runio.write_csv(rep_dir / f"confusion_{name}.csv",
                        ["true_class"] + [f"pred_{c}" for c in range(conf.shape[1])],
                        [(c, *conf[c]) for c in range(conf.shape[0])])
    elif task is Task.REGRESSION:
        rows = [(int(i), float(dataset.labels[i]), float(p[0]))
                for i, p in zip(test_idx, outcome.predictions)]
        runio.write_csv(rep_dir / f"predictions_{name}.csv",
                        ["sample", "target", "prediction"], rows)
    else:
        per_sample = np.mean((outcome.predictions
                              - dataset.labels[test_idx]) ** 2, axis=1)
        rows = [(int(i), float(m), float(tmin), float(pmin))
                for i, m, tmin, pmin in zip(test_idx, per_sample,
                                            outcome.extras["target_min"],
                                            outcome.extras["pred_min"])]
        runio.write_csv(rep_dir / f"predictions_{name}.csv",
                        ["sample", "mse", "target_min", "pred_min"], rows)
        if write_wigner_pairs and dataset.grid is not None:
            grid = dataset.grid
            step = 2.0 * grid.extent / grid.size
            for k in range(min(WIGNER_PAIR_COUNT, len(test_idx))):
                values = outcome.predictions[k].reshape(grid.size, grid.size)
                runio.write_wigner(
                    rep_dir / f"wigner_pred_{name}_{k}.json",
                    fock.WignerGrid(grid.size, grid.extent, values, step * step))


def _write_target_grids(rep_dir: Path, dataset):
    grid = dataset.grid
    step = 2.0 * grid.extent / grid.size
    for k in range(min(WIGNER_PAIR_COUNT, len(dataset.test_indices))):
        idx = dataset.test_indices[k]
        values = dataset.labels[idx].reshape(grid.size, grid.size)
        runio.write_wigner(rep_dir / f"wigner_target_{k}.json",
                           fock.WignerGrid(grid.size, grid.extent, values,
                                           step * step))


def run_experiment(cfg: cfgmod.ExperimentConfig, run_dir: Path,
                   threads: int = 1, log=print) -> Path:
    """Fused pipeline: simulate, extract, train, evaluate, persist."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    settings = cfg.settings()
    tasks = cfg.tasks()
    single_task = len(tasks) == 1
    result_rows = []
    summary_lines = [f"qrc-sensor {__version__} run", f"seed: {cfg.seed}", ""]

    for task in tasks:
        task_seed = seeding.derive_seed(cfg.seed, seeding.STREAM_REPEAT,
                                        list(Task).index(task))
        results = {r: [] for r in READOUTS}
        for rep in range(cfg.repeats):
            seeds = bench.repeat_seeds(task_seed, rep)
            dataset = bench.generate_dataset(task, settings.samples_for(task),
                                             seeds["dataset"], grid=settings.grid)
            rcfg = bench.build_bench_reservoir(settings, seeds["reservoir"])
            rep_dir = _rep_dir(run_dir, task, rep, single_task)
            rep_dir.mkdir(parents=True, exist_ok=True)
            runio.write_dataset(rep_dir, dataset)
            on_record = None
            if cfg.save_responses == "all":
                on_record = lambda i, rec: runio.write_response(
                    rep_dir / "responses" / f"sample{i:04d}.csv", rec)
            fs = bench.simulate_features(rcfg, dataset, settings.feature_window,
                                         settings.n_bins, threads,
                                         on_record=on_record)
            if cfg.save_responses in ("reference", "all"):
                runio.write_response(rep_dir / "responses" / "reference.csv",
                                     fs.reference)
            scaler = _scaler_for(dataset, fs.matrix, settings)
            runio.write_features(rep_dir, fs.matrix, scaler, settings.n_nodes,
                                 settings.n_bins, settings.feature_window)
            if task is Task.TOMOGRAPHY and rep == 0:
                _write_target_grids(rep_dir, dataset)
            x_all = feat.standardize_matrix(scaler, fs.matrix)
            for readout in READOUTS:
                fitted = bench.fit_readout(task, x_all[dataset.train_indices],
                                           dataset.labels[dataset.train_indices],
                                           readout, settings.hyper, seeds["readout"])
                outcome = bench.score_readout(
                    fitted, x_all[dataset.test_indices],
                    dataset.labels[dataset.test_indices],
                    [dataset.specs[i] for i in dataset.test_indices])
                outcome.test_indices = dataset.test_indices
                runio.write_checkpoint(rep_dir / f"model_{readout.value}.ckpt",
                                       fitted, scaler)
                _write_outcome_artifacts(rep_dir, task, dataset, outcome, readout,
                                         write_wigner_pairs=(rep == 0))
                results[readout].append(outcome.metric)
                result_rows.append((task.value, "none", "", rep, readout.value,
                                    outcome.metric))
            log(f"[{task.value}] repeat {rep + 1}/{cfg.repeats} done")
        metric_name = "accuracy" if task is Task.CLASSIFICATION else "mse"
        for readout in READOUTS:
            values = results[readout]
            mean = float(np.mean(values))
            std = float(np.std(values)) if len(values) > 1 else 0.0
            summary_lines.append(
                f"{task.value:14s} {readout.value:7s} {metric_name}: "
                f"{mean:.6f} +/- {std:.6f}  (n={len(values)})")

    runio.write_csv(run_dir / "results.csv", RESULT_COLUMNS, result_rows)
    if cfg.task == "suite":
        sweep_rows = _sweep_rows(cfg, threads, log)
        runio.write_csv(run_dir / "sweep.csv", RESULT_COLUMNS, sweep_rows)
    _write_manifest(cfg, run_dir)
    runio.write_text(run_dir / "summary.txt", "\n".join(summary_lines) + "\n")
    log("\n".join(summary_lines))
    return run_dir


def _write_manifest(cfg: cfgmod.ExperimentConfig, run_dir: Path):
    echo = cfgmod.serialize_config(cfg, include_output=False)
    runio.write_text(run_dir / "config.ini", echo)
    runio.write_json(run_dir / "manifest.json", {
        "format_version": runio.FORMAT_VERSION,
        "tool_version": __version__,
        "seed": cfg.seed,
        "config_hash": runio.content_hash(echo),
        "config": echo,
    })


def _sweep_rows(cfg: cfgmod.ExperimentConfig, threads: int, log=print):
    settings = cfg.settings()
    axis = bench.SweepAxis(cfg.sweep_axis)
    task = Task(cfg.task) if cfg.task != "suite" else Task.CLASSIFICATION
    cells = bench.sweep(axis, list(cfg.sweep_values), cfg.sweep_repeats, settings,
                        task, cfg.seed, threads=threads,
                        progress=lambda i, n: log(f"[sweep] value {i}/{n} done"))
    rows = []
    for cell in cells:
        if cell.failed:
            rows.append((task.value, cell.axis.value, cell.value, 0,
                         cell.readout.value, "nan"))
            continue
        for rep, value in enumerate(cell.repeats):
            rows.append((task.value, cell.axis.value, cell.value, rep,
                         cell.readout.value, value))
    return rows


def run_sweep(cfg: cfgmod.ExperimentConfig, run_dir: Path, threads: int = 1,
              log=print) -> Path:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    rows = _sweep_rows(cfg, threads, log)
    runio.write_csv(run_dir / "sweep.csv", RESULT_COLUMNS, rows)
    _write_manifest(cfg, run_dir)
    return run_dir


# ---------------------------------------------------------------------------
# staged pipeline
# ---------------------------------------------------------------------------

def _single_task(cfg: cfgmod.ExperimentConfig) -> Task:
    if cfg.task == "suite":
        raise ConfigError("staged subcommands need a single task",
                          key="experiment.task")
    return Task(cfg.task)


def stage_simulate(cfg, run_dir: Path, threads: int = 1, log=print):
    """Persist the dataset and every response record for later stages."""
    task = _single_task(cfg)
    settings = cfg.settings()
    task_seed = seeding.derive_seed(cfg.seed, seeding.STREAM_REPEAT,
                                    list(Task).index(task))
    for rep in range(cfg.repeats):
        seeds = bench.repeat_seeds(task_seed, rep)
        dataset = bench.generate_dataset(task, settings.samples_for(task),
                                         seeds["dataset"], grid=settings.grid)
        rcfg = bench.build_bench_reservoir(settings, seeds["reservoir"])
        rep_dir = _rep_dir(Path(run_dir), task, rep, True)
        rep_dir.mkdir(parents=True, exist_ok=True)
        runio.write_dataset(rep_dir, dataset)
        reference = reservoir.simulate_ensemble(rcfg, None, threads=threads)
        runio.write_response(rep_dir / "responses" / "reference.csv", reference)
        for i, spec in enumerate(dataset.specs):
            perturbed = reservoir.simulate_ensemble(bench.sample_config(rcfg, i),
                                                    spec, threads=threads)
            runio.write_response(rep_dir / "responses" / f"sample{i:04d}.csv",
                                 perturbed)
        log(f"[simulate] repeat {rep + 1}/{cfg.repeats} done")
    _write_manifest(cfg, Path(run_dir))


def stage_features(cfg, run_dir: Path, log=print):
    """Bin persisted responses into feature tables."""
    task = _single_task(cfg)
    settings = cfg.settings()
    for rep in range(cfg.repeats):
        rep_dir = _rep_dir(Path(run_dir), task, rep, True)
        dataset = runio.read_dataset(rep_dir)
        reference = runio.read_response(rep_dir / "responses" / "reference.csv")
        rows = []
        for i in range(len(dataset.specs)):
            sample_path = rep_dir / "responses" / f"sample{i:04d}.csv"
            if not sample_path.exists():
                raise InvalidArgumentError(
                    f"missing response record {sample_path}; run `simulate` first")
            perturbed = runio.read_response(sample_path)
            corrected = feat.subtract_reference(perturbed, reference)
            rows.append(feat.bin_features(corrected, settings.feature_window,
                                          settings.n_bins).values)
        matrix = np.stack(rows)
        scaler = _scaler_for(dataset, matrix, settings)
        runio.write_features(rep_dir, matrix, scaler, settings.n_nodes,
                             settings.n_bins, settings.feature_window)
        log(f"[features] repeat {rep + 1}/{cfg.repeats} done")


def stage_train(cfg, run_dir: Path, log=print):
    """Fit both readouts on persisted features; write checkpoints and metrics."""
    task = _single_task(cfg)
    settings = cfg.settings()
    task_seed = seeding.derive_seed(cfg.seed, seeding.STREAM_REPEAT,
                                    list(Task).index(task))
    rows = []
    for rep in range(cfg.repeats):
        seeds = bench.repeat_seeds(task_seed, rep)
        rep_dir = _rep_dir(Path(run_dir), task, rep, True)
        if not (rep_dir / "features.csv").exists():
            raise InvalidArgumentError(
                f"missing {rep_dir / 'features.csv'}; run `features` first")
        dataset = runio.read_dataset(rep_dir)
        matrix, scaler, _ = runio.read_features(rep_dir)
        x_all = feat.standardize_matrix(scaler, matrix)
        for readout in READOUTS:
            fitted = bench.fit_readout(task, x_all[dataset.train_indices],
                                       dataset.labels[dataset.train_indices],
                                       readout, settings.hyper, seeds["readout"])
            runio.write_checkpoint(rep_dir / f"model_{readout.value}.ckpt",
                                   fitted, scaler)
            outcome = bench.score_readout(
                fitted, x_all[dataset.test_indices],
                dataset.labels[dataset.test_indices],
                [dataset.specs[i] for i in dataset.test_indices])
            rows.append((task.value, "none", "", rep, readout.value, outcome.metric))
        log(f"[train] repeat {rep + 1}/{cfg.repeats} done")
    runio.write_csv(Path(run_dir) / "results.csv", RESULT_COLUMNS, rows)


def stage_evaluate(cfg, run_dir: Path, log=print):
    """Score persisted checkpoints on persisted features."""
    task = _single_task(cfg)
    rows = []
    for rep in range(cfg.repeats):
        rep_dir = _rep_dir(Path(run_dir), task, rep, True)
        dataset = runio.read_dataset(rep_dir)
        matrix, scaler, _ = runio.read_features(rep_dir)
        x_all = feat.standardize_matrix(scaler, matrix)
        for readout in READOUTS:
            ckpt = rep_dir / f"model_{readout.value}.ckpt"
            if not ckpt.exists():
                raise InvalidArgumentError(f"missing {ckpt}; run `train` first")
            fitted, _ = runio.read_checkpoint(ckpt)
            outcome = bench.score_readout(
                fitted, x_all[dataset.test_indices],
                dataset.labels[dataset.test_indices],
                [dataset.specs[i] for i in dataset.test_indices])
            rows.append((task.value, "none", "", rep, readout.value, outcome.metric))
            log(f"[evaluate] rep {rep} {readout.value}: {outcome.metric:.6f}")
    runio.write_csv(Path(run_dir) / "evaluation.csv", RESULT_COLUMNS, rows)


def write_wigner_target(args) -> Path:
    kind = {"coherent": StateKind.COHERENT, "squeezed": StateKind.SQUEEZED_VACUUM,
            "cat": StateKind.CAT}[args.state]
    spec = StateSpec(kind, amplitude_mag=args.beta, amplitude_phase=args.phi,
                     squeeze_mag=args.r, squeeze_phase=args.theta,
                     cat_phase=args.cat_phase)
    grid = fock.wigner_grid(spec, size=args.m, extent=args.extent,
                            cutoff=args.cutoff)
    out = Path(args.out or f"wigner_{args.state}.json")
    if out.is_dir():
        out = out / f"wigner_{args.state}.json"
    runio.write_wigner(out, grid)
    return out


# ---------------------------------------------------------------------------
# argument parsing and entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrc-sensor",
        description="Kerr-lattice reservoir sensing pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        p.add_argument("--config", required=needs_config,
                       help="path to the experiment INI file")
        p.add_argument("--out", default=None, help="output run directory")
        p.add_argument("--seed", type=int, default=None, help="override the seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker thread cap (QRC_SENSOR_THREADS fallback)")

    for name in ("run", "simulate", "features", "train", "evaluate", "sweep"):
        add_common(sub.add_parser(name))

    wig = sub.add_parser("wigner", help="emit a target Wigner grid")
    wig.add_argument("--state", required=True,
                     choices=["coherent", "squeezed", "cat"])
    wig.add_argument("--beta", type=float, default=0.0, help="|beta|")
    wig.add_argument("--phi", type=float, default=0.0, help="phase of beta")
    wig.add_argument("--r", type=float, default=0.0, help="squeezing magnitude")
    wig.add_argument("--theta", type=float, default=0.0, help="squeezing phase")
    wig.add_argument("--cat-phase", dest="cat_phase", type=float, default=0.0)
    wig.add_argument("--m", type=int, default=32)
    wig.add_argument("--extent", type=float, default=5.0)
    wig.add_argument("--cutoff", type=int, default=40)
    wig.add_argument("--out", default=None)
    return parser


def _resolve_threads(value) -> int:
    if value is not None:
        return max(1, int(value))
    env = os.environ.get("QRC_SENSOR_THREADS")
    return max(1, int(env)) if env else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    run_dir = None
    try:
        if args.command == "wigner":
            out = write_wigner_target(args)
            print(f"wrote {out}")
            return EXIT_OK

        cfg = cfgmod.parse_config(args.config)
        cfg = cfgmod.with_overrides(cfg, seed=args.seed, output=args.out)
        threads = _resolve_threads(args.threads)
        run_dir = Path(cfg.output)
        if args.command == "run":
            run_experiment(cfg, run_dir, threads)
        elif args.command == "simulate":
            stage_simulate(cfg, run_dir, threads)
        elif args.command == "features":
            stage_features(cfg, run_dir)
        elif args.command == "train":
            stage_train(cfg, run_dir)
        elif args.command == "evaluate":
            stage_evaluate(cfg, run_dir)
        elif args.command == "sweep":
            run_sweep(cfg, run_dir, threads)
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, NumericalConsistencyError, ConvergenceError,
            DegenerateSamplingError, InvalidArgumentError) as exc:
        _mark_failed(run_dir, exc)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except QrcError as exc:
        _mark_failed(run_dir, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def _mark_failed(run_dir, exc):
    if run_dir is not None and Path(run_dir).is_dir():
        try:
            runio.write_text(Path(run_dir) / "FAILED", f"{exc}\n")
        except OSError:
            pass


if __name__ == "__main__":
    sys.exit(main())
