"""Benchmark tasks: dataset generation, task execution, metrics, and sweeps.

Three tasks probe the sensing pipeline: three-way state classification
(squeezed/cat with an intra-class region), squeezing-phase regression, and
Wigner-grid tomography.  Each repeat draws a fresh reservoir realization and
dataset; the expensive trajectory simulations are shared between the network
readout and the linear baseline.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import features as feat
from . import fock, learn, reservoir, seeding
from .errors import InvalidArgumentError
from .states import StateKind, StateSpec

# Classification region parameters: a cat state inside the disk around
# (|beta_0|, phi_0) or a squeezed state inside the disk around (r_0, theta_0)
# belongs to class C1; everything else falls to C2 (squeezed) or C3 (cat).
CAT_CENTER = (2.35, 1.15)
CAT_RADIUS = 1.2
SQ_CENTER = (0.05, 0.7)
SQ_RADIUS = 1.0

CAT_MAG_RANGE = (1.12, 1.38)
COH_MAG_RANGE = (1.03, 1.34)
SQ_MAG_RANGE = (0.9, 1.1)
PHASE_RANGE = (0.0, math.pi / 2)

DEFAULT_N_CLASSIFICATION = 250
DEFAULT_N_REGRESSION = 130
DEFAULT_N_TOMOGRAPHY = 300


class Task(enum.Enum):
    CLASSIFICATION = "classification"
    REGRESSION = "regression"
    TOMOGRAPHY = "tomography"


class Readout(enum.Enum):
    LINEAR = "linear"       # ridge / multinomial logistic baseline
    MLP = "mlp"             # feed-forward network readout
    MLP_U0 = "mlp_u0"       # network readout on a Kerr-free reservoir


@dataclass(frozen=True)
class TomographyGrid:
    size: int = 32
    extent: float = 5.0
    cutoff: int = 40


@dataclass(frozen=True)
class ReadoutHyper:
    learning_rate: float = learn.DEFAULT_LEARNING_RATE
    weight_decay: float = learn.DEFAULT_WEIGHT_DECAY
    max_epochs: int = learn.DEFAULT_MAX_EPOCHS
    patience: int = learn.DEFAULT_PATIENCE
    hidden_classification: tuple[int, ...] = (300,)
    hidden_regression: tuple[int, ...] = (250,)
    hidden_tomography: tuple[int, ...] = (100, 100, 100, 100, 200, 64)
    lambda_grid: tuple[float, ...] = learn.DEFAULT_LAMBDA_GRID
    tomography_loss: learn.LossKind = learn.LossKind.MSE
    huber_delta: float = 1.0

    def hidden_sizes(self, task: Task) -> tuple[int, ...]:
        if task is Task.CLASSIFICATION:
            return self.hidden_classification
        if task is Task.REGRESSION:
            return self.hidden_regression
        return self.hidden_tomography


@dataclass
class Dataset:
    task: Task
    specs: list[StateSpec]
    labels: np.ndarray            # class index / target value / flattened grids
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int
    grid: TomographyGrid | None = None

    def __post_init__(self):
        joined = np.concatenate([self.train_indices, self.test_indices])
        if len(set(joined.tolist())) != len(self.specs) or len(joined) != len(self.specs):
            raise InvalidArgumentError("split must be disjoint and exhaustive")


@dataclass
class RepeatOutcome:
    """Result of evaluating one readout on one realization."""

    readout: Readout
    metric: float                       # accuracy or MSE
    predictions: np.ndarray
    test_indices: np.ndarray
    confusion: np.ndarray | None = None
    extras: dict = field(default_factory=dict)


@dataclass
class TaskResult:
    task: Task
    readout: Readout
    metric_name: str
    repeats: list[float]
    mean: float
    std: float
    outcomes: list[RepeatOutcome] = field(default_factory=list)


def classification_label(spec: StateSpec) -> int:
    """C1 = 0 inside the kind's region; C2 = 1 (squeezed) / C3 = 2 (cat) outside."""
    if spec.kind is StateKind.SQUEEZED_VACUUM:
        inside = ((spec.squeeze_mag - SQ_CENTER[0]) ** 2
                  + (spec.squeeze_phase - SQ_CENTER[1]) ** 2) < SQ_RADIUS ** 2
        return 0 if inside else 1
    if spec.kind is StateKind.CAT:
        inside = ((spec.amplitude_mag - CAT_CENTER[0]) ** 2
                  + (spec.amplitude_phase - CAT_CENTER[1]) ** 2) < CAT_RADIUS ** 2
        return 0 if inside else 2
    raise InvalidArgumentError("classification uses squeezed and cat states only")


def generate_dataset(task: Task, n_samples: int, seed: int,
                     grid: TomographyGrid | None = None) -> Dataset:
    """Draw a balanced dataset with the task's split ratio.

    Classification uses squeezed and cat states (1:1 train:test), regression
    squeezed states only (3:10), tomography all three kinds (14:1) with
    flattened Wigner grids as targets.
    """
    if n_samples < 2:
        raise InvalidArgumentError("n_samples must be >= 2")
    rng = seeding.generator(seed, seeding.STREAM_DATASET)

    if task is Task.CLASSIFICATION:
        kinds = [StateKind.SQUEEZED_VACUUM, StateKind.CAT]
    elif task is Task.REGRESSION:
        kinds = [StateKind.SQUEEZED_VACUUM]
    else:
        kinds = [StateKind.COHERENT, StateKind.SQUEEZED_VACUUM, StateKind.CAT]
    if n_samples % len(kinds) != 0:
        raise InvalidArgumentError(
            f"{task.value} needs n_samples divisible by {len(kinds)}")

    specs: list[StateSpec] = []
    for i in range(n_samples):
        kind = kinds[i % len(kinds)]
        if kind is StateKind.COHERENT:
            specs.append(StateSpec(
                StateKind.COHERENT,
                amplitude_mag=rng.uniform(*COH_MAG_RANGE),
                amplitude_phase=rng.uniform(*PHASE_RANGE)))
        elif kind is StateKind.SQUEEZED_VACUUM:
            specs.append(StateSpec(
                StateKind.SQUEEZED_VACUUM,
                squeeze_mag=rng.uniform(*SQ_MAG_RANGE),
                squeeze_phase=rng.uniform(*PHASE_RANGE)))
        else:
            specs.append(StateSpec(
                StateKind.CAT,
                amplitude_mag=rng.uniform(*CAT_MAG_RANGE),
                amplitude_phase=rng.uniform(*PHASE_RANGE)))

    if task is Task.CLASSIFICATION:
        labels = np.array([classification_label(s) for s in specs])
        train_fraction = 1 / 2
    elif task is Task.REGRESSION:
        labels = np.array([s.squeeze_phase for s in specs])
        train_fraction = 3 / 13
    else:
        grid = grid or TomographyGrid()
        labels = np.stack([
            fock.wigner_grid(s, grid.size, grid.extent, grid.cutoff).values.reshape(-1)
            for s in specs])
        train_fraction = 14 / 15

    split_rng = seeding.generator(seed, seeding.STREAM_SPLIT)
    order = split_rng.permutation(n_samples)
    n_train = int(round(n_samples * train_fraction))
    n_train = min(max(n_train, 1), n_samples - 1)
    return Dataset(task=task, specs=specs, labels=labels,
                   train_indices=np.sort(order[:n_train]),
                   test_indices=np.sort(order[n_train:]), seed=seed,
                   grid=grid if task is Task.TOMOGRAPHY else None)


def confusion_matrix(preds, labels, n_classes: int) -> np.ndarray:
    preds = np.asarray(preds, int)
    labels = np.asarray(labels, int)
    if preds.shape != labels.shape:
        raise InvalidArgumentError("predictions and labels must have equal length")
    if np.any(preds < 0) or np.any(preds >= n_classes) \
            or np.any(labels < 0) or np.any(labels >= n_classes):
        raise InvalidArgumentError("label outside [0, n_classes)")
    out = np.zeros((n_classes, n_classes), dtype=int)
    for true, pred in zip(labels, preds):
        out[true, pred] += 1
    return out


# ---------------------------------------------------------------------------
# feature simulation and readout evaluation
# ---------------------------------------------------------------------------

@dataclass
class FeatureSet:
    """Per-sample binned features plus the shared reference record."""

    matrix: np.ndarray              # (n_samples, n_nodes * n_bins)
    reference: reservoir.ResponseRecord
    n_nodes: int
    n_bins: int
    window: tuple[float, float]


def sample_config(config: reservoir.ReservoirConfig,
                  sample_index: int) -> reservoir.ReservoirConfig:
    """Same reservoir realization with an independent noise/source stream.

    Each dataset sample models a separate physical run, so its ensemble uses
    its own stochastic stream (seed derived repeat -> sample) while sharing
    the drawn couplings, detunings, and weights.
    """
    derived = seeding.derive_seed(config.master_seed, seeding.STREAM_SAMPLE,
                                  sample_index)
    return replace(config, master_seed=derived)


def simulate_features(config: reservoir.ReservoirConfig, dataset: Dataset,
                      window: tuple[float, float] = feat.DEFAULT_WINDOW,
                      n_bins: int = feat.DEFAULT_N_BINS, threads: int = 1,
                      progress=None, on_record=None) -> FeatureSet:
    """One reference ensemble plus one perturbed ensemble per dataset sample.

    The reference uses the realization's own stream; every sample run gets an
    independent stream, like separate experiments against one recorded
    background.  on_record(index, record) is called with each perturbed
    response so callers can persist raw records without a second pass.
    """
    reference = reservoir.simulate_ensemble(config, None, threads=threads)
    rows = []
    for i, spec in enumerate(dataset.specs):
        perturbed = reservoir.simulate_ensemble(sample_config(config, i), spec,
                                                threads=threads)
        if on_record is not None:
            on_record(i, perturbed)
        corrected = feat.subtract_reference(perturbed, reference)
        rows.append(feat.bin_features(corrected, window, n_bins).values)
        if progress is not None:
            progress(i + 1, len(dataset.specs))
    return FeatureSet(matrix=np.stack(rows), reference=reference,
                      n_nodes=config.n_nodes, n_bins=n_bins, window=window)


def _feature_vectors(matrix, n_nodes, n_bins, window):
    width = (window[1] - window[0]) / n_bins
    return [feat.FeatureVector(values=row, n_nodes=n_nodes, n_bins=n_bins,
                               window=window, bin_width=width) for row in matrix]


def _standardize(feature_set: FeatureSet, train_idx):
    vectors = _feature_vectors(feature_set.matrix, feature_set.n_nodes,
                               feature_set.n_bins, feature_set.window)
    scaler = feat.fit_standardizer([vectors[i] for i in train_idx])
    return feat.standardize_matrix(scaler, feature_set.matrix), scaler


def _fit_validation_split(n_train: int, seed: int):
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_train)
    n_val = max(1, n_train // 5)
    return order[n_val:], order[:n_val]


@dataclass
class FittedReadout:
    """A trained readout plus the target scaling needed to undo it."""

    task: Task
    readout: Readout
    model: object                      # learn.Mlp or learn.LinearModel
    target_mean: np.ndarray | None = None
    target_scale: np.ndarray | None = None

    def predict(self, x_std: np.ndarray) -> np.ndarray:
        if isinstance(self.model, learn.Mlp):
            out = learn.mlp_forward(self.model, x_std)
            if self.task is Task.CLASSIFICATION:
                return np.argmax(out, axis=1)
            return out * self.target_scale + self.target_mean
        return self.model.predict(x_std)


def fit_readout(task: Task, x_train_std: np.ndarray, train_labels: np.ndarray,
                readout: Readout, hyper: ReadoutHyper, seed: int) -> FittedReadout:
    """Train one readout on standardized features."""
    use_mlp = readout in (Readout.MLP, Readout.MLP_U0)
    if task is Task.CLASSIFICATION:
        y = np.asarray(train_labels, int)
        n_classes = 3
        if use_mlp:
            onehot = np.eye(n_classes)[y]
            fit_rows, val_rows = _fit_validation_split(
                len(y), seeding.derive_seed(seed, seeding.STREAM_SPLIT))
            net = learn.init_mlp(
                [x_train_std.shape[1], *hyper.hidden_sizes(task), n_classes],
                learn.Activation.SOFTMAX,
                seed=seeding.derive_seed(seed, seeding.STREAM_READOUT))
            net, _ = learn.train_mlp(
                net, x_train_std[fit_rows], onehot[fit_rows],
                x_train_std[val_rows], onehot[val_rows],
                learn.LossKind.CROSS_ENTROPY, hyper.learning_rate,
                hyper.weight_decay, hyper.max_epochs, hyper.patience)
            return FittedReadout(task, readout, net)
        model = learn.fit_multinomial_logistic(
            x_train_std, y, hyper.lambda_grid,
            seed=seeding.derive_seed(seed, seeding.STREAM_READOUT),
            n_classes=n_classes)
        return FittedReadout(task, readout, model)

    targets = np.asarray(train_labels, float)
    if targets.ndim == 1:
        targets = targets[:, None]
    t_mean = targets.mean(axis=0)
    t_std = targets.std(axis=0)
    t_scale = np.where(t_std < 1e-12, 1.0, t_std)
    fit_rows, val_rows = _fit_validation_split(
        len(targets), seeding.derive_seed(seed, seeding.STREAM_SPLIT))
    if use_mlp:
        z = (targets - t_mean) / t_scale
        loss_kind = (hyper.tomography_loss if task is Task.TOMOGRAPHY
                     else learn.LossKind.MSE)
        net = learn.init_mlp(
            [x_train_std.shape[1], *hyper.hidden_sizes(task), targets.shape[1]],
            learn.Activation.IDENTITY,
            seed=seeding.derive_seed(seed, seeding.STREAM_READOUT))
        net, _ = learn.train_mlp(
            net, x_train_std[fit_rows], z[fit_rows],
            x_train_std[val_rows], z[val_rows],
            loss_kind, hyper.learning_rate, hyper.weight_decay,
            hyper.max_epochs, hyper.patience, hyper.huber_delta)
        return FittedReadout(task, readout, net, t_mean, t_scale)
    best_lam, best_mse = hyper.lambda_grid[0], math.inf
    for lam in hyper.lambda_grid:
        candidate = learn.fit_ridge(x_train_std[fit_rows], targets[fit_rows], lam)
        mse = learn.loss_mse(candidate.predict(x_train_std[val_rows]),
                             targets[val_rows])
        if mse < best_mse:
            best_mse, best_lam = mse, lam
    model = learn.fit_ridge(x_train_std, targets, best_lam)
    return FittedReadout(task, readout, model)


def score_readout(fitted: FittedReadout, x_test_std: np.ndarray,
                  test_labels: np.ndarray, test_specs=None) -> RepeatOutcome:
    """Metrics of a fitted readout on standardized test features."""
    task = fitted.task
    preds = fitted.predict(x_test_std)
    if task is Task.CLASSIFICATION:
        labels = np.asarray(test_labels, int)
        conf = confusion_matrix(preds, labels, 3)
        metric = float(np.trace(conf) / conf.sum())
        return RepeatOutcome(readout=fitted.readout, metric=metric,
                             predictions=preds,
                             test_indices=np.arange(len(labels)),
                             confusion=conf, extras={"model": fitted.model})
    targets = np.asarray(test_labels, float)
    if targets.ndim == 1:
        targets = targets[:, None]
    metric = learn.loss_mse(preds, targets)
    extras = {"model": fitted.model}
    if task is Task.TOMOGRAPHY:
        extras["pred_min"] = preds.min(axis=1)
        extras["target_min"] = targets.min(axis=1)
        if test_specs is not None:
            extras["test_kinds"] = np.array([s.kind.value for s in test_specs])
    return RepeatOutcome(readout=fitted.readout, metric=metric, predictions=preds,
                         test_indices=np.arange(len(targets)), extras=extras)


def evaluate_readout(task: Task, feature_set: FeatureSet, dataset: Dataset,
                     readout: Readout, hyper: ReadoutHyper,
                     seed: int) -> RepeatOutcome:
    """Fit one readout on the train split and score it on the test split."""
    train_idx = dataset.train_indices
    test_idx = dataset.test_indices
    x_all, _ = _standardize(feature_set, train_idx)
    fitted = fit_readout(task, x_all[train_idx], dataset.labels[train_idx],
                         readout, hyper, seed)
    outcome = score_readout(fitted, x_all[test_idx], dataset.labels[test_idx],
                            [dataset.specs[i] for i in test_idx])
    outcome.test_indices = test_idx
    return outcome


def run_task(task: Task, config: reservoir.ReservoirConfig, dataset: Dataset,
             readout: Readout, seed: int, hyper: ReadoutHyper | None = None,
             window: tuple[float, float] = feat.DEFAULT_WINDOW,
             n_bins: int = feat.DEFAULT_N_BINS, threads: int = 1) -> RepeatOutcome:
    """Full single-realization pipeline for one readout."""
    hyper = hyper or ReadoutHyper()
    feature_set = simulate_features(config, dataset, window, n_bins, threads)
    return evaluate_readout(task, feature_set, dataset, readout, hyper, seed)


# ---------------------------------------------------------------------------
# repeated benchmarks and sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchSettings:
    """Reservoir/feature/readout knobs shared by benchmarks and sweeps."""

    n_nodes: int = 5
    kerr: float = 0.05
    drive: complex = reservoir.DEFAULT_DRIVE
    n_trajectories: int = 2000
    dt: float = reservoir.DEFAULT_DT
    t_final: float = reservoir.DEFAULT_T_FINAL
    injection_window: tuple[float, float] = reservoir.DEFAULT_WINDOW
    feature_window: tuple[float, float] = feat.DEFAULT_WINDOW
    n_bins: int = feat.DEFAULT_N_BINS
    n_samples: dict | None = None
    hyper: ReadoutHyper = ReadoutHyper()
    grid: TomographyGrid = TomographyGrid()

    def samples_for(self, task: Task) -> int:
        defaults = {Task.CLASSIFICATION: DEFAULT_N_CLASSIFICATION,
                    Task.REGRESSION: DEFAULT_N_REGRESSION,
                    Task.TOMOGRAPHY: DEFAULT_N_TOMOGRAPHY}
        if self.n_samples and task.value in self.n_samples:
            return self.n_samples[task.value]
        return defaults[task]


def repeat_seeds(master_seed: int, repeat: int) -> dict:
    return {
        "reservoir": seeding.derive_seed(master_seed, seeding.STREAM_REPEAT, repeat, 0),
        "dataset": seeding.derive_seed(master_seed, seeding.STREAM_REPEAT, repeat, 1),
        "readout": seeding.derive_seed(master_seed, seeding.STREAM_REPEAT, repeat, 2),
    }


def build_bench_reservoir(settings: BenchSettings, seed: int,
                          kerr: float | None = None,
                          n_nodes: int | None = None) -> reservoir.ReservoirConfig:
    return reservoir.build_reservoir(
        n_nodes if n_nodes is not None else settings.n_nodes,
        settings.kerr if kerr is None else kerr,
        drive=settings.drive, n_trajectories=settings.n_trajectories,
        seed=seed, dt=settings.dt, t_final=settings.t_final,
        injection_window=settings.injection_window)


def benchmark_task(task: Task, settings: BenchSettings, n_repeats: int,
                   master_seed: int, readouts: tuple[Readout, ...] = (
                       Readout.MLP, Readout.LINEAR),
                   threads: int = 1, progress=None,
                   return_artifacts: bool = False):
    """Run n_repeats independent realizations, sharing simulations per repeat.

    The Kerr-free control readout (MLP_U0) re-simulates the same reservoir
    realization with the interaction switched off.  With return_artifacts the
    per-repeat (dataset, feature_set) pairs are returned alongside the results
    so callers can rerun readout ablations without new simulations.
    """
    per_readout: dict[Readout, list[RepeatOutcome]] = {r: [] for r in readouts}
    artifacts = []
    for rep in range(n_repeats):
        seeds = repeat_seeds(master_seed, rep)
        dataset = generate_dataset(task, settings.samples_for(task),
                                   seeds["dataset"], grid=settings.grid)
        shared = [r for r in readouts if r in (Readout.MLP, Readout.LINEAR)]
        if shared:
            config = build_bench_reservoir(settings, seeds["reservoir"])
            fs = simulate_features(config, dataset, settings.feature_window,
                                   settings.n_bins, threads)
            for r in shared:
                per_readout[r].append(evaluate_readout(
                    task, fs, dataset, r, settings.hyper, seeds["readout"]))
            if return_artifacts:
                artifacts.append((dataset, fs, seeds))
        if Readout.MLP_U0 in readouts:
            config0 = build_bench_reservoir(settings, seeds["reservoir"], kerr=0.0)
            fs0 = simulate_features(config0, dataset, settings.feature_window,
                                    settings.n_bins, threads)
            per_readout[Readout.MLP_U0].append(evaluate_readout(
                task, fs0, dataset, Readout.MLP_U0, settings.hyper,
                seeds["readout"]))
        if progress is not None:
            progress(rep + 1, n_repeats)

    metric_name = "accuracy" if task is Task.CLASSIFICATION else "mse"
    results = {}
    for r, outcomes in per_readout.items():
        values = [o.metric for o in outcomes]
        results[r] = TaskResult(
            task=task, readout=r, metric_name=metric_name, repeats=values,
            mean=float(np.mean(values)),
            std=float(np.std(values)) if len(values) > 1 else 0.0,
            outcomes=outcomes)
    if return_artifacts:
        return results, artifacts
    return results


class SweepAxis(enum.Enum):
    KERR = "kerr"
    SIZE = "size"


@dataclass
class SweepCell:
    axis: SweepAxis
    value: float
    readout: Readout
    repeats: list[float]
    mean: float
    std: float
    failed: bool = False


def sweep(axis: SweepAxis, values, n_repeats: int, settings: BenchSettings,
          task: Task, master_seed: int, threads: int = 1,
          progress=None) -> list[SweepCell]:
    """Scan Kerr strength or lattice size; emits network, linear baseline, and
    Kerr-free control series per axis value with mean and std over repeats."""
    if not values:
        raise InvalidArgumentError("sweep needs at least one axis value")
    if n_repeats < 1:
        raise InvalidArgumentError("n_repeats must be >= 1")
    cells = []
    for vi, value in enumerate(values):
        if axis is SweepAxis.KERR:
            cell_settings = replace(settings, kerr=float(value))
        else:
            cell_settings = replace(settings, n_nodes=int(value))
        cell_seed = seeding.derive_seed(master_seed, seeding.STREAM_REPEAT, 1000 + vi)
        try:
            results = benchmark_task(
                task, cell_settings, n_repeats, cell_seed,
                readouts=(Readout.MLP, Readout.LINEAR, Readout.MLP_U0),
                threads=threads)
            for readout, res in results.items():
                cells.append(SweepCell(axis=axis, value=float(value), readout=readout,
                                       repeats=res.repeats, mean=res.mean,
                                       std=res.std))
        except Exception:
            for readout in (Readout.MLP, Readout.LINEAR, Readout.MLP_U0):
                cells.append(SweepCell(axis=axis, value=float(value), readout=readout,
                                       repeats=[], mean=float("nan"),
                                       std=float("nan"), failed=True))
        if progress is not None:
            progress(vi + 1, len(values))
    return cells


def permuted_labels(labels: np.ndarray, seed: int) -> np.ndarray:
    """Label-shuffling control for chance-level checks."""
    rng = np.random.default_rng(seed)
    return labels[rng.permutation(len(labels))]
