"""Experiment configuration: a human-editable INI file with strict validation.

Every key has a documented default; unknown sections or keys are rejected,
and error messages carry the full key path.  Serialization uses 17 significant
digits so parse -> serialize -> parse is lossless.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path

from . import features as feat
from . import learn, reservoir
from .bench import BenchSettings, ReadoutHyper, Task, TomographyGrid
from .errors import ConfigError

TASK_CHOICES = ("classification", "regression", "tomography", "suite")
SAVE_CHOICES = ("none", "reference", "all")
AXIS_CHOICES = ("kerr", "size")
LOSS_CHOICES = ("mse", "huber")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, (tuple, list)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    # [experiment]
    task: str = "classification"
    seed: int = 0
    repeats: int = 10
    output: str = "runs/experiment"
    save_responses: str = "reference"
    # [reservoir]
    n_nodes: int = 5
    kerr: float = 0.05
    drive_re: float = 0.5
    drive_im: float = 0.0
    decay: float = 1.0
    source_decay: float = 1.0
    dt: float = reservoir.DEFAULT_DT
    t_final: float = reservoir.DEFAULT_T_FINAL
    t_on: float = reservoir.DEFAULT_WINDOW[0]
    t_off: float = reservoir.DEFAULT_WINDOW[1]
    n_trajectories: int = 2000
    stratonovich_correction: bool = True
    # [features]
    n_bins: int = feat.DEFAULT_N_BINS
    window_start: float = feat.DEFAULT_WINDOW[0]
    window_end: float = feat.DEFAULT_WINDOW[1]
    # [dataset]
    n_classification: int = 250
    n_regression: int = 130
    n_tomography: int = 300
    # [readout]
    learning_rate: float = learn.DEFAULT_LEARNING_RATE
    weight_decay: float = learn.DEFAULT_WEIGHT_DECAY
    max_epochs: int = learn.DEFAULT_MAX_EPOCHS
    patience: int = learn.DEFAULT_PATIENCE
    hidden_classification: tuple = (300,)
    hidden_regression: tuple = (250,)
    hidden_tomography: tuple = (100, 100, 100, 100, 200, 64)
    lambda_grid: tuple = tuple(learn.DEFAULT_LAMBDA_GRID)
    tomography_loss: str = "mse"
    huber_delta: float = 1.0
    # [tomography]
    grid_size: int = 32
    extent: float = 5.0
    cutoff: int = 40
    # [sweep]
    sweep_axis: str = "kerr"
    sweep_values: tuple = (0.0, 0.02, 0.05)
    sweep_repeats: int = 10

    def settings(self) -> BenchSettings:
        return BenchSettings(
            n_nodes=self.n_nodes, kerr=self.kerr,
            drive=complex(self.drive_re, self.drive_im),
            n_trajectories=self.n_trajectories, dt=self.dt, t_final=self.t_final,
            injection_window=(self.t_on, self.t_off),
            feature_window=(self.window_start, self.window_end),
            n_bins=self.n_bins,
            n_samples={"classification": self.n_classification,
                       "regression": self.n_regression,
                       "tomography": self.n_tomography},
            hyper=ReadoutHyper(
                learning_rate=self.learning_rate, weight_decay=self.weight_decay,
                max_epochs=self.max_epochs, patience=self.patience,
                hidden_classification=tuple(self.hidden_classification),
                hidden_regression=tuple(self.hidden_regression),
                hidden_tomography=tuple(self.hidden_tomography),
                lambda_grid=tuple(self.lambda_grid),
                tomography_loss=learn.LossKind(
                    "mse" if self.tomography_loss == "mse" else "huber"),
                huber_delta=self.huber_delta),
            grid=TomographyGrid(size=self.grid_size, extent=self.extent,
                                cutoff=self.cutoff))

    def tasks(self) -> list[Task]:
        if self.task == "suite":
            return [Task.CLASSIFICATION, Task.REGRESSION, Task.TOMOGRAPHY]
        return [Task(self.task)]


# (section, key) -> (attribute, parser)
def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_tuple(text: str) -> tuple:
    return tuple(int(v.strip()) for v in text.split(",") if v.strip())


def _parse_float_tuple(text: str) -> tuple:
    return tuple(float(v.strip()) for v in text.split(",") if v.strip())


_SCHEMA = {
    ("experiment", "task"): ("task", str),
    ("experiment", "seed"): ("seed", int),
    ("experiment", "repeats"): ("repeats", int),
    ("experiment", "output"): ("output", str),
    ("experiment", "save_responses"): ("save_responses", str),
    ("reservoir", "n_nodes"): ("n_nodes", int),
    ("reservoir", "kerr"): ("kerr", float),
    ("reservoir", "drive_re"): ("drive_re", float),
    ("reservoir", "drive_im"): ("drive_im", float),
    ("reservoir", "decay"): ("decay", float),
    ("reservoir", "source_decay"): ("source_decay", float),
    ("reservoir", "dt"): ("dt", float),
    ("reservoir", "t_final"): ("t_final", float),
    ("reservoir", "t_on"): ("t_on", float),
    ("reservoir", "t_off"): ("t_off", float),
    ("reservoir", "n_trajectories"): ("n_trajectories", int),
    ("reservoir", "stratonovich_correction"): ("stratonovich_correction", _parse_bool),
    ("features", "n_bins"): ("n_bins", int),
    ("features", "window_start"): ("window_start", float),
    ("features", "window_end"): ("window_end", float),
    ("dataset", "n_classification"): ("n_classification", int),
    ("dataset", "n_regression"): ("n_regression", int),
    ("dataset", "n_tomography"): ("n_tomography", int),
    ("readout", "learning_rate"): ("learning_rate", float),
    ("readout", "weight_decay"): ("weight_decay", float),
    ("readout", "max_epochs"): ("max_epochs", int),
    ("readout", "patience"): ("patience", int),
    ("readout", "hidden_classification"): ("hidden_classification", _parse_int_tuple),
    ("readout", "hidden_regression"): ("hidden_regression", _parse_int_tuple),
    ("readout", "hidden_tomography"): ("hidden_tomography", _parse_int_tuple),
    ("readout", "lambda_grid"): ("lambda_grid", _parse_float_tuple),
    ("readout", "tomography_loss"): ("tomography_loss", str),
    ("readout", "huber_delta"): ("huber_delta", float),
    ("tomography", "grid_size"): ("grid_size", int),
    ("tomography", "extent"): ("extent", float),
    ("tomography", "cutoff"): ("cutoff", int),
    ("sweep", "axis"): ("sweep_axis", str),
    ("sweep", "values"): ("sweep_values", _parse_float_tuple),
    ("sweep", "repeats"): ("sweep_repeats", int),
}

_SECTION_ORDER = ["experiment", "reservoir", "features", "dataset", "readout",
                  "tomography", "sweep"]


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    def bad(key, message):
        raise ConfigError(message, key=key)

    if cfg.task not in TASK_CHOICES:
        bad("experiment.task", f"must be one of {TASK_CHOICES}, got {cfg.task!r}")
    if cfg.seed < 0:
        bad("experiment.seed", "must be >= 0")
    if cfg.repeats < 1:
        bad("experiment.repeats", "must be >= 1")
    if cfg.save_responses not in SAVE_CHOICES:
        bad("experiment.save_responses", f"must be one of {SAVE_CHOICES}")
    if cfg.n_nodes < 1:
        bad("reservoir.n_nodes", "must be >= 1")
    if cfg.kerr < 0 or not math.isfinite(cfg.kerr):
        bad("reservoir.kerr", "must be a finite value >= 0")
    if cfg.decay <= 0:
        bad("reservoir.decay", "must be > 0")
    if cfg.source_decay <= 0:
        bad("reservoir.source_decay", "must be > 0")
    if not (0 < cfg.dt <= 0.05):
        bad("reservoir.dt", "must satisfy 0 < dt <= 0.05")
    if not (cfg.t_on < cfg.t_off <= cfg.t_final):
        bad("reservoir.t_on", "must satisfy t_on < t_off <= t_final")
    if cfg.n_trajectories < 1:
        bad("reservoir.n_trajectories", "must be >= 1")
    if cfg.n_bins < 1:
        bad("features.n_bins", "must be >= 1")
    if not (cfg.window_start < cfg.window_end <= cfg.t_final):
        bad("features.window_start", "window must lie inside the simulated span")
    for key, value in (("dataset.n_classification", cfg.n_classification),
                       ("dataset.n_regression", cfg.n_regression),
                       ("dataset.n_tomography", cfg.n_tomography)):
        if value < 2:
            bad(key, "must be >= 2")
    if cfg.learning_rate <= 0:
        bad("readout.learning_rate", "must be > 0")
    if cfg.weight_decay < 0:
        bad("readout.weight_decay", "must be >= 0")
    if cfg.max_epochs < 1:
        bad("readout.max_epochs", "must be >= 1")
    if cfg.patience < 0:
        bad("readout.patience", "must be >= 0")
    for name, hidden in (("hidden_classification", cfg.hidden_classification),
                         ("hidden_regression", cfg.hidden_regression),
                         ("hidden_tomography", cfg.hidden_tomography)):
        if not hidden or any(h < 1 for h in hidden):
            bad(f"readout.{name}", "needs positive layer sizes")
    if not cfg.lambda_grid or any(v < 0 for v in cfg.lambda_grid):
        bad("readout.lambda_grid", "needs non-negative penalties")
    if cfg.tomography_loss not in LOSS_CHOICES:
        bad("readout.tomography_loss", f"must be one of {LOSS_CHOICES}")
    if cfg.huber_delta <= 0:
        bad("readout.huber_delta", "must be > 0")
    if cfg.grid_size < 2:
        bad("tomography.grid_size", "must be >= 2")
    if cfg.extent <= 0:
        bad("tomography.extent", "must be > 0")
    if cfg.cutoff < 4:
        bad("tomography.cutoff", "must be >= 4")
    if cfg.sweep_axis not in AXIS_CHOICES:
        bad("sweep.axis", f"must be one of {AXIS_CHOICES}")
    if not cfg.sweep_values:
        bad("sweep.values", "needs at least one value")
    if cfg.sweep_repeats < 1:
        bad("sweep.repeats", "must be >= 1")
    return cfg


def parse_config_text(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    values = {}
    for section in parser.sections():
        if section not in _SECTION_ORDER:
            raise ConfigError("unknown section", key=section)
        for key, raw in parser.items(section):
            schema = _SCHEMA.get((section, key))
            if schema is None:
                raise ConfigError("unknown key", key=f"{section}.{key}")
            attr, convert = schema
            try:
                values[attr] = convert(raw)
            except ValueError as exc:
                raise ConfigError(str(exc), key=f"{section}.{key}") from exc
    if "task" not in values:
        raise ConfigError("missing required key", key="experiment.task")
    return _validate(ExperimentConfig(**values))


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text())


def serialize_config(cfg: ExperimentConfig, include_output: bool = True) -> str:
    """Canonical INI form.  include_output=False omits the output directory,
    which is an invocation detail rather than part of the experiment identity."""
    by_section: dict[str, list[tuple[str, str]]] = {s: [] for s in _SECTION_ORDER}
    for (section, key), (attr, _) in _SCHEMA.items():
        if not include_output and attr == "output":
            continue
        by_section[section].append((key, _fmt(getattr(cfg, attr))))
    buf = io.StringIO()
    for section in _SECTION_ORDER:
        buf.write(f"[{section}]\n")
        for key, value in by_section[section]:
            buf.write(f"{key} = {value}\n")
        buf.write("\n")
    return buf.getvalue()


def with_overrides(cfg: ExperimentConfig, seed=None, output=None) -> ExperimentConfig:
    updates = {}
    if seed is not None:
        updates["seed"] = int(seed)
    if output is not None:
        updates["output"] = str(output)
    return _validate(replace(cfg, **updates)) if updates else cfg
