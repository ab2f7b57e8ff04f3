"""Feature extraction from perturbed and reference occupation records.

The perturbation induced by an injected state is isolated by subtracting the
reference (no-input) record, averaged inside fixed time bins over an analysis
window, and concatenated node-major into one feature vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .reservoir import ResponseRecord

DEFAULT_N_BINS = 10
DEFAULT_WINDOW = (10.0, 25.0)
# Absolute slack when matching recorded times against window/bin boundaries.
TIME_ATOL = 1e-9


@dataclass(frozen=True)
class CorrectedResponse:
    """Background-corrected node signals with combined standard errors."""

    times: np.ndarray       # (T,)
    deltas: np.ndarray      # (N, T)
    standard_errors: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.deltas.shape[0]


@dataclass(frozen=True)
class FeatureVector:
    """Binned node responses, ordered [node1 bins..., node2 bins..., ...]."""

    values: np.ndarray
    n_nodes: int
    n_bins: int
    window: tuple[float, float]
    bin_width: float

    def __post_init__(self):
        if self.values.shape != (self.n_nodes * self.n_bins,):
            raise InvalidArgumentError("feature length must equal n_nodes * n_bins")


@dataclass(frozen=True)
class FeatureScaler:
    """Per-component affine standardizer fitted on training features."""

    mean: np.ndarray
    scale: np.ndarray  # 1.0 where the training variance was degenerate


def subtract_reference(perturbed: ResponseRecord,
                       reference: ResponseRecord) -> CorrectedResponse:
    """Pointwise difference of occupations; standard errors add in quadrature."""
    if perturbed.times.shape != reference.times.shape \
            or not np.allclose(perturbed.times, reference.times, atol=TIME_ATOL):
        raise InvalidArgumentError("perturbed and reference records use different time grids")
    if perturbed.occupations.shape != reference.occupations.shape:
        raise InvalidArgumentError("perturbed and reference records have different node counts")
    return CorrectedResponse(
        times=perturbed.times.copy(),
        deltas=perturbed.occupations - reference.occupations,
        standard_errors=np.sqrt(perturbed.standard_errors ** 2
                                + reference.standard_errors ** 2),
    )


def bin_features(corrected: CorrectedResponse, window: tuple[float, float] = DEFAULT_WINDOW,
                 n_bins: int = DEFAULT_N_BINS) -> FeatureVector:
    """Average the corrected signals over n_bins equal bins spanning window.

    Bin k collects samples with t in [t_start + k*dt, t_start + (k+1)*dt); a
    sample landing exactly on the window end is assigned to the last bin.
    """
    t_start, t_end = window
    if n_bins < 1:
        raise InvalidArgumentError("n_bins must be >= 1")
    if t_end <= t_start:
        raise InvalidArgumentError("window end must exceed window start")
    times = corrected.times
    if t_start < times[0] - TIME_ATOL or t_end > times[-1] + TIME_ATOL:
        raise InvalidArgumentError("window must lie within the recorded times")
    mask = (times >= t_start - TIME_ATOL) & (times <= t_end + TIME_ATOL)
    t_sel = times[mask]
    values = corrected.deltas[:, mask]
    width = (t_end - t_start) / n_bins
    idx = np.floor((t_sel - t_start + TIME_ATOL) / width).astype(int)
    idx = np.clip(idx, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    if np.any(counts == 0):
        raise InvalidArgumentError(
            f"window/bin combination leaves empty bins (counts={counts.tolist()})")
    sums = np.zeros((corrected.n_nodes, n_bins))
    for k in range(n_bins):
        sums[:, k] = values[:, idx == k].sum(axis=1)
    binned = sums / counts
    return FeatureVector(values=binned.reshape(-1), n_nodes=corrected.n_nodes,
                         n_bins=n_bins, window=(float(t_start), float(t_end)),
                         bin_width=width)


def fit_standardizer(train_features: list[FeatureVector]) -> FeatureScaler:
    """Zero-mean unit-variance scaler; degenerate components stay unscaled."""
    if len(train_features) < 2:
        raise InvalidArgumentError("need at least two training vectors to fit a scaler")
    matrix = np.stack([fv.values for fv in train_features])
    mean = matrix.mean(axis=0)
    var = matrix.var(axis=0)
    scale = np.where(var < 1e-12, 1.0, np.sqrt(var))
    return FeatureScaler(mean=mean, scale=scale)


def apply_standardizer(scaler: FeatureScaler, fv: FeatureVector) -> FeatureVector:
    if scaler.mean.shape != fv.values.shape:
        raise InvalidArgumentError("scaler and feature vector have different lengths")
    values = (fv.values - scaler.mean) / scaler.scale
    return FeatureVector(values=values, n_nodes=fv.n_nodes, n_bins=fv.n_bins,
                         window=fv.window, bin_width=fv.bin_width)


def standardize_matrix(scaler: FeatureScaler, matrix: np.ndarray) -> np.ndarray:
    """Vectorized standardizer for stacked feature rows."""
    return (matrix - scaler.mean) / scaler.scale
