"""Render run-directory artifacts into publication-style figures.

Four figure kinds: confusion-matrix heatmaps, regression prediction-vs-target
scatter, target/reconstruction Wigner pairs with a difference panel, and
sweep curves with error bars.  Rendering is deterministic (fixed backend,
fonts, dpi, and svg hash salt) and never mutates its inputs.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams.update({
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "svg.hashsalt": "qrc-figures",
})

import matplotlib.pyplot as plt
import numpy as np

# series styling: network readout blue circles, linear baseline orange
# squares, Kerr-free control grey circles
SERIES_STYLE = {
    "mlp": {"color": "#1f77b4", "marker": "o", "label": "network readout"},
    "linear": {"color": "#ff7f0e", "marker": "s", "label": "linear readout"},
    "mlp_u0": {"color": "#888888", "marker": "o", "label": "network readout (U=0)"},
}
SWEEP_SERIES = ("mlp", "linear", "mlp_u0")


class FigureKind(enum.Enum):
    CONFUSION = "confusion"
    REGRESSION_SCATTER = "regression_scatter"
    WIGNER_PAIR = "wigner_pair"
    SWEEP_CURVES = "sweep_curves"


@dataclass
class FigureJob:
    kind: FigureKind
    inputs: dict
    output: Path
    title: str = ""
    dpi: int = 150
    fmt: str = "png"


class SchemaError(ValueError):
    """An input file does not match the expected column layout."""


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty file")
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


def _require_columns(path: Path, header: list[str], needed: list[str]):
    for column in needed:
        if column not in header:
            raise SchemaError(f"{path}: missing column {column!r}")


def _read_wigner(path: Path) -> tuple[np.ndarray, float]:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != "wigner-grid/1":
        raise SchemaError(f"{path}: not a wigner-grid file")
    m = int(payload["m"])
    values = np.array([float(v) for v in payload["values"]]).reshape(m, m)
    return values, float(payload["extent"])


def _save(fig, job: FigureJob):
    job.output.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Date": None} if job.fmt == "svg" else None
    fig.savefig(job.output, format=job.fmt, dpi=job.dpi, metadata=metadata)
    plt.close(fig)


def _render_confusion(job: FigureJob) -> dict:
    path = Path(job.inputs["table"])
    header, rows = _read_csv(path)
    _require_columns(path, header, ["true_class"])
    pred_cols = [h for h in header if h.startswith("pred_")]
    if not pred_cols:
        raise SchemaError(f"{path}: missing column 'pred_*'")
    matrix = np.array([[int(r[header.index(c)]) for c in pred_cols] for r in rows])

    fig, ax = plt.subplots(figsize=(3.4, 3.0))
    im = ax.imshow(matrix, cmap="Blues")
    for i in range(matrix.shape[0]):
        for j in range(matrix.shape[1]):
            ax.text(j, i, str(matrix[i, j]), ha="center", va="center",
                    color="black" if matrix[i, j] < matrix.max() * 0.6 else "white")
    labels = [f"C{k + 1}" for k in range(matrix.shape[0])]
    ax.set_xticks(range(matrix.shape[1]), labels)
    ax.set_yticks(range(matrix.shape[0]), labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    accuracy = float(np.trace(matrix)) / max(matrix.sum(), 1)
    ax.set_title(job.title or f"accuracy {accuracy:.3f}")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    _save(fig, job)
    return {"accuracy": accuracy, "total": int(matrix.sum())}


def _render_regression_scatter(job: FigureJob) -> dict:
    fig, ax = plt.subplots(figsize=(3.6, 3.2))
    lo, hi = np.inf, -np.inf
    plotted = []
    missing = []
    for series, path in job.inputs.items():
        path = Path(path)
        if not path.exists():
            missing.append(series)
            continue
        header, rows = _read_csv(path)
        _require_columns(path, header, ["target", "prediction"])
        t = np.array([float(r[header.index("target")]) for r in rows])
        p = np.array([float(r[header.index("prediction")]) for r in rows])
        style = SERIES_STYLE.get(series, {"color": "k", "marker": "."})
        ax.scatter(t, p, s=12, alpha=0.75, color=style["color"],
                   marker=style["marker"], label=style.get("label", series))
        lo = min(lo, t.min(), p.min())
        hi = max(hi, t.max(), p.max())
        plotted.append(series)
    if not plotted:
        raise SchemaError("regression scatter: no prediction tables found")
    pad = 0.05 * (hi - lo if hi > lo else 1.0)
    span = (lo - pad, hi + pad)
    ax.plot(span, span, color="#bcbd22", lw=1.5, label="ideal")
    ax.set_xlim(span)
    ax.set_ylim(span)
    ax.set_xlabel("target phase")
    ax.set_ylabel("predicted phase")
    if missing:
        ax.annotate("missing: " + ", ".join(missing), xy=(0.02, 0.98),
                    xycoords="axes fraction", va="top", fontsize=7, color="red")
    ax.legend(loc="lower right", fontsize=7)
    ax.set_title(job.title or "prediction vs target")
    fig.tight_layout()
    _save(fig, job)
    return {"series": plotted, "missing": missing}


def _render_wigner_pair(job: FigureJob) -> dict:
    target, extent = _read_wigner(Path(job.inputs["target"]))
    recon, extent_r = _read_wigner(Path(job.inputs["reconstruction"]))
    if target.shape != recon.shape:
        raise SchemaError("wigner pair: grid sizes differ")
    diff = recon - target
    max_abs_diff = float(np.max(np.abs(diff)))
    bound = [-extent, extent, -extent, extent]
    scale = max(float(np.max(np.abs(target))), float(np.max(np.abs(recon))), 1e-12)

    fig, axes = plt.subplots(1, 3, figsize=(8.4, 2.8))
    titles = ["target", "reconstruction", f"difference (max |d| = {max_abs_diff:.3g})"]
    for ax, data, title in zip(axes, [target, recon, diff], titles):
        vmax = scale if title != titles[2] else max(max_abs_diff, 1e-12)
        im = ax.imshow(data, origin="lower", extent=bound, cmap="RdBu_r",
                       vmin=-vmax, vmax=vmax)
        ax.set_title(title, fontsize=8)
        ax.set_xlabel("x")
        ax.set_ylabel("p")
        fig.colorbar(im, ax=ax, shrink=0.8)
    if job.title:
        fig.suptitle(job.title, fontsize=9)
    fig.tight_layout()
    _save(fig, job)
    return {"max_abs_diff": max_abs_diff}


def _render_sweep_curves(job: FigureJob) -> dict:
    path = Path(job.inputs["table"])
    header, rows = _read_csv(path)
    _require_columns(path, header, ["axis", "value", "repeat", "readout", "metric"])
    col = {name: header.index(name) for name in header}
    by_axis: dict[str, dict[str, dict[float, list[float]]]] = {}
    for r in rows:
        axis = r[col["axis"]]
        if axis in ("none", ""):
            continue
        metric = float(r[col["metric"]])
        if not np.isfinite(metric):
            continue
        by_axis.setdefault(axis, {}).setdefault(r[col["readout"]], {}) \
            .setdefault(float(r[col["value"]]), []).append(metric)
    if not by_axis:
        raise SchemaError(f"{path}: no sweep rows (axis column all 'none')")

    axis_name = job.inputs.get("axis") or sorted(by_axis)[0]
    series = by_axis.get(axis_name, {})
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    missing = [s for s in SWEEP_SERIES if s not in series]
    for name in SWEEP_SERIES:
        if name not in series:
            continue
        values = sorted(series[name])
        means = np.array([np.mean(series[name][v]) for v in values])
        stds = np.array([np.std(series[name][v]) for v in values])
        style = SERIES_STYLE[name]
        ax.errorbar(values, means, yerr=stds, color=style["color"],
                    marker=style["marker"], capsize=3, lw=1.2, ms=4,
                    label=style["label"])
    xlabel = "Kerr strength U" if axis_name == "kerr" else "lattice size N"
    ax.set_xlabel(xlabel)
    ax.set_ylabel(job.inputs.get("metric_label", "metric"))
    if missing:
        ax.annotate("missing: " + ", ".join(missing), xy=(0.02, 0.02),
                    xycoords="axes fraction", fontsize=7, color="red")
    ax.legend(fontsize=7)
    ax.set_title(job.title or f"sweep over {xlabel}")
    fig.tight_layout()
    _save(fig, job)
    return {"axis": axis_name, "missing": missing,
            "series": sorted(series)}


_RENDERERS = {
    FigureKind.CONFUSION: _render_confusion,
    FigureKind.REGRESSION_SCATTER: _render_regression_scatter,
    FigureKind.WIGNER_PAIR: _render_wigner_pair,
    FigureKind.SWEEP_CURVES: _render_sweep_curves,
}


def render(job: FigureJob) -> dict:
    """Render one job; returns renderer-specific summary info."""
    return _RENDERERS[job.kind](job)


# ---------------------------------------------------------------------------
# job discovery over a run directory
# ---------------------------------------------------------------------------

def _rep_dirs(run_dir: Path):
    for rep in sorted(run_dir.rglob("rep000")):
        if rep.is_dir():
            yield rep


def discover_jobs(run_dir: Path, out_dir: Path | None = None,
                  fmt: str = "png") -> list[FigureJob]:
    """Build the renderable jobs for whatever artifacts the run contains."""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir else run_dir / "figures"
    jobs: list[FigureJob] = []

    for rep in _rep_dirs(run_dir):
        tag = rep.parent.name if rep.parent != run_dir else "run"
        for table in sorted(rep.glob("confusion_*.csv")):
            readout = table.stem.replace("confusion_", "")
            jobs.append(FigureJob(
                kind=FigureKind.CONFUSION, inputs={"table": table},
                output=out_dir / f"{tag}_confusion_{readout}.{fmt}",
                title=f"{readout} readout", fmt=fmt))
        predictions = {p.stem.replace("predictions_", ""): p
                       for p in sorted(rep.glob("predictions_*.csv"))}
        if predictions:
            header, _ = _read_csv(next(iter(predictions.values())))
            if "prediction" in header:
                jobs.append(FigureJob(
                    kind=FigureKind.REGRESSION_SCATTER, inputs=predictions,
                    output=out_dir / f"{tag}_regression_scatter.{fmt}", fmt=fmt))
        for target in sorted(rep.glob("wigner_target_*.json")):
            index = target.stem.split("_")[-1]
            for recon in sorted(rep.glob(f"wigner_pred_*_{index}.json")):
                readout = recon.stem.replace("wigner_pred_", "").rsplit("_", 1)[0]
                jobs.append(FigureJob(
                    kind=FigureKind.WIGNER_PAIR,
                    inputs={"target": target, "reconstruction": recon},
                    output=out_dir / f"{tag}_wigner_{readout}_{index}.{fmt}",
                    title=f"{readout} readout", fmt=fmt))

    sweep_table = run_dir / "sweep.csv"
    if sweep_table.exists():
        header, rows = _read_csv(sweep_table)
        axes = {r[header.index("axis")] for r in rows} - {"none", ""}
        for axis in sorted(axes):
            jobs.append(FigureJob(
                kind=FigureKind.SWEEP_CURVES,
                inputs={"table": sweep_table, "axis": axis},
                output=out_dir / f"sweep_{axis}.{fmt}", fmt=fmt))
    return jobs
