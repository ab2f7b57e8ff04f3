"""Run-directory persistence: CSV tables, JSON sidecars, model checkpoints.

All writers are byte-deterministic: floats use 17 significant digits (exact
double round-trip), JSON keys are sorted, newlines are '\n', and no file
carries timestamps.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
from pathlib import Path

import numpy as np

from . import learn
from .bench import FittedReadout, Readout, Task
from .errors import InvalidArgumentError
from .features import FeatureScaler
from .fock import WignerGrid
from .reservoir import ResponseRecord
from .states import StateKind, StateSpec

FORMAT_VERSION = 1
CHECKPOINT_MAGIC = b"QRCK"


def fmt(value) -> str:
    """17-significant-digit decimal form; round-trips any finite double."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_text(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def write_csv(path: Path, header: list[str], rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(cell if isinstance(cell, str) else fmt(cell)
                           for cell in row) + "\n")
    write_text(path, buf.getvalue())


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise InvalidArgumentError(f"{path} is empty")
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def write_json(path: Path, payload: dict):
    write_text(path, json.dumps(payload, sort_keys=True, indent=1,
                                ensure_ascii=True) + "\n")


def read_json(path: Path) -> dict:
    return json.loads(Path(path).read_text())


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# response records
# ---------------------------------------------------------------------------

def write_response(path: Path, record: ResponseRecord):
    """Columnar table (time, node, mean, se) plus a small JSON sidecar."""
    rows = []
    n_nodes = record.occupations.shape[0]
    for ti, t in enumerate(record.times):
        for node in range(n_nodes):
            rows.append((t, node, record.occupations[node, ti],
                         record.standard_errors[node, ti]))
    write_csv(path, ["time", "node", "mean", "se"], rows)
    write_json(Path(str(path) + ".meta.json"),
               {"n_trajectories": record.n_trajectories,
                "diverged_count": record.diverged_count})


def read_response(path: Path) -> ResponseRecord:
    header, rows = read_csv(path)
    if header != ["time", "node", "mean", "se"]:
        raise InvalidArgumentError(f"{path}: unexpected columns {header}")
    meta = read_json(Path(str(path) + ".meta.json"))
    times = sorted({float(r[0]) for r in rows})
    n_nodes = max(int(r[1]) for r in rows) + 1
    index = {t: i for i, t in enumerate(times)}
    occ = np.zeros((n_nodes, len(times)))
    se = np.zeros((n_nodes, len(times)))
    for r in rows:
        ti = index[float(r[0])]
        node = int(r[1])
        occ[node, ti] = float(r[2])
        se[node, ti] = float(r[3])
    return ResponseRecord(times=np.array(times), occupations=occ,
                          standard_errors=se,
                          n_trajectories=meta["n_trajectories"],
                          diverged_count=meta["diverged_count"])


# ---------------------------------------------------------------------------
# datasets and features
# ---------------------------------------------------------------------------

def spec_to_dict(spec: StateSpec) -> dict:
    return {"kind": spec.kind.value,
            "amplitude_mag": float(spec.amplitude_mag),
            "amplitude_phase": float(spec.amplitude_phase),
            "squeeze_mag": float(spec.squeeze_mag),
            "squeeze_phase": float(spec.squeeze_phase),
            "cat_phase": float(spec.cat_phase)}


def spec_from_dict(d: dict) -> StateSpec:
    return StateSpec(StateKind(d["kind"]), d["amplitude_mag"], d["amplitude_phase"],
                     d["squeeze_mag"], d["squeeze_phase"], d["cat_phase"])


def write_dataset(directory: Path, dataset) -> None:
    directory = Path(directory)
    payload = {
        "task": dataset.task.value,
        "seed": dataset.seed,
        "specs": [spec_to_dict(s) for s in dataset.specs],
        "train_indices": dataset.train_indices.tolist(),
        "test_indices": dataset.test_indices.tolist(),
    }
    if dataset.task is Task.TOMOGRAPHY:
        payload["grid"] = {"size": dataset.grid.size,
                           "extent": dataset.grid.extent,
                           "cutoff": dataset.grid.cutoff}
        payload["targets_file"] = "targets.csv"
        n_cells = dataset.labels.shape[1]
        header = ["sample"] + [f"w{i:04d}" for i in range(n_cells)]
        rows = [(i, *dataset.labels[i]) for i in range(len(dataset.specs))]
        write_csv(directory / "targets.csv", header, rows)
    else:
        payload["labels"] = [fmt(v) for v in dataset.labels]
    write_json(directory / "dataset.json", payload)


def read_dataset(directory: Path):
    from .bench import Dataset, TomographyGrid

    directory = Path(directory)
    payload = read_json(directory / "dataset.json")
    task = Task(payload["task"])
    specs = [spec_from_dict(d) for d in payload["specs"]]
    grid = None
    if task is Task.TOMOGRAPHY:
        grid = TomographyGrid(**payload["grid"])
        _, rows = read_csv(directory / payload["targets_file"])
        labels = np.array([[float(v) for v in r[1:]] for r in rows])
    elif task is Task.CLASSIFICATION:
        labels = np.array([int(v) for v in payload["labels"]])
    else:
        labels = np.array([float(v) for v in payload["labels"]])
    return Dataset(task=task, specs=specs, labels=labels,
                   train_indices=np.array(payload["train_indices"], dtype=int),
                   test_indices=np.array(payload["test_indices"], dtype=int),
                   seed=payload["seed"], grid=grid)


def write_features(directory: Path, matrix: np.ndarray, scaler: FeatureScaler,
                   n_nodes: int, n_bins: int, window) -> None:
    directory = Path(directory)
    header = ["sample"] + [f"f{i:03d}" for i in range(matrix.shape[1])]
    rows = [(i, *matrix[i]) for i in range(matrix.shape[0])]
    write_csv(directory / "features.csv", header, rows)
    write_json(directory / "features.meta.json", {
        "window_start": window[0], "window_end": window[1],
        "n_bins": n_bins, "n_nodes": n_nodes,
        "scaler_mean": [fmt(v) for v in scaler.mean],
        "scaler_scale": [fmt(v) for v in scaler.scale],
    })


def read_features(directory: Path):
    directory = Path(directory)
    _, rows = read_csv(directory / "features.csv")
    matrix = np.array([[float(v) for v in r[1:]] for r in rows])
    meta = read_json(directory / "features.meta.json")
    scaler = FeatureScaler(mean=np.array([float(v) for v in meta["scaler_mean"]]),
                           scale=np.array([float(v) for v in meta["scaler_scale"]]))
    return matrix, scaler, meta


# ---------------------------------------------------------------------------
# Wigner grids
# ---------------------------------------------------------------------------

def write_wigner(path: Path, grid: WignerGrid):
    """Flat row-major array with an {m, extent} header."""
    write_json(path, {"format": "wigner-grid/1", "m": grid.size,
                      "extent": grid.extent,
                      "values": [fmt(v) for v in grid.values.reshape(-1)]})


def read_wigner(path: Path) -> WignerGrid:
    payload = read_json(path)
    if payload.get("format") != "wigner-grid/1":
        raise InvalidArgumentError(f"{path} is not a wigner grid file")
    m = int(payload["m"])
    values = np.array([float(v) for v in payload["values"]]).reshape(m, m)
    step = 2.0 * float(payload["extent"]) / m
    return WignerGrid(size=m, extent=float(payload["extent"]), values=values,
                      cell_area=step * step)


# ---------------------------------------------------------------------------
# model checkpoints
# ---------------------------------------------------------------------------

def _array_entries(arrays: dict[str, np.ndarray]):
    return [{"name": k, "shape": list(v.shape)} for k, v in arrays.items()]


def write_checkpoint(path: Path, fitted: FittedReadout, scaler: FeatureScaler):
    """Self-describing container: JSON header + little-endian double arrays."""
    model = fitted.model
    arrays: dict[str, np.ndarray] = {
        "scaler_mean": scaler.mean, "scaler_scale": scaler.scale}
    if fitted.target_mean is not None:
        arrays["target_mean"] = fitted.target_mean
        arrays["target_scale"] = fitted.target_scale
    if isinstance(model, learn.Mlp):
        head = {"model": "mlp", "layer_sizes": model.layer_sizes,
                "hidden_activation": model.hidden_activation.value,
                "output_activation": model.output_activation.value}
        for i, w in enumerate(model.weights):
            arrays[f"weight_{i}"] = w
        for i, b in enumerate(model.biases):
            arrays[f"bias_{i}"] = b
    else:
        head = {"model": model.kind.value,
                "regularization": model.regularization,
                "converged": bool(model.converged)}
        arrays["weights"] = model.weights
        arrays["bias"] = model.bias
    head.update({"version": FORMAT_VERSION, "task": fitted.task.value,
                 "readout": fitted.readout.value,
                 "arrays": _array_entries(arrays)})
    header = json.dumps(head, sort_keys=True).encode()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for value in arrays.values():
            fh.write(np.ascontiguousarray(value, dtype="<f8").tobytes())


def read_checkpoint(path: Path) -> tuple[FittedReadout, FeatureScaler]:
    with open(path, "rb") as fh:
        if fh.read(4) != CHECKPOINT_MAGIC:
            raise InvalidArgumentError(f"{path} is not a checkpoint file")
        (header_len,) = struct.unpack("<I", fh.read(4))
        head = json.loads(fh.read(header_len).decode())
        arrays = {}
        for entry in head["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * count)
            arrays[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    if head["version"] != FORMAT_VERSION:
        raise InvalidArgumentError(f"unsupported checkpoint version {head['version']}")
    task = Task(head["task"])
    readout = Readout(head["readout"])
    if head["model"] == "mlp":
        sizes = head["layer_sizes"]
        weights = [arrays[f"weight_{i}"] for i in range(len(sizes) - 1)]
        biases = [arrays[f"bias_{i}"] for i in range(len(sizes) - 1)]
        model = learn.Mlp(sizes, weights, biases,
                          learn.Activation(head["hidden_activation"]),
                          learn.Activation(head["output_activation"]))
    else:
        model = learn.LinearModel(weights=arrays["weights"], bias=arrays["bias"],
                                  regularization=head["regularization"],
                                  kind=learn.LinearKind(head["model"]),
                                  converged=head["converged"])
    fitted = FittedReadout(task, readout, model,
                           arrays.get("target_mean"), arrays.get("target_scale"))
    scaler = FeatureScaler(mean=arrays["scaler_mean"], scale=arrays["scaler_scale"])
    return fitted, scaler
