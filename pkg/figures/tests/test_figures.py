"""Figure rendering over a synthetic run directory."""

import json
import math

import numpy as np
import pytest

from qrc_figures.cli import main
from qrc_figures.render import (FigureJob, FigureKind, SchemaError,
                                discover_jobs, render)


def fmt(x):
    return format(float(x), ".17g")


def write_wigner(path, values, extent=5.0):
    m = values.shape[0]
    payload = {"format": "wigner-grid/1", "m": m, "extent": extent,
               "values": [fmt(v) for v in values.reshape(-1)]}
    path.write_text(json.dumps(payload, sort_keys=True))


@pytest.fixture
def run_dir(tmp_path):
    rep = tmp_path / "rep000"
    rep.mkdir()
    (rep / "confusion_mlp.csv").write_text(
        "true_class,pred_0,pred_1,pred_2\n0,10,0,0\n1,0,8,2\n2,1,0,9\n")
    (rep / "confusion_linear.csv").write_text(
        "true_class,pred_0,pred_1,pred_2\n0,6,2,2\n1,3,5,2\n2,2,3,5\n")
    rng = np.random.default_rng(0)
    targets = rng.uniform(0, math.pi / 2, size=20)
    rows = ["sample,target,prediction"]
    rows += [f"{i},{fmt(t)},{fmt(t + 0.05 * rng.normal())}"
             for i, t in enumerate(targets)]
    (rep / "predictions_mlp.csv").write_text("\n".join(rows) + "\n")

    grid = rng.normal(size=(8, 8)) * 0.1
    write_wigner(rep / "wigner_target_0.json", grid)
    write_wigner(rep / "wigner_pred_mlp_0.json", grid + 0.02)

    sweep_rows = ["task,axis,value,repeat,readout,metric"]
    for value in (0.0, 0.02, 0.05):
        for rep_i in range(3):
            for readout, base in (("mlp", 0.9), ("linear", 0.7), ("mlp_u0", 0.5)):
                sweep_rows.append(
                    f"classification,kerr,{fmt(value)},{rep_i},{readout},"
                    f"{fmt(base + 0.05 * value + 0.01 * rep_i)}")
    (tmp_path / "sweep.csv").write_text("\n".join(sweep_rows) + "\n")
    return tmp_path


class TestRenderers:
    def test_confusion(self, run_dir, tmp_path):
        job = FigureJob(FigureKind.CONFUSION,
                        {"table": run_dir / "rep000" / "confusion_mlp.csv"},
                        tmp_path / "c.png")
        info = render(job)
        assert job.output.exists()
        assert info["accuracy"] == pytest.approx(27 / 30)

    def test_diagonal_confusion_reports_unit_accuracy(self, tmp_path):
        table = tmp_path / "conf.csv"
        table.write_text("true_class,pred_0,pred_1\n0,5,0\n1,0,5\n")
        info = render(FigureJob(FigureKind.CONFUSION, {"table": table},
                                tmp_path / "d.png"))
        assert info["accuracy"] == 1.0

    def test_regression_scatter_with_missing_series(self, run_dir, tmp_path):
        job = FigureJob(FigureKind.REGRESSION_SCATTER,
                        {"mlp": run_dir / "rep000" / "predictions_mlp.csv",
                         "linear": run_dir / "rep000" / "predictions_linear.csv"},
                        tmp_path / "r.png")
        info = render(job)
        assert info["series"] == ["mlp"]
        assert info["missing"] == ["linear"]

    def test_wigner_pair_difference(self, run_dir, tmp_path):
        job = FigureJob(FigureKind.WIGNER_PAIR,
                        {"target": run_dir / "rep000" / "wigner_target_0.json",
                         "reconstruction": run_dir / "rep000" / "wigner_pred_mlp_0.json"},
                        tmp_path / "w.png")
        info = render(job)
        assert info["max_abs_diff"] == pytest.approx(0.02)

    def test_identical_grids_give_zero_difference(self, run_dir, tmp_path):
        job = FigureJob(FigureKind.WIGNER_PAIR,
                        {"target": run_dir / "rep000" / "wigner_target_0.json",
                         "reconstruction": run_dir / "rep000" / "wigner_target_0.json"},
                        tmp_path / "w0.png")
        assert render(job)["max_abs_diff"] == 0.0

    def test_sweep_curves_all_series(self, run_dir, tmp_path):
        job = FigureJob(FigureKind.SWEEP_CURVES,
                        {"table": run_dir / "sweep.csv", "axis": "kerr"},
                        tmp_path / "s.png")
        info = render(job)
        assert info["missing"] == []
        assert set(info["series"]) == {"mlp", "linear", "mlp_u0"}

    def test_sweep_single_point_zero_error_bar(self, tmp_path):
        table = tmp_path / "sweep.csv"
        table.write_text("task,axis,value,repeat,readout,metric\n"
                         "classification,kerr,0.05,0,mlp,0.9\n")
        info = render(FigureJob(FigureKind.SWEEP_CURVES,
                                {"table": table, "axis": "kerr"},
                                tmp_path / "s1.png"))
        assert info["missing"] == ["linear", "mlp_u0"]

    def test_schema_mismatch_names_column(self, tmp_path):
        bad = tmp_path / "confusion_bad.csv"
        bad.write_text("wrong,cols\n1,2\n")
        with pytest.raises(SchemaError) as err:
            render(FigureJob(FigureKind.CONFUSION, {"table": bad},
                             tmp_path / "x.png"))
        assert "true_class" in str(err.value)


class TestDeterminismAndCli:
    def test_rerender_is_byte_stable(self, run_dir, tmp_path):
        job = FigureJob(FigureKind.CONFUSION,
                        {"table": run_dir / "rep000" / "confusion_mlp.csv"},
                        tmp_path / "a.png")
        render(job)
        first = job.output.read_bytes()
        render(job)
        assert job.output.read_bytes() == first

    def test_svg_rerender_is_byte_stable(self, run_dir, tmp_path):
        job = FigureJob(FigureKind.CONFUSION,
                        {"table": run_dir / "rep000" / "confusion_mlp.csv"},
                        tmp_path / "a.svg", fmt="svg")
        render(job)
        first = job.output.read_bytes()
        render(job)
        assert job.output.read_bytes() == first

    def test_inputs_not_mutated(self, run_dir, tmp_path):
        table = run_dir / "rep000" / "confusion_mlp.csv"
        before = table.read_bytes()
        render(FigureJob(FigureKind.CONFUSION, {"table": table}, tmp_path / "m.png"))
        assert table.read_bytes() == before

    def test_discovery_finds_all_kinds(self, run_dir):
        jobs = discover_jobs(run_dir)
        kinds = {j.kind for j in jobs}
        assert kinds == {FigureKind.CONFUSION, FigureKind.REGRESSION_SCATTER,
                         FigureKind.WIGNER_PAIR, FigureKind.SWEEP_CURVES}

    def test_cli_renders_everything(self, run_dir):
        assert main(["--run", str(run_dir)]) == 0
        figures = list((run_dir / "figures").glob("*.png"))
        assert len(figures) >= 4

    def test_cli_only_filter(self, run_dir):
        assert main(["--run", str(run_dir), "--only", "sweep_curves",
                     "--out", str(run_dir / "only")]) == 0
        files = list((run_dir / "only").iterdir())
        assert len(files) == 1 and "sweep" in files[0].name

    def test_cli_bad_dir(self, tmp_path):
        assert main(["--run", str(tmp_path / "missing")]) == 2
