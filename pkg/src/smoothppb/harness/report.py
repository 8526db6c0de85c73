"""Report files for a simulation study.

``metrics.csv``       one row per method
``replicates.csv``    per-replicate MSE estimates, bandwidths and intervals
``selected_h.csv``    selected constants for data-driven methods
``risk_curves.csv``   mean estimated risk per grid constant (double bootstrap)
``manifest.json``     config, seed and library versions for replay
``report.json``       everything above in one document (``json`` format)
``timing.json``       wall-clock seconds per phase

All files except ``timing.json`` are a deterministic function of the config.
Floats are written with ``repr`` so they parse back exactly.
"""
from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from .study import CI_TYPES, StudyReport

FORMATS = ("csv", "json")


def metric_columns() -> list[str]:
    cols = ["method", "type", "mse_true", "mean_v", "bias_pct", "rrmse_pct"]
    for ci in CI_TYPES:
        cols += [f"{ci}_L_pct", f"{ci}_U_pct", f"{ci}_two_tail_pct", f"{ci}_mean_length",
                 f"{ci}_L_in_band", f"{ci}_U_in_band", f"{ci}_two_tail_in_band"]
    cols += ["selected_C_median", "selected_C_mean", "empty_redraws"]
    return cols


def _f(x) -> str:
    return repr(float(x))


def _in_band(value: float, band) -> int:
    return int(band[0] <= value <= band[1])


def metric_rows(report: StudyReport) -> list[dict]:
    rows = []
    for m in report.methods:
        row = {
            "method": m.label,
            "type": m.type,
            "mse_true": _f(m.mse_true),
            "mean_v": _f(m.mean_v),
            "bias_pct": _f(m.bias_pct),
            "rrmse_pct": _f(m.rrmse_pct),
        }
        for ci in CI_TYPES:
            L, U, two = m.coverage[ci]
            row.update({
                f"{ci}_L_pct": _f(L),
                f"{ci}_U_pct": _f(U),
                f"{ci}_two_tail_pct": _f(two),
                f"{ci}_mean_length": _f(m.mean_ci_length[ci]),
                f"{ci}_L_in_band": _in_band(L, report.bands["one_tail"]),
                f"{ci}_U_in_band": _in_band(U, report.bands["one_tail"]),
                f"{ci}_two_tail_in_band": _in_band(two, report.bands["two_tail"]),
            })
        sel = m.selected_constants
        row["selected_C_median"] = "" if sel is None else _f(sel["median"])
        row["selected_C_mean"] = "" if sel is None else _f(sel["mean"])
        row["empty_redraws"] = m.empty_redraws
        rows.append(row)
    return rows


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def manifest(report: StudyReport) -> dict:
    return {
        "config": report.config.to_dict(),
        "seed": report.config.seed,
        "N": report.N,
        "versions": {
            "smoothppb": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


def _replicate_rows(report: StudyReport) -> list[dict]:
    rows = []
    for res in report.replicates:
        for o in res.outcomes:
            row = {
                "replicate": res.index,
                "method": o.label,
                "n_sample": res.n_sample,
                "theta_hat": _f(res.theta_hat),
                "v_hat": _f(o.v_hat),
                "h": _f(o.h),
                "constant": _f(o.constant),
            }
            for ci in CI_TYPES:
                row[f"{ci}_lo"], row[f"{ci}_hi"] = _f(o.intervals[ci][0]), _f(o.intervals[ci][1])
            row["empty_redraws"] = o.empty_redraws
            rows.append(row)
    return rows


REPLICATE_COLUMNS = ["replicate", "method", "n_sample", "theta_hat", "v_hat", "h", "constant",
                     "normal_lo", "normal_hi", "basic_lo", "basic_hi", "empty_redraws"]


def emit_report(report: StudyReport, out_dir, formats=("csv",)) -> list[Path]:
    """Write the report files into ``out_dir`` and return their paths."""
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown report formats {sorted(unknown)}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written = []

    def target(name):
        path = out / name
        written.append(path)
        return path

    try:
        _write_csv(target("metrics.csv"), metric_columns(), metric_rows(report))
        _write_csv(target("replicates.csv"), REPLICATE_COLUMNS, _replicate_rows(report))
        selecting = {m.label for m in report.methods if m.type in ("BOOT", "PLUG-IN")}
        sel_rows = [
            {"replicate": res.index, "method": o.label, "constant": _f(o.constant), "h": _f(o.h)}
            for res in report.replicates for o in res.outcomes if o.label in selecting
        ]
        _write_csv(target("selected_h.csv"), ["replicate", "method", "constant", "h"], sel_rows)
        if report.risk_curves:
            rows = [
                {"method": label, "constant": _f(c), "mean_risk": _f(r), "mean_v_star": _f(v)}
                for label, curve in report.risk_curves.items()
                for c, r, v in zip(curve["constants"], curve["mean_risk"], curve["mean_v_star"])
            ]
            _write_csv(target("risk_curves.csv"), ["method", "constant", "mean_risk", "mean_v_star"], rows)
        target("manifest.json").write_text(json.dumps(manifest(report), indent=2, sort_keys=True) + "\n")
        if "json" in formats:
            doc = {
                "manifest": manifest(report),
                "xi": report.xi,
                "mse_true": report.mse_true,
                "bands": {k: list(v) for k, v in report.bands.items()},
                "metrics": metric_rows(report),
                "risk_curves": {
                    label: {k: np.asarray(v).tolist() for k, v in curve.items()}
                    for label, curve in report.risk_curves.items()
                },
            }
            target("report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        target("timing.json").write_text(json.dumps(report.timing, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing report into {out}: {exc}") from exc
    return written


def read_metrics(path) -> list[dict]:
    """Parse ``metrics.csv`` back into typed rows."""
    rows = []
    with Path(path).open(newline="") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for key, value in raw.items():
                if key in ("method", "type"):
                    row[key] = value
                elif value == "":
                    row[key] = None
                elif key.endswith("in_band") or key == "empty_redraws":
                    row[key] = int(value)
                else:
                    row[key] = float(value)
            rows.append(row)
    return rows
