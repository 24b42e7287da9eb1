"""Render experiment aggregate CSVs into the reference figure analogues.

Input schema (one file per algorithm arm):

    n,mse_Gamma,mse_phi,median_cum_regret,runs_ok

Kinds:
    loglog_mse      log-log MSE curve with fitted regression line (pick the
                    column with `column`; default mse_Gamma)
    loglog_regret   log-log median cumulative regret with fitted line
    trajectory      RMS exploration variance sqrt(mse_Gamma) over iterations,
                    one line per input file
    regret_compare  median cumulative regret over iterations, one line per
                    input file

Figures are deterministic: fixed size, fixed dpi, no timestamps.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import EmptyWindow, SchemaMismatch
from .slopes import DEFAULT_FIT_WINDOW, loglog_slope

AGGREGATE_COLUMNS = ["n", "mse_Gamma", "mse_phi", "median_cum_regret", "runs_ok"]

KINDS = ("loglog_mse", "loglog_regret", "trajectory", "regret_compare")

_FIGSIZE = (6.4, 4.8)
_DPI = 110


@dataclass
class FigureSpec:
    input_csv: Sequence[str]            # one file; compare kinds accept several
    kind: str
    output: str
    fit_window: tuple = DEFAULT_FIT_WINDOW
    column: str = "mse_Gamma"           # for loglog_mse

    def __post_init__(self):
        if isinstance(self.input_csv, (str, os.PathLike)):
            self.input_csv = [str(self.input_csv)]
        else:
            self.input_csv = [str(p) for p in self.input_csv]


def read_aggregate_csv(path: str) -> dict:
    """Read one aggregate CSV, enforcing the documented schema exactly."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != AGGREGATE_COLUMNS:
            raise SchemaMismatch(
                f"{path}: expected columns {AGGREGATE_COLUMNS}, got {header}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    cols = {name: np.array([float(r[i]) for r in rows])
            for i, name in enumerate(header)}
    return cols


@dataclass
class RenderResult:
    output: str
    slope: Optional[float] = None


def _label(path: str) -> str:
    base = os.path.basename(path)
    return base.replace("_aggregate.csv", "").replace(".csv", "")


def _fit_or_raise(n, v, window):
    in_window = (n >= window[0]) & (n <= window[1])
    if not np.any(in_window):
        raise EmptyWindow(f"no rows with n in [{window[0]}, {window[1]}]")
    return loglog_slope(n, v, window)


def render(spec: FigureSpec) -> RenderResult:
    """Emit the figure for `spec`; returns the fitted slope where applicable."""
    if spec.kind not in KINDS:
        raise SchemaMismatch(f"unknown figure kind {spec.kind!r}")
    data = [read_aggregate_csv(p) for p in spec.input_csv]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    slope = None
    try:
        if spec.kind in ("loglog_mse", "loglog_regret"):
            cols = data[0]
            col = spec.column if spec.kind == "loglog_mse" else "median_cum_regret"
            if col not in AGGREGATE_COLUMNS:
                raise SchemaMismatch(f"unknown column {col!r}")
            n, v = cols["n"], cols[col]
            slope, intercept, _ = _fit_or_raise(n, v, spec.fit_window)
            pos = (n > 0) & (v > 0)
            ax.loglog(n[pos], v[pos], lw=1.0, color="tab:blue", label=col)
            w = np.array([max(spec.fit_window[0], n[pos].min()),
                          min(spec.fit_window[1], n[pos].max())], dtype=float)
            ax.loglog(w, 10 ** (intercept + slope * np.log10(w)), "--",
                      color="tab:red", label=f"slope = {slope:.2f}")
            ax.set_ylabel(col)
        elif spec.kind == "trajectory":
            for path, cols in zip(spec.input_csv, data):
                ax.plot(cols["n"], np.sqrt(cols["mse_Gamma"]), lw=1.2,
                        label=_label(path))
            ax.set_xscale("log")
            ax.set_ylabel("rms exploration variance")
        else:  # regret_compare
            for path, cols in zip(spec.input_csv, data):
                ax.plot(cols["n"], cols["median_cum_regret"], lw=1.2,
                        label=_label(path))
            ax.set_ylabel("median cumulative regret")
        ax.set_xlabel("iteration")
        ax.legend(loc="best")
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        fig.savefig(spec.output, dpi=_DPI)
    finally:
        plt.close(fig)
    return RenderResult(output=spec.output, slope=slope)
