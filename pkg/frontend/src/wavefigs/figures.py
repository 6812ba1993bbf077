"""Publication-style figures from simulation CSV output.

Consumes only the simulator's external CSV interfaces: the trajectory
schema (t, E, scriptE, cbar_bound, normU, norm_ut, ahalf_u, psi, k_t,
tau_t, delayed_term_norm, envelope_r2), the convergence table
(eps, sup_diff), and the sweep table (param, fitted_rate, ...).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

LOG_FLOOR = 1e-16

KINDS = ("decay", "envelope-overlay", "convergence", "sweep")

TRAJECTORY_COLUMNS = {
    "decay": ("t", "E", "normU"),
    "envelope-overlay": ("t", "E", "normU", "envelope_r2"),
}


class FigureError(ValueError):
    """Bad figure specification or nonconforming input CSV."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list
    out: str
    title: str | None = None
    dpi: int = 150

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}; "
                              f"choose from {', '.join(KINDS)}")
        if not self.inputs:
            raise FigureError("at least one input CSV is required")


def read_table(path):
    """CSV as a dict of columns keyed by header name.

    Columns whose every cell parses as a float become float arrays; the
    rest (e.g. a status column) are kept as lists of strings.
    """
    p = Path(path)
    if not p.exists():
        raise FigureError(f"input CSV not found: {path}")
    with open(p, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise FigureError(f"{path}: no data rows")
    header, body = rows[0], rows[1:]
    if any(len(row) != len(header) for row in body):
        raise FigureError(f"{path}: ragged rows")
    table = {}
    for i, name in enumerate(header):
        cells = [row[i] for row in body]
        try:
            table[name] = np.array([float(x) for x in cells])
        except ValueError:
            table[name] = cells
    return table


def require_columns(table, columns, path):
    """Check the required columns exist and parsed as numeric data."""
    for name in columns:
        if name not in table:
            raise FigureError(f"{path}: missing required column '{name}'")
        if not isinstance(table[name], np.ndarray):
            raise FigureError(
                f"{path}: malformed numeric value in column '{name}'")


def clamped(y):
    """Clamp values <= 0 to the log floor; also return the clamp mask."""
    mask = y <= 0.0
    return np.maximum(y, LOG_FLOOR), mask


def fit_rate(t, y):
    """Log-linear least-squares decay rate of y over [t_max/2, t_max].

    Mirrors the simulator CLI's fit (same window, same estimator) so the
    annotated slope agrees with the reported rate.
    """
    tmax = float(t[-1])
    sel = (t >= tmax / 2.0) & (t <= tmax)
    if sel.sum() < 10 or np.any(y[sel] <= 0.0):
        return None
    slope, _ = np.polyfit(t[sel], np.log(y[sel]), 1)
    return float(-slope)


def _plot_log_series(ax, t, y, label, color):
    yy, mask = clamped(y)
    ax.semilogy(t, yy, label=label, color=color, lw=1.2)
    if mask.any():
        ax.semilogy(t[mask], yy[mask], linestyle="none", marker="v",
                    color=color, ms=4, label=f"{label} (clamped)")


def _render_decay(spec, ax, overlay_envelope):
    table = read_table(spec.inputs[0])
    kind = "envelope-overlay" if overlay_envelope else "decay"
    require_columns(table, TRAJECTORY_COLUMNS[kind], spec.inputs[0])
    t = table["t"]
    _plot_log_series(ax, t, table["normU"], r"$\|U(t)\|$", "tab:blue")
    _plot_log_series(ax, t, table["E"], r"$E(t)$", "tab:orange")
    if overlay_envelope:
        env, _ = clamped(table["envelope_r2"])
        ax.semilogy(t, env, "--", color="tab:red", lw=1.2,
                    label="certified envelope ($r_2$)")
    info = {}
    rate = fit_rate(t, table["normU"])
    if rate is not None:
        info["fitted_rate"] = rate
        info["annotation"] = f"fitted rate = {rate:.3g}"
        ax.annotate(info["annotation"], xy=(0.98, 0.95),
                    xycoords="axes fraction", ha="right", va="top",
                    fontsize=9)
    ax.set_xlabel("t")
    ax.set_ylabel("value (log scale)")
    ax.legend(loc="lower left", fontsize=8)
    return info


def _render_convergence(spec, ax):
    info = {"sup_diffs": []}
    for path in spec.inputs:
        table = read_table(path)
        require_columns(table, ("eps", "sup_diff"), path)
        eps, _ = clamped(table["eps"])
        sup, _ = clamped(table["sup_diff"])
        order = np.argsort(eps)
        ax.loglog(eps[order], sup[order], "o-", lw=1.2,
                  label=Path(path).stem)
        info["sup_diffs"].append([list(eps[order]), list(sup[order])])
    ax.set_xlabel(r"delay shift $\varepsilon$")
    ax.set_ylabel(r"$\sup_t |\,\|U_\varepsilon\| - \|U\|\,|$")
    ax.legend(fontsize=8)
    return info


def _render_sweep(spec, ax):
    table = read_table(spec.inputs[0])
    header = list(table.keys())
    param = header[0]
    require_columns(table, (param, "fitted_rate"), spec.inputs[0])
    x = table[param]
    ax.plot(x, table["fitted_rate"], "o-", lw=1.2, label="fitted decay rate")
    ax.axhline(0.0, color="gray", lw=0.8, ls=":")
    if isinstance(table.get("rho_margin"), np.ndarray):
        finite = np.isfinite(table["rho_margin"])
        certified = finite & (table["rho_margin"] >= 0.0)
        if certified.any():
            ax.plot(x[certified], table["fitted_rate"][certified],
                    linestyle="none", marker="s", mfc="none",
                    color="tab:green", ms=9, label="certified")
    ax.set_xlabel(param)
    ax.set_ylabel("fitted decay rate")
    ax.legend(fontsize=8)
    return {"param": param}


def render(spec):
    """Render one figure; returns a small info dict (fit annotations etc.)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        if spec.kind in ("decay", "envelope-overlay"):
            info = _render_decay(spec, ax, spec.kind == "envelope-overlay")
        elif spec.kind == "convergence":
            info = _render_convergence(spec, ax)
        else:
            info = _render_sweep(spec, ax)
        if spec.title:
            ax.set_title(spec.title)
        out = Path(spec.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=spec.dpi, metadata={"Software": "wavefigs"})
    finally:
        plt.close(fig)
    info["out"] = str(spec.out)
    return info
