"""Vector-graphics plots of the ray and diamond curve dumps, with CSV twins.

Each figure is written as an SVG next to a CSV holding exactly the plotted
points, so a golden-report diff can check the numbers without parsing the
graphics.  Missing curve data is skipped with a warning, never an error.
"""
from __future__ import annotations

import csv
import os
import warnings

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _plot_rays(dump: dict, out_dir: str) -> list:
    eta, xi = dump["eta"], dump["xi"]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(eta, xi, lw=1.2)
    ax.set_xlabel("eta")
    ax.set_ylabel("xi")
    ax.set_title(dump.get("label", "light ray"))
    svg = os.path.join(out_dir, "rays.svg")
    fig.savefig(svg)
    plt.close(fig)
    csv_path = os.path.join(out_dir, "rays.csv")
    _write_csv(csv_path, ["eta", "xi"], zip(eta, xi))
    return [svg, csv_path]


def _plot_diamond(dump: dict, out_dir: str) -> list:
    box = dump["box"]
    curves = dump["curves"]
    (e_lo, e_hi), (x_lo, x_hi) = box["eta"], box["xi"]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot([x_lo, x_hi, x_hi, x_lo, x_lo],
            [e_lo, e_lo, e_hi, e_hi, e_lo], "k--", lw=1.0, label="analytic box")
    for pts in curves:
        xs = [p[0] for p in pts]
        es = [p[1] for p in pts]
        ax.plot(xs, es, lw=0.8, alpha=0.8)
    ax.set_xlabel("xi")
    ax.set_ylabel("eta")
    ax.set_title("causal diamond")
    ax.legend(loc="lower right", fontsize=8)
    svg = os.path.join(out_dir, "diamond.svg")
    fig.savefig(svg)
    plt.close(fig)
    rows = [["box", 0, x, e] for x, e in
            zip([x_lo, x_hi, x_hi, x_lo, x_lo], [e_lo, e_lo, e_hi, e_hi, e_lo])]
    for k, pts in enumerate(curves):
        rows.extend(["curve", k, p[0], p[1]] for p in pts)
    csv_path = os.path.join(out_dir, "diamond.csv")
    _write_csv(csv_path, ["kind", "index", "xi", "eta"], rows)
    return [svg, csv_path]


def emit_plots(report: dict, curves: dict, out_dir: str = "plots") -> list:
    """Write one SVG + CSV pair per available figure; returns written paths."""
    wanted = {"rays": _plot_rays, "diamond": _plot_diamond}
    available = {k: v for k, v in (curves or {}).items() if v}
    if not available:
        warnings.warn("no curve data in this run; nothing to plot")
        return []
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, plot_fn in wanted.items():
        if name not in available:
            warnings.warn(f"no {name!r} curve data in this run; skipping that figure")
            continue
        written.extend(plot_fn(available[name], out_dir))
    return written
