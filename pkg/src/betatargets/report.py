"""Writing report bundles: JSON or CSV tables plus matplotlib figures."""
from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams.update({
    "figure.figsize": (6, 4),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
})


def checks_csv(bundle) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "status", "measured"])
    for c in bundle.checks:
        writer.writerow([c.name, c.status, json.dumps(c.measured, sort_keys=True)])
    return buf.getvalue()


def table_csv(rows: list) -> str:
    buf = io.StringIO()
    keys = []
    for row in rows:
        keys.extend(k for k in row if k not in keys)
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


def write_bundle(bundle, out: Path, fmt: str = "json", figures: bool = True) -> list:
    """Write ``report.json`` (timestamp kept in ``run_info.json``), CSV tables and figures.

    ``fmt`` picks the primary listing of checks: ``checks.csv`` for csv, otherwise only the JSON.
    Data tables are always written as CSV for external plotting.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    (out / "report.json").write_text(bundle.to_json() + "\n")
    written.append(out / "report.json")
    info = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"), "python": platform.python_version()}
    (out / "run_info.json").write_text(json.dumps(info, indent=1) + "\n")
    if fmt == "csv":
        (out / "checks.csv").write_text(checks_csv(bundle))
        written.append(out / "checks.csv")
    for name, rows in bundle.tables.items():
        if rows:
            path = out / f"{_safe(name)}.csv"
            path.write_text(table_csv(rows))
            written.append(path)
    if figures:
        written.extend(render_figures(bundle.tables, out))
    return written


def render_figures(tables: dict, out: Path) -> list:
    written = []
    for name, rows in tables.items():
        if not rows:
            continue
        key = name.rsplit(".", 1)[-1]
        fig = _figure_for(key, rows)
        if fig is None:
            continue
        path = out / f"{_safe(name)}.png"
        fig.savefig(path, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def _figure_for(key: str, rows: list):
    if key == "series_terms":
        fig, ax = plt.subplots()
        ns = [r["n"] for r in rows]
        ax.plot(ns, [r["log_term"] for r in rows], "o-", ms=3, label=r"$\log(s_n\prod\beta_i^n)$")
        if "log_term_asymptotic" in rows[0]:
            ax.plot(ns, [r["log_term_asymptotic"] for r in rows], "--", label="asymptotic form")
        ax.set_xlabel("$n$")
        ax.set_ylabel("log series term")
        ax.legend()
        return fig
    if key.startswith("counts_"):
        # divide by beta^n (the lower Renyi bound) so the sandwich is visible
        fig, ax = plt.subplots()
        ns = [r["n"] for r in rows]
        norm = [float(r["renyi_lo"]) for r in rows]
        scaled = lambda col: [float(r[col]) / v for r, v in zip(rows, norm)]
        ax.plot(ns, scaled("sigma"), "o", ms=3, label=r"$\#\Sigma^n/\beta^n$")
        ax.plot(ns, scaled("lambda"), "s", ms=3, label=r"$\#\Lambda^n/\beta^n$")
        ax.plot(ns, scaled("renyi_hi"), "-", lw=0.8, label=r"upper bound $\beta/(\beta-1)$")
        ax.axhline(1, lw=0.8, color="k", label="lower bound 1")
        ax.plot(ns, scaled("li_lower"), ":", lw=0.8, label="full-word bound")
        ax.set_xlabel("$n$")
        ax.xaxis.get_major_locator().set_params(integer=True)
        ax.set_ylim(bottom=0)
        ax.set_title(rf"$\beta = {rows[0]['beta']}$")
        ax.legend(fontsize=8)
        return fig
    if key == "frames":
        pts = [(r["n"], r["log_omega"]) for r in rows if r["in_P"] and r["log_omega"] is not None]
        if not pts:
            return None
        fig, ax = plt.subplots()
        ax.plot(*zip(*pts), ".", ms=3)
        ax.set_xlabel("$n$ in $P$")
        ax.set_ylabel(r"$\log\omega_n$")
        return fig
    if key == "ball_bound":
        fig, ax = plt.subplots()
        ns = [r["n"] for r in rows]
        ax.plot(ns, [r["sup_ratio"] for r in rows], "o-")
        ax.xaxis.get_major_locator().set_params(integer=True)
        ax.set_ylim(0, 1.2 * max(r["sup_ratio"] for r in rows))
        ax.set_xlabel("$n$")
        ax.set_ylabel(r"$\sup\ \mu(B)\,\omega_n^d / f(r)$")
        return fig
    if key == "hyperboloid":
        fig, ax = plt.subplots()
        ds = [r["delta"] for r in rows]
        ax.loglog(ds, [r["s_volume"] for r in rows], "o-", label=r"$\sum |B|^s$")
        ref = rows[0]["s_volume"]
        ax.loglog(ds, [ref * math.sqrt(d / ds[0]) for d in ds], "--", label=r"slope $1/2$")
        ax.set_xlabel(r"$\delta$")
        ax.legend()
        return fig
    if key == "measure":
        fig, ax = plt.subplots()
        labels = [r["quantity"] for r in rows]
        ax.bar(labels, [r["value"] for r in rows], yerr=[r["radius"] for r in rows], capsize=4)
        ax.set_ylim(0, 1)
        ax.set_ylabel("Lebesgue measure")
        return fig
    if key == "w2star_grid":
        ts = list(dict.fromkeys(r["t"] for r in rows))
        fs = list(dict.fromkeys(r["f"] for r in rows))
        codes = {"MeasureZero": 0, "FullMeasure": 1, "HypothesisFailed": 2}
        grid = [[codes.get(next(r["w2star"] for r in rows if r["t"] == t and r["f"] == f), 2) for t in ts]
                for f in fs]
        fig, ax = plt.subplots()
        ax.imshow(grid, cmap=matplotlib.colors.ListedColormap(["#d9d9d9", "#3b75af", "#e8a33d"]), vmin=0, vmax=2,
                  aspect="auto")
        for i, f in enumerate(fs):
            for j, t in enumerate(ts):
                r = next(r for r in rows if r["t"] == t and r["f"] == f)
                ax.text(j, i, "=" if r["w2star"] == r["rectangle"] else "≠", ha="center", va="center", fontsize=8)
        ax.set_xticks(range(len(ts)), ts)
        ax.set_yticks(range(len(fs)), fs)
        ax.set_xlabel("$t$")
        ax.set_title("grey: zero, blue: full, orange: hypothesis failed")
        ax.grid(False)
        return fig
    if key == "cylinders":
        fig, ax = plt.subplots(figsize=(7, 1.6))
        for r in rows:
            ax.barh(0, r["length"], left=r["left"], color="C0" if r["is_full"] else "C3", edgecolor="white",
                    lw=0.3)
        ax.set_yticks([])
        ax.set_xlim(0, 1)
        ax.set_title("cylinders (full in blue)")
        return fig
    return None
