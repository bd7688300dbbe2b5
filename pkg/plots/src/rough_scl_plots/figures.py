"""Figure rendering for rough-scl outputs.

Three figure kinds:

* ``snapshot`` -- solution profiles u(x) from a ``snapshots.csv`` table
  (columns ``t,x1,u``), one line per time stamp;
* ``series``   -- named series from a suite-report JSON or a series CSV,
  annotated with the least-squares slope of the first series;
* ``loglog``   -- the same on log-log axes, slope fitted in log space.

Slopes are annotated with two decimals so they can be compared against the
suite's reported metrics verbatim.  Rendering is deterministic: fixed
figure geometry, no timestamps in the layout.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "rough-scl-plots"  # stable element ids

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["FigureSpec", "RenderResult", "SchemaError", "render"]

_KINDS = ("snapshot", "series", "loglog")
_SPEC_KEYS = {
    "kind", "inputs", "output", "x", "y", "xlabel", "ylabel", "title",
    "times",
}


class SchemaError(ValueError):
    """Spec or input file does not match the expected schema."""


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: input files, figure kind, labels, output file."""

    kind: str
    inputs: tuple
    output: str
    x: str | None = None
    y: tuple = ()
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    times: tuple = ()

    @staticmethod
    def from_json(path) -> "FigureSpec":
        with open(path) as fh:
            raw = json.load(fh)
        unknown = set(raw) - _SPEC_KEYS
        if unknown:
            raise SchemaError(f"unknown spec key '{sorted(unknown)[0]}'")
        for key in ("kind", "inputs", "output"):
            if key not in raw:
                raise SchemaError(f"spec is missing '{key}'")
        if raw["kind"] not in _KINDS:
            raise SchemaError(
                f"kind '{raw['kind']}' not one of {list(_KINDS)}"
            )
        return FigureSpec(
            kind=raw["kind"],
            inputs=tuple(raw["inputs"]),
            output=raw["output"],
            x=raw.get("x"),
            y=tuple(raw.get("y", ())),
            xlabel=raw.get("xlabel", ""),
            ylabel=raw.get("ylabel", ""),
            title=raw.get("title", ""),
            times=tuple(raw.get("times", ())),
        )


@dataclass
class RenderResult:
    """Output path plus the quantities stamped onto the figure."""

    path: str
    slope: float | None = None
    n_lines: int = 0
    annotations: list = field(default_factory=list)


def _read_csv_columns(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    cols = {h: [] for h in header}
    for r in rows[1:]:
        if not r:
            continue
        for h, v in zip(header, r):
            cols[h].append(float(v) if v != "" else np.nan)
    return {h: np.asarray(v) for h, v in cols.items()}


def _load_series(path) -> dict:
    p = Path(path)
    if p.suffix == ".json":
        with open(p) as fh:
            rep = json.load(fh)
        if "series" not in rep:
            raise SchemaError(f"{path}: report has no 'series' block")
        return {k: np.asarray(v, dtype=float) for k, v in rep["series"].items()
                if _numeric(v)}
    return _read_csv_columns(p)


def _numeric(values) -> bool:
    try:
        np.asarray(values, dtype=float)
        return True
    except (TypeError, ValueError):
        return False


def _pick_columns(data: dict, spec: FigureSpec, path):
    names = sorted(data)
    if not names:
        raise SchemaError(f"{path}: no numeric series found")
    xname = spec.x or ("t" if "t" in data else names[0])
    if xname not in data:
        raise SchemaError(f"{path}: column '{xname}' not found (have {names})")
    ynames = list(spec.y) if spec.y else [n for n in names if n != xname]
    for n in ynames:
        if n not in data:
            raise SchemaError(f"{path}: column '{n}' not found (have {names})")
    return xname, ynames


def _fit_slope(x, y, loglog: bool):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if loglog:
        keep = (x > 0) & (y > 0)
        x, y = np.log(x[keep]), np.log(y[keep])
    keep = np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size < 2 or np.ptp(x) == 0:
        return None
    return float(np.polyfit(x, y, 1)[0])


def _new_axes(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(6.0, 4.0), dpi=120)
    ax.set_xlabel(spec.xlabel or (spec.x or ""))
    ax.set_ylabel(spec.ylabel)
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, spec: FigureSpec):
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    kwargs = {}
    if out.suffix.lower() == ".svg":
        kwargs["metadata"] = {"Date": None}  # reproducible bytes
    fig.savefig(out, **kwargs)
    plt.close(fig)
    return str(out)


def _render_snapshot(spec: FigureSpec) -> RenderResult:
    data = _read_csv_columns(spec.inputs[0])
    for col in ("t", "x1", "u"):
        if col not in data:
            raise SchemaError(
                f"{spec.inputs[0]}: column '{col}' not found "
                f"(have {sorted(data)})"
            )
    fig, ax = _new_axes(spec)
    ts = np.unique(data["t"])
    wanted = np.asarray(spec.times, dtype=float) if spec.times else ts
    n = 0
    for t in ts:
        if not np.any(np.isclose(wanted, t)):
            continue
        sel = np.isclose(data["t"], t)
        shade = 0.25 + 0.75 * (t - ts[0]) / max(ts[-1] - ts[0], 1e-300)
        ax.plot(data["x1"][sel], data["u"][sel],
                color=plt.cm.viridis(1.0 - shade), lw=1.2,
                label=f"t={t:.3f}" if len(wanted) <= 6 else None)
        n += 1
    if n and len(wanted) <= 6:
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel(spec.xlabel or "x")
    ax.set_ylabel(spec.ylabel or "u")
    return RenderResult(_save(fig, spec), None, n)


def _render_series(spec: FigureSpec, loglog: bool) -> RenderResult:
    data = _load_series(spec.inputs[0])
    xname, ynames = _pick_columns(data, spec, spec.inputs[0])
    fig, ax = _new_axes(spec)
    ax.set_xlabel(spec.xlabel or xname)
    slope = None
    n = 0
    annotations = []
    for yname in ynames:
        x = data[xname]
        y = data[yname]
        if x.size != y.size:
            raise SchemaError(
                f"{spec.inputs[0]}: column '{yname}' has length {y.size}, "
                f"'{xname}' has {x.size}"
            )
        if x.size == 0:
            continue
        if loglog:
            keep = (x > 0) & (y > 0)
            if not keep.any():
                continue
            ax.loglog(x[keep], y[keep], "o-", lw=1.2, ms=4, label=yname)
        else:
            ax.plot(x, y, "o-", lw=1.2, ms=4, label=yname)
        if slope is None:
            slope = _fit_slope(x, y, loglog)
        n += 1
    if slope is not None:
        text = f"slope={slope:.2f}"
        annotations.append(text)
        ax.text(0.04, 0.05, text, transform=ax.transAxes, fontsize=10,
                bbox={"boxstyle": "round", "fc": "white", "alpha": 0.8})
    if n:
        ax.legend(loc="best", fontsize=8)
    return RenderResult(_save(fig, spec), slope, n, annotations)


def render(spec: FigureSpec) -> RenderResult:
    """Render one figure; returns the output path and stamped slope."""
    if spec.kind not in _KINDS:
        raise SchemaError(f"kind '{spec.kind}' not one of {list(_KINDS)}")
    if not spec.inputs:
        raise SchemaError("spec has no inputs")
    for p in spec.inputs:
        if not Path(p).exists():
            raise SchemaError(f"input file '{p}' does not exist")
    if spec.kind == "snapshot":
        return _render_snapshot(spec)
    return _render_series(spec, loglog=(spec.kind == "loglog"))
