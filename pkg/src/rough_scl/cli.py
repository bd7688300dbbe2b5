"""The ``rough-scl`` experiment runner.

Commands:

* ``simulate <config.json>``   -- one pathwise solve; writes snapshot and
  ledger CSVs plus a manifest with the config hash.
* ``validate <suite> [config]`` -- run one suite (or ``all``) and write
  JSON reports; exit 0 iff every suite passed, 3 on suite failure.
* ``lift <path.csv>``          -- level-2 lift of a CSV path; prints the
  Hoelder norm, the Chen-consistency error and the Levy area.
* ``plot-data <report.json>``  -- re-export a report's series as CSV files
  for the plotting component.

Exit codes: 0 success, 1 configuration/input error, 2 solver failure,
3 suite failure.  Dotted flags like ``--driver.seed=7`` override config
keys; ``--threads`` (or ROUGH_SCL_THREADS) caps suite workers.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .characteristics import BlowUpError, forward_flow
from .config import (
    DEFAULT_CONFIG,
    ConfigError,
    config_hash,
    labeled_rng,
    merge_config,
    validate_config,
)
from .kinetic import DomainError, Grid, solve_pathwise
from .roughpath import RoughPathError, holder_norm, lift_pwl, load_path_csv
from .validation import SUITES, build_driver, build_flux, build_grid, build_initial

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_SUITE = 3


def _err(msg: str) -> None:
    print(f"rough-scl: {msg}", file=sys.stderr)


def _load_config(path: str | None, overrides: list[str], with_defaults: bool = True) -> dict:
    cfg = {}
    if path is not None:
        with open(path) as fh:
            cfg = json.load(fh)
    if with_defaults:
        cfg = merge_config(DEFAULT_CONFIG, cfg)
    for ov in overrides:
        key, _, raw = ov.lstrip("-").partition("=")
        if not _:
            raise ConfigError(f"override '{ov}' is not of the form --key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override '{key}': '{p}' is not a section")
        node[parts[-1]] = value
    validate_config(cfg)
    return cfg


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_snapshots_csv(path: Path, snaps, grid: Grid) -> None:
    centers = grid.centers_mesh().reshape(-1, grid.N)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i + 1}" for i in range(grid.N)] + ["u"])
        for s in snaps:
            flat = s.u.ravel()
            for row, val in zip(centers, flat):
                w.writerow([_fmt(s.t)] + [_fmt(c) for c in row] + [_fmt(val)])


def _write_ledger_csv(path: Path, ledger) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "t", "total_mass", "clamp_residual"])
        for step, t, mass, clamp in ledger.csv_rows():
            w.writerow([step, _fmt(t), _fmt(mass), _fmt(clamp)])


def _manifest(cfg: dict) -> dict:
    return {
        "config": cfg,
        "config_hash": config_hash(cfg),
        "seed": int(cfg.get("seed", 0)),
        "versions": {
            "rough_scl": __version__,
            "numpy": np.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
    }


def _ensure_xi_range(cfg: dict, flux, z, u0, grid: Grid) -> Grid:
    """Pad the xi-range by the sampled characteristic excursion.

    100 characteristics seeded across the support estimate
    ``max |Xi - xi|``; the range is grown (never shrunk) to bracket
    ``[min u0, max u0]`` plus ``xi_margin_factor`` times the excursion.
    """
    factor = float(cfg["grid"].get("xi_margin_factor", 1.5))
    rng = labeled_rng(int(cfg.get("seed", 0)), "xi-margin")
    box = np.asarray(cfg["grid"]["box"], dtype=float)
    if box.ndim == 1:
        box = box[None, :]
    n_probe = 100
    y = rng.uniform(box[:, 0], box[:, 1], size=(n_probe, flux.N))
    lo0, hi0 = float(u0.u.min()), float(u0.u.max())
    eta = rng.uniform(min(lo0, 0.0), max(hi0, 0.0), size=n_probe)
    try:
        res = forward_flow(flux, z, float(z.times[0]), (y, eta),
                           float(z.times[-1]), steps_per_segment=8, record=True)
        exc = max(
            float(np.abs(ee - eta).max()) for _, _, ee in res.history
        )
    except BlowUpError:
        exc = 0.5 * (hi0 - lo0 + 1.0)
    pad = factor * exc + 2 * grid.dxi
    lo = min(grid.xi_edges[0], lo0 - pad, -2 * grid.dxi)
    hi = max(grid.xi_edges[-1], hi0 + pad, 2 * grid.dxi)
    if lo < grid.xi_edges[0] - 1e-12 or hi > grid.xi_edges[-1] + 1e-12:
        return Grid.create(box, grid.shape, (lo, hi),
                           max(grid.nxi, int(np.ceil((hi - lo) / grid.dxi))))
    return grid


def cmd_simulate(args) -> int:
    try:
        cfg = _load_config(args.config, args.overrides)
        flux = build_flux(cfg)
        z = build_driver(cfg)
        grid = build_grid(cfg)
        u0 = build_initial(cfg, grid)
        grid = _ensure_xi_range(cfg, flux, z, u0, grid)
        u0 = build_initial(cfg, grid)
    except (ConfigError, RoughPathError, ValueError, OSError, json.JSONDecodeError) as exc:
        _err(f"configuration error: {exc}")
        return EXIT_CONFIG
    try:
        snaps, ledger = solve_pathwise(
            u0, flux, z, grid, T=float(cfg["time"]["T"]),
            cfl=float(cfg["time"]["cfl"]),
        )
    except (DomainError, BlowUpError, RuntimeError) as exc:
        _err(f"solver error: {exc}")
        return EXIT_SOLVER
    outdir = Path(cfg.get("output", {}).get("dir", "rough_scl_out"))
    outdir.mkdir(parents=True, exist_ok=True)
    _write_snapshots_csv(outdir / "snapshots.csv", snaps, grid)
    _write_ledger_csv(outdir / "ledger.csv", ledger)
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(_manifest(cfg), fh, sort_keys=True, indent=1)
        fh.write("\n")
    _err(f"wrote {outdir}/snapshots.csv, ledger.csv, manifest.json")
    return EXIT_OK


def cmd_validate(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        _err(f"unknown suite '{unknown[0]}' (have {sorted(SUITES)} or 'all')")
        return EXIT_CONFIG
    try:
        # suites merge their own defaults; only user keys pass through here
        cfg = _load_config(args.config, args.overrides, with_defaults=False)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        _err(f"configuration error: {exc}")
        return EXIT_CONFIG
    threads = args.threads or int(os.environ.get("ROUGH_SCL_THREADS", "1"))

    def _run(name):
        return name, SUITES[name](cfg)

    reports = {}
    try:
        if threads > 1 and len(names) > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
                for name, rep in pool.map(_run, names):
                    reports[name] = rep
        else:
            for name in names:
                reports[name] = SUITES[name](cfg)
    except ConfigError as exc:
        _err(f"configuration error: {exc}")
        return EXIT_CONFIG
    except (DomainError, BlowUpError, RuntimeError) as exc:
        _err(f"solver error: {exc}")
        return EXIT_SOLVER

    outdir = Path(cfg.get("output", {}).get("dir", "rough_scl_out"))
    outdir.mkdir(parents=True, exist_ok=True)
    all_pass = True
    for name in names:
        rep = reports[name]
        all_pass &= rep.passed
        path = outdir / f"report_{name}.json"
        with open(path, "w") as fh:
            json.dump(rep.to_json_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")
        _err(
            f"{name}: {'pass' if rep.passed else 'FAIL'} "
            f"({rep.timing_seconds:.1f}s) -> {path}"
        )
    return EXIT_OK if all_pass else EXIT_SUITE


def cmd_lift(args) -> int:
    try:
        path = load_path_csv(args.path)
        z = lift_pwl(path, level=2, alpha=args.alpha)
    except (RoughPathError, OSError) as exc:
        _err(f"input error: {exc}")
        return EXIT_CONFIG
    norm = holder_norm(z, args.alpha)
    chen = z.chen_defect()
    print(f"nodes: {z.n_nodes}  dims: {z.dims}")
    print(f"holder_norm(alpha={args.alpha}): {norm!r}")
    print(f"chen_max_error: {chen!r}")
    if z.dims >= 2:
        area = z.node(z.n_nodes - 1).levy_area()
        print(f"levy_area[0,1]: {float(area[0, 1])!r}")
    return EXIT_OK


def cmd_plot_data(args) -> int:
    try:
        with open(args.report) as fh:
            rep = json.load(fh)
        series = rep["series"]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        _err(f"input error: {exc}")
        return EXIT_CONFIG
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    suite = rep.get("suite", "series")
    written = []
    keys = sorted(series)
    if not keys:
        _err("report has no series")
        return EXIT_CONFIG
    length = max(len(series[k]) for k in keys)
    path = outdir / f"{suite}_series.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for i in range(length):
            w.writerow([
                series[k][i] if i < len(series[k]) else "" for k in keys
            ])
    written.append(str(path))
    _err(f"wrote {', '.join(written)}")
    return EXIT_OK


def _split_overrides(argv):
    # dotted-path config overrides: --section.key=value
    plain, overrides = [], []
    for a in argv:
        if a.startswith("--") and "=" in a and "." in a.split("=", 1)[0]:
            overrides.append(a)
        else:
            plain.append(a)
    return plain, overrides


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    plain, overrides = _split_overrides(argv)
    parser = argparse.ArgumentParser(
        prog="rough-scl",
        description="Pathwise rough conservation-law experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one pathwise solve")
    p.add_argument("config", nargs="?", default=None)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("validate", help="run validation suites")
    p.add_argument("suite")
    p.add_argument("config", nargs="?", default=None)
    p.add_argument("--threads", type=int, default=0)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("lift", help="lift a CSV path and print diagnostics")
    p.add_argument("path")
    p.add_argument("--alpha", type=float, default=0.5)
    p.set_defaults(fn=cmd_lift)

    p = sub.add_parser("plot-data", help="re-export report series as CSV")
    p.add_argument("report")
    p.add_argument("--outdir", "-o", default="rough_scl_out")
    p.set_defaults(fn=cmd_plot_data)

    try:
        args = parser.parse_args(plain)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    args.overrides = overrides
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
