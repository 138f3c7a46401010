"""Command-line experiment harness.

Every run resolves its configuration (defaults < ``--config`` file < flags),
writes ``config.resolved.txt`` and ``summary.json`` into ``--out`` plus
mode-specific CSV and SVG files.  Outputs carry no timestamps, so equal
configurations give byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure (the
message names the dumped state).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import levelset, limit, optimizer, recovery, spectral
from .energy import EnergyParams, total_energy
from .strip import make_background, make_grid

__all__ = [
    "ExperimentConfig", "ConfigError", "NumericalFailure", "load_config", "run",
    "sweep_lambda", "emit_outputs", "svg_plot", "main", "RESULT_COLUMNS", "MODES",
]

MODES = ("energy", "minimize", "recovery", "limit", "levelset", "sweep", "oracle-check")
RESULT_COLUMNS = ("lambda", "epsilon", "exchange", "anisotropy", "stray", "total",
                  "E0_ref", "mean_n1")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    """Carries the path of the dumped state."""

    def __init__(self, message, dump=None):
        super().__init__(message if dump is None else f"{message} (state: {dump})")
        self.dump = dump


def _floats(text):
    return tuple(float(x) for x in str(text).replace(",", " ").split())


def _ints(text):
    return tuple(int(x) for x in str(text).replace(",", " ").split())


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved run configuration.

    Grid keys follow the strip model: ``ell`` is the ``x2`` period and the
    grid spans ``|x1| <= half_width`` with ``nx * ny`` nodes.
    ``lambdas`` is the sweep list; ``lam_max``/``lam_step`` set the
    ``limit`` table.  ``wall`` is ``straight``, ``zigzag`` or a CSV path;
    ``region`` is ``random``, ``annulus`` or a region CSV path.
    """

    mode: str = "energy"
    epsilon: float = 0.02
    lam: float = 1.0
    ell: float = 2.0
    nx: int = 256
    ny: int = 128
    half_width: float = 2.0
    seed: int = 0
    out: str = "out"
    max_iters: int = 2000
    tol: float | None = None
    rule: str = "bb"
    pad: int = 2
    amplitude: float = 0.15
    modes: tuple = (2,)
    lambdas: tuple = (0.25, 1.0, 4.0)
    lam_max: float = 4.0
    lam_step: float = 0.25
    workers: int = 1
    wall: str = "straight"
    region: str = "random"
    delta0: float = 0.2
    oracle_count: int = 20
    oracle_n: int = 64
    svg: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}; got {self.mode!r}")
        if not 0 < self.epsilon < 0.25:
            raise ConfigError(f"epsilon must lie in (0, 1/4), got {self.epsilon}")
        if not (self.lam >= 0 and all(x >= 0 for x in self.lambdas)):
            raise ConfigError("lambda values must be >= 0")
        if not (self.ell > 0 and self.half_width >= 2):
            raise ConfigError("need ell > 0 and half_width >= 2")
        for k in ("nx", "ny"):
            v = getattr(self, k)
            if v < 8 or v % 2:
                raise ConfigError(f"{k} must be an even integer >= 8, got {v}")
        if self.max_iters < 1 or (self.tol is not None and not self.tol > 0):
            raise ConfigError("need max_iters >= 1 and tol > 0")
        if self.rule not in ("armijo", "bb", "fixed"):
            raise ConfigError(f"unknown rule {self.rule!r}")
        if self.pad < 1 or self.workers < 1:
            raise ConfigError("pad and workers must be >= 1")
        if not (self.lam_step > 0 and self.lam_max >= 0):
            raise ConfigError("need lam_step > 0 and lam_max >= 0")
        if not self.delta0 > 0:
            raise ConfigError("delta0 must be positive")
        if self.oracle_count < 1 or self.oracle_n < 8 or self.oracle_n % 2:
            raise ConfigError("oracle_count >= 1 and even oracle_n >= 8 required")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")

    def items(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = " ".join(repr(x) for x in v)
            elif v is None:
                v = "none"
            yield f.name, v

    def as_dict(self):
        return {f.name: (list(getattr(self, f.name)) if isinstance(getattr(self, f.name), tuple)
                         else getattr(self, f.name)) for f in dataclasses.fields(self)}

    def echo(self):
        return "".join(f"{k}={v}\n" for k, v in self.items())

    def grid(self):
        return make_grid(self.ell, self.half_width, self.nx, self.ny)


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {
    "mode": str, "epsilon": float, "lam": float, "ell": float, "nx": int, "ny": int,
    "half_width": float, "seed": int, "out": str, "max_iters": int,
    "tol": lambda s: None if str(s).lower() == "none" else float(s),
    "rule": str, "pad": int, "amplitude": float, "modes": _ints, "lambdas": _floats,
    "lam_max": float, "lam_step": float, "workers": int, "wall": str, "region": str,
    "delta0": float, "oracle_count": int, "oracle_n": int, "svg": _bool,
}
_ALIASES = {"lambda": "lam", "half-width": "half_width", "max-iters": "max_iters"}


def _key(name):
    k = name.strip().lower()
    k = _ALIASES.get(k, k).replace("-", "_")
    if k not in _PARSERS:
        raise ConfigError(f"unknown configuration key {name!r}")
    return k


def _parse_values(pairs):
    out = {}
    for name, text in pairs:
        k = _key(name)
        try:
            out[k] = _PARSERS[k](text)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {name}: {text!r} ({exc})") from None
    return out


def load_config(path):
    """Read a ``key = value`` file; ``#`` starts a comment."""
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    pairs = []
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        if not k.strip():
            raise ConfigError(f"{path}:{no}: empty key")
        pairs.append((k, v.strip()))
    return _parse_values(pairs)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _argparser():
    p = _Parser(prog="chargedwall", description="Charged-wall experiments on a periodic strip.")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--config", help="key=value file; flags override its entries")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--ell", type=float)
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--half-width", dest="half_width", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="any other configuration key (repeatable)")
    return p


def resolve_config(argv):
    """Defaults, then the config file, then ``--set`` pairs, then flags."""
    ns = _argparser().parse_args(argv)
    values = load_config(ns.config) if ns.config else {}
    extra = []
    for item in ns.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        extra.append(tuple(item.split("=", 1)))
    values.update(_parse_values(extra))
    for k in ("mode", "epsilon", "lam", "ell", "nx", "ny", "half_width", "seed", "out",
              "max_iters", "tol"):
        v = getattr(ns, k)
        if v is not None:
            values[k] = v
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------- outputs

def _num(x):
    return repr(float(x)) if x is not None and math.isfinite(x) else "nan"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_results_csv(path, rows):
    """Rows are dicts holding at least `RESULT_COLUMNS`; missing values become nan."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            w.writerow([_num(r.get(c)) for c in RESULT_COLUMNS])


def svg_plot(series, xlabel, ylabel, title, desc="", width=480, height=360, equal=False):
    """Self-contained SVG line plot.

    ``series`` is a list of ``(label, x, y, style)`` with style ``"line"``,
    ``"dash"`` or ``"marker"``.  Non-finite points are skipped.
    """
    pts = [(np.asarray(x, float), np.asarray(y, float)) for _, x, y, _ in series]
    xs = np.concatenate([x[np.isfinite(x) & np.isfinite(y)] for x, y in pts])
    ys = np.concatenate([y[np.isfinite(x) & np.isfinite(y)] for x, y in pts])
    if xs.size == 0:
        xs = ys = np.array([0.0, 1.0])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    m = 50
    pw, ph = width - 2 * m, height - 2 * m
    if equal:
        s = min(pw / (x1 - x0), ph / (y1 - y0))
        sx = sy = s
    else:
        sx, sy = pw / (x1 - x0), ph / (y1 - y0)

    def X(v):
        return m + (v - x0) * sx

    def Y(v):
        return height - m - (v - y0) * sy

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f"<title>{title}</title>"]
    if desc:
        out.append(f"<desc>{desc}</desc>")
    out.append(f'<rect x="{m}" y="{m}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>')
    for v in np.linspace(x0, x1, 5):
        out.append(f'<text x="{X(v):.2f}" y="{height - m + 16}" font-size="10" '
                   f'text-anchor="middle">{v:.3g}</text>')
    for v in np.linspace(y0, y1, 5):
        out.append(f'<text x="{m - 4}" y="{Y(v) + 3:.2f}" font-size="10" '
                   f'text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{width / 2}" y="{height - 10}" font-size="12" '
               f'text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="14" y="{height / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {height / 2})">{ylabel}</text>')
    out.append(f'<text x="{width / 2}" y="{m - 14}" font-size="13" '
               f'text-anchor="middle">{title}</text>')
    for i, ((label, _, _, style), (x, y)) in enumerate(zip(series, pts)):
        c = colors[i % len(colors)]
        ok = np.isfinite(x) & np.isfinite(y)
        if style == "marker":
            for a, b in zip(x[ok], y[ok]):
                out.append(f'<circle cx="{X(a):.2f}" cy="{Y(b):.2f}" r="3" fill="{c}"/>')
        else:
            p = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(x[ok], y[ok]))
            dash = ' stroke-dasharray="5,3"' if style == "dash" else ""
            out.append(f'<polyline points="{p}" fill="none" stroke="{c}" stroke-width="1.5"{dash}/>')
        out.append(f'<text x="{width - m - 4}" y="{m + 14 + 14 * i}" font-size="11" '
                   f'text-anchor="end" fill="{c}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _write_text(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def emit_outputs(results, out, fmt="all", cfg=None, stem="results"):
    """Write result rows as CSV (`RESULT_COLUMNS`), a JSON summary and an
    energy-versus-lambda SVG with the ground-state overlay.

    ``fmt`` is ``"csv"``, ``"json"``, ``"svg"`` or ``"all"``.  Returns the
    written paths.
    """
    if fmt not in ("csv", "json", "svg", "all"):
        raise ValueError(f"unknown format {fmt!r}")
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc.strerror}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    paths = []
    if fmt in ("csv", "all"):
        p = os.path.join(out, f"{stem}.csv")
        write_results_csv(p, results)
        paths.append(p)
    if fmt in ("json", "all"):
        p = os.path.join(out, f"{stem}.json")
        doc = {"columns": list(RESULT_COLUMNS), "rows": [{c: r.get(c) for c in RESULT_COLUMNS}
                                                          for r in results]}
        if cfg is not None:
            doc["seed"] = cfg.seed
        write_json(p, doc)
        paths.append(p)
    if fmt in ("svg", "all") and results and (cfg is None or cfg.svg):
        ell = cfg.ell if cfg is not None else 1.0
        lam = np.array([r["lambda"] for r in results], float)
        fine = np.linspace(0, max(lam.max(), 1.0) * 1.05, 200)
        e0 = np.array([limit.ground_state_energy(x, ell) for x in fine])
        seed = "" if cfg is None else f"seed={cfg.seed}"
        svg = svg_plot([("e(lambda)", fine, e0, "dash"),
                        ("E_eps", lam, [r["total"] for r in results], "marker")],
                       "lambda", "energy", "energy vs lambda", desc=seed)
        p = os.path.join(out, f"{stem}_energy.svg")
        _write_text(p, svg)
        paths.append(p)
    return paths


# ---------------------------------------------------------------- modes

def _breakdown_row(br, e0, mean_n1):
    d = br.as_dict()
    return {"lambda": d["lambda"], "epsilon": d["epsilon"], "exchange": d["exchange"],
            "anisotropy": d["anisotropy"], "stray": d["stray"], "total": d["total"],
            "E0_ref": e0, "mean_n1": mean_n1}


def _mean_n1(fld):
    tr = optimizer.extract_wall(fld)
    return (optimizer.slope_stats(tr)["mean_n1"] if tr.valid else float("nan")), tr


def _initial(cfg, grid):
    try:
        return optimizer.initial_field(grid, cfg.epsilon, seed=cfg.seed,
                                       amplitude=cfg.amplitude, modes=cfg.modes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _wall_svg(trace, title, seed):
    ok = np.isfinite(trace.gamma)
    return svg_plot([("wall", trace.gamma[ok], trace.x2[ok], "line")], "x1", "x2", title,
                    desc=f"seed={seed}", equal=False)


def _minimize_one(cfg, lam, tag=None):
    """Minimise at one lambda; returns (row, trace, log)."""
    grid = cfg.grid()
    bg = make_background(grid)
    params = EnergyParams(cfg.epsilon, lam, cfg.pad)
    opts = optimizer.DescentOptions(max_iters=cfg.max_iters, tol=cfg.tol, rule=cfg.rule,
                                    seed=cfg.seed, dump_dir=cfg.out)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fld, br, log = optimizer.minimize(_initial(cfg, grid), bg, params, opts)
    n1, trace = _mean_n1(fld)
    row = _breakdown_row(br, limit.ground_state_energy(lam, cfg.ell), n1)
    row["iterations"] = len(log) - 1
    row["converged"] = log.converged
    return row, trace, log


def _sweep_worker(args):
    cfg, lam = args
    try:
        row, trace, log = _minimize_one(cfg, lam)
        return {"ok": True, "row": row, "gamma": trace.gamma, "x2": trace.x2, "log": log.rows,
                "converged": log.converged}
    except optimizer.DescentError as exc:
        return {"ok": False, "lambda": lam, "error": str(exc), "dump": exc.dump}


def sweep_lambda(cfg, lambdas=None):
    """Minimise the energy for every lambda in the list.

    Runs in a process pool when ``cfg.workers > 1``.  Returns
    ``(rows, failures, extras)``; failed lambdas are listed in
    ``failures`` and the remaining rows are still returned.
    """
    lambdas = tuple(cfg.lambdas if lambdas is None else lambdas)
    if not lambdas:
        raise ConfigError("the lambda list is empty")
    jobs = [(cfg, float(lam)) for lam in lambdas]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as ex:
            res = list(ex.map(_sweep_worker, jobs))
    else:
        res = [_sweep_worker(j) for j in jobs]
    rows = [r["row"] for r in res if r["ok"]]
    failures = [{k: r[k] for k in ("lambda", "error", "dump")} for r in res if not r["ok"]]
    extras = [r for r in res if r["ok"]]
    return rows, failures, extras


def _mode_energy(cfg):
    grid = cfg.grid()
    fld = _initial(cfg, grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        br = total_energy(fld, make_background(grid), EnergyParams(cfg.epsilon, cfg.lam, cfg.pad))
    n1, trace = _mean_n1(fld)
    row = _breakdown_row(br, limit.ground_state_energy(cfg.lam, cfg.ell), n1)
    emit_outputs([row], cfg.out, "csv", cfg, "energy")
    files = {"wall.svg": _wall_svg(trace, "initial wall", cfg.seed)} if cfg.svg else {}
    return {"energy": row}, files


def _mode_minimize(cfg):
    row, trace, log = _minimize_one(cfg, cfg.lam)
    emit_outputs([row], cfg.out, "csv", cfg, "minimize")
    lg = optimizer.IterationLog(log.rows, log.converged)
    optimizer.write_log_csv(os.path.join(cfg.out, "descent_log.csv"), lg)
    _write_wall_trace(os.path.join(cfg.out, "wall_trace.csv"), trace)
    totals = log.column("total")
    files = {"wall.svg": _wall_svg(trace, f"minimised wall, lambda={cfg.lam:g}", cfg.seed)} \
        if cfg.svg else {}
    return {"result": row, "monotone": bool(np.all(np.diff(totals) < 0))}, files


def _write_wall_trace(path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x2", "x1"])
        for a, b in zip(trace.x2, trace.gamma):
            w.writerow([_num(a), _num(b)])


def _recovery_wall(cfg):
    if cfg.wall == "straight":
        return limit.straight_wall(cfg.ell)
    if cfg.wall == "zigzag":
        if cfg.lam <= 1:
            raise ConfigError("wall=zigzag needs lambda > 1")
        base = limit.straight_wall(cfg.ell, -0.25 * math.sqrt(3) / 2)
        return limit.zigzag_refine(base, cfg.lam, k=1)
    try:
        return limit.read_wall_csv(cfg.wall, cfg.ell)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read wall {cfg.wall}: {exc}") from None


def _mode_recovery(cfg):
    wall = _recovery_wall(cfg)
    grid = cfg.grid()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = recovery.recovery_report(wall, cfg.lam, cfg.epsilon, grid, pad=cfg.pad)
    b = rep["E_eps_breakdown"]
    row = dict(b, E0_ref=rep["E0"], mean_n1=float(np.sum(np.abs(wall.normals[:, 0]) * wall.lengths)
                                                  / wall.lengths.sum()))
    emit_outputs([row], cfg.out, "csv", cfg, "recovery")
    limit.write_wall_csv(os.path.join(cfg.out, "wall.csv"), wall)
    files = {}
    if cfg.svg:
        v = wall.vertices
        files["wall.svg"] = svg_plot([("wall", v[:, 0], v[:, 1], "line")], "x1", "x2",
                                     "recovery wall", desc=f"seed={cfg.seed}")
    return {"recovery": rep}, files


def _mode_limit(cfg):
    n = int(round(cfg.lam_max / cfg.lam_step))
    lams = cfg.lam_step * np.arange(n + 1)
    vals = [limit.ground_state_energy(x, cfg.ell) for x in lams]
    with open(os.path.join(cfg.out, "limit.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "e"])
        for a, b in zip(lams, vals):
            w.writerow([_num(a), _num(b)])
    files = {}
    if cfg.svg:
        files["limit.svg"] = svg_plot([("e(lambda)", lams, vals, "line")], "lambda", "e",
                                      f"ground-state line energy, ell={cfg.ell:g}",
                                      desc=f"seed={cfg.seed}")
    return {"lambda": lams.tolist(), "e": vals}, files


def _region(cfg):
    if cfg.region == "random":
        return levelset.random_region(np.random.default_rng(cfg.seed))
    if cfg.region == "annulus":
        return levelset.PolygonalRegion.from_geometry(
            levelset.disk_polygon((0, 0), 1.0, 64).difference(levelset.disk_polygon((0, 0), 0.05, 16)))
    try:
        return levelset.read_region_csv(cfg.region)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read region {cfg.region}: {exc}") from None


def _rings(geom):
    for part in getattr(geom, "geoms", [geom]):
        if part.is_empty:
            continue
        yield np.asarray(part.exterior.coords)
        for r in part.interiors:
            yield np.asarray(r.coords)


def _mode_levelset(cfg):
    reg = _region(cfg)
    try:
        dec = levelset.decompose_global(reg, cfg.delta0, seed=cfg.seed, strict=False)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    levelset.write_region_csv(os.path.join(cfg.out, "region.csv"), reg)
    ts = np.linspace(0, reg.perimeter / (2 * np.pi), 21)
    with open(os.path.join(cfg.out, "offset_lengths.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "length"])
        for t in ts:
            w.writerow([_num(t), _num(levelset.offset_length(reg, t))])
    files = {}
    if cfg.svg:
        series = [(f"omega0 ({len(dec.selected)} loops)" if i == 0 else "", r[:, 0], r[:, 1], "line")
                  for i, r in enumerate(_rings(dec.omega0))]
        series += [("omega1" if i == 0 else "", r[:, 0], r[:, 1], "dash")
                   for i, r in enumerate(_rings(dec.omega1))]
        if series:
            files["decomposition.svg"] = svg_plot(series, "x", "y", "level-set decomposition",
                                                  desc=f"seed={cfg.seed}", equal=True)
    summary = dec.report()
    if not dec.ok:
        path = os.path.join(cfg.out, "decomposition_failure.json")
        write_json(path, summary)
        raise NumericalFailure("decomposition failed its checks", path)
    return {"decomposition": summary}, files


def _mode_sweep(cfg):
    rows, failures, extras = sweep_lambda(cfg)
    emit_outputs(rows, cfg.out, "csv", cfg, "sweep")
    files = {}
    if cfg.svg and rows:
        lam = np.array([r["lambda"] for r in rows])
        fine = np.linspace(0, max(lam.max(), 1.0) * 1.05, 200)
        e0 = [limit.ground_state_energy(x, cfg.ell) for x in fine]
        files["sweep_energy.svg"] = svg_plot(
            [("e(lambda)", fine, e0, "dash"), ("minimised E_eps", lam, [r["total"] for r in rows],
                                                "marker")],
            "lambda", "energy", f"energy vs lambda, eps={cfg.epsilon:g}", desc=f"seed={cfg.seed}")
        series = []
        for x in extras:
            ok = np.isfinite(x["gamma"])
            series.append((f"lambda={x['row']['lambda']:g}", x["gamma"][ok], x["x2"][ok], "line"))
        files["sweep_walls.svg"] = svg_plot(series, "x1", "x2", "minimised walls",
                                            desc=f"seed={cfg.seed}")
    for x in extras:
        optimizer.write_log_csv(os.path.join(cfg.out, f"descent_lambda{x['row']['lambda']:g}.csv"),
                                optimizer.IterationLog(x["log"], x["converged"]))
    monotone = {f"{x['row']['lambda']:g}": bool(np.all(np.diff([r["total"] for r in x["log"]]) < 0))
                for x in extras}
    summary = {"rows": rows, "failures": failures, "monotone": monotone}
    if failures:
        summary["partial"] = True
        return (NumericalFailure(f"{len(failures)} lambda value(s) failed", failures[0]["dump"]),
                summary, files)
    return summary, files


def _mode_oracle(cfg):
    grid = make_grid(2.0, 2.0, cfg.oracle_n, cfg.oracle_n)
    rows, ok = spectral.oracle_triangle(grid, cfg.oracle_count, seed=cfg.seed)
    with open(os.path.join(cfg.out, "oracle.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "spectral", "singular", "helmholtz", "max_gap"])
        for r in rows:
            w.writerow([r["index"]] + [_num(r[k]) for k in ("spectral", "singular", "helmholtz",
                                                             "max_gap")])
    summary = {"rows": rows, "all_pass": ok, "rtol": 0.02}
    if not ok:
        path = os.path.join(cfg.out, "oracle_failure.json")
        write_json(path, summary)
        raise NumericalFailure("oracle triangle disagreement above 2%", path)
    return summary, {}


_MODES = {"energy": _mode_energy, "minimize": _mode_minimize, "recovery": _mode_recovery,
          "limit": _mode_limit, "levelset": _mode_levelset, "sweep": _mode_sweep,
          "oracle-check": _mode_oracle}


def _finish(cfg, status, summary, files, message=None):
    for name, text in files.items():
        _write_text(os.path.join(cfg.out, name), text)
    conf = cfg.as_dict()
    del conf["out"]                 # keep summaries relocatable
    doc = {"mode": cfg.mode, "seed": cfg.seed, "status": status, "config": conf,
           "result": summary}
    if message:
        doc["error"] = message
    write_json(os.path.join(cfg.out, "summary.json"), doc)


def run(argv=None, stdout=None, stderr=None):
    """Run one experiment; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = resolve_config(list(sys.argv[1:] if argv is None else argv))
        os.makedirs(cfg.out, exist_ok=True)
        _write_text(os.path.join(cfg.out, "config.resolved.txt"), cfg.echo())
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: cannot write to output directory: {exc}", file=stderr)
        return EXIT_CONFIG
    try:
        out = _MODES[cfg.mode](cfg)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=stderr)
        _finish(cfg, "failed", None, {}, str(exc))
        return EXIT_NUMERIC
    except tuple(_NUMERIC_ERRORS) as exc:
        dump = getattr(exc, "dump", None)
        if dump is None:
            dump = os.path.join(cfg.out, "failure.json")
            write_json(dump, {"error": str(exc), "diagnostics": getattr(exc, "diagnostics", None)})
        print(f"numerical failure: {exc} (state: {dump})", file=stderr)
        _finish(cfg, "failed", None, {}, str(exc))
        return EXIT_NUMERIC
    except ValueError as exc:
        # ConfigError and violated preconditions of the library calls
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    if isinstance(out[0], NumericalFailure):
        exc, summary, files = out
        print(f"numerical failure: {exc}", file=stderr)
        _finish(cfg, "partial", summary, files, str(exc))
        return EXIT_NUMERIC
    summary, files = out
    _finish(cfg, "ok", summary, files)
    print(f"{cfg.mode}: ok, outputs in {cfg.out}", file=stdout)
    return EXIT_OK


_NUMERIC_ERRORS = (optimizer.DescentError, levelset.LevelSetError, spectral.NeutralityError,
                   FloatingPointError)


def main():
    sys.exit(run())
