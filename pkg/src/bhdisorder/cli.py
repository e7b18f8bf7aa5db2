"""Command-line front end.

    python3 -m bhdisorder curve --preset fig1 --out out/fig1
    python3 -m bhdisorder constants --config run.json

Configs are JSON objects. Unknown keys are rejected and every output file
carries the fully resolved config, so identical configs and seeds give
byte-identical files.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import constants as const
from . import disorder as dis
from . import oracle
from . import phase
from . import pressure
from .singlesite import ModelParams

FORMAT_VERSION = 1
SUBCOMMANDS = ("curve", "constants", "pressure", "oracle", "ids")


class ConfigError(ValueError):
    pass


def _grid(lo, hi, n):
    return {"rho_min": lo, "rho_max": hi, "points": n}


def _curve(name, lam, disorder, lo, hi, n):
    interaction = "hardcore" if lam is None else ("perfect" if lam == 0 else "finite")
    model = {"interaction": interaction}
    if interaction == "finite":
        model["lambda"] = lam
    return {"name": name, "model": model, "disorder": disorder, "sweep": _grid(lo, hi, n)}


_B2 = {"kind": "bernoulli", "p": 0.5, "eps": 2.0}
_POINT = {"kind": "point"}

PRESETS = {
    "fig1": [_curve(f"lam{lam:g}", lam, _B2, 0.02, 1.98, 99) for lam in (3.0, 3.3, 4.0, 6.0, 10.0)]
    + [_curve("hardcore", None, _B2, 0.02, 0.98, 49)],
    "fig2": [_curve(f"lam{lam:g}", lam, {"kind": "trinomial", "eps": 10.0}, 0.02, 2.98, 149)
             for lam in (3.0, 4.0, 6.0, 8.0)],
    "fig3": [_curve("lam8", 8.0, {"kind": "multinomial", "m": 10, "eps": 10.0}, 0.02, 2.98, 149)],
    "fig4": [_curve("random", 10.0, {"kind": "multinomial", "m": 10, "eps": 3.0}, 0.02, 2.98, 149),
             _curve("nonrandom", 10.0, _POINT, 0.02, 2.98, 149)],
    "fig5": [_curve("random", 0.1, _B2, 0.02, 1.98, 99),
             _curve("nonrandom", 0.1, _POINT, 0.02, 1.98, 99),
             _curve("perfect", 0, _POINT, 0.02, 1.98, 99)],
}

DEFAULTS = {
    "curve": {"beta_max": phase.BETA_MAX},
    "pressure": {"beta": [1.0], "mu": [0.0]},
    "oracle": {"V": [2, 3, 4], "n_max": 3, "beta": 1.0, "mu": 0.5},
    "ids": {"V": 500, "samples": 50, "E": [0.5, 1.5, 3.5]},
    "constants": {"lambda": 3.0, "p": 0.5, "eps": 2.0},
    "tolerances": {"quad_order": 8, "quad_tol": 1e-10, "quad_atol": 1e-14, "quad_max_doublings": 12},
}

TOP_KEYS = {"format_version", "subcommand", "name", "model", "disorder", "sweep", "curves",
            "grid", "oracle", "ids", "constants", "seed", "tolerances", "output"}


# ---------------------------------------------------------------------------
# config


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def _number(d, key, where, cond=lambda v: True, what="valid"):
    v = d.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}.{key} must be a finite number")
    if not cond(v):
        raise ConfigError(f"{where}.{key} = {v} is not {what}")
    return float(v)


def model_lambda(model: dict) -> float:
    mode = model["interaction"]
    if mode == "hardcore":
        return math.inf
    if mode == "perfect":
        return 0.0
    return float(model["lambda"])


def _resolve_model(model, where):
    _check_keys(model, {"interaction", "lambda"}, where)
    mode = model.get("interaction", "finite")
    if mode not in ("finite", "hardcore", "perfect"):
        raise ConfigError(f"{where}.interaction must be finite, hardcore or perfect")
    out = {"interaction": mode}
    if mode == "finite":
        out["lambda"] = _number(model, "lambda", where, lambda v: v > 0, "> 0")
    elif "lambda" in model:
        raise ConfigError(f"{where}.lambda only applies to finite interaction")
    return out


def _resolve_disorder(d, where):
    try:
        spec = dis.from_dict(d)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return spec.to_dict()


def _resolve_curve(c, where, beta_max):
    _check_keys(c, {"name", "model", "disorder", "sweep"}, where)
    out = {"name": str(c.get("name", "curve"))}
    out["model"] = _resolve_model(c.get("model", {}), where + ".model")
    out["disorder"] = _resolve_disorder(c.get("disorder", {"kind": "point"}), where + ".disorder")
    sweep = c.get("sweep")
    if sweep is None:
        raise ConfigError(f"{where}.sweep is required")
    _check_keys(sweep, {"rho_min", "rho_max", "points", "beta_max"}, where + ".sweep")
    pts = sweep.get("points")
    if isinstance(pts, bool) or not isinstance(pts, int) or pts < 1:
        raise ConfigError(f"{where}.sweep.points must be an integer >= 1")
    lo = _number(sweep, "rho_min", where + ".sweep", lambda v: v > 0, "> 0")
    hi = _number(sweep, "rho_max", where + ".sweep", lambda v: v >= lo, ">= rho_min")
    if pts > 1 and hi == lo:
        raise ConfigError(f"{where}.sweep needs rho_max > rho_min for several points")
    if out["model"]["interaction"] == "hardcore" and hi >= 1:
        raise ConfigError(f"{where}.sweep: hard-core densities must stay below 1")
    bm = beta_max if beta_max is not None else sweep.get("beta_max", DEFAULTS["curve"]["beta_max"])
    bm = _number({"beta_max": bm}, "beta_max", where + ".sweep", lambda v: v > phase.BETA_LO,
                 f"> {phase.BETA_LO}")
    out["sweep"] = {"rho_min": lo, "rho_max": hi, "points": pts, "beta_max": bm}
    return out


def _float_list(v, where, cond=lambda x: True):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where} must be a non-empty list")
    return [_number({"v": x}, "v", where, cond) for x in v]


def resolve_config(raw: dict, subcommand: str | None = None, preset: str | None = None,
                   seed: int | None = None, beta_max: float | None = None) -> dict:
    """Validate ``raw`` and materialize every default."""
    raw = copy.deepcopy(raw) if raw else {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}")
        raw.setdefault("subcommand", "curve")
        raw.setdefault("name", preset)
        raw.setdefault("curves", copy.deepcopy(PRESETS[preset]))
    _check_keys(raw, TOP_KEYS, "config")
    version = raw.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported format_version {version}")
    sub = subcommand or raw.get("subcommand")
    if raw.get("subcommand") not in (None, sub):
        raise ConfigError(f"config is for {raw['subcommand']!r}, not {sub!r}")
    if sub not in SUBCOMMANDS:
        raise ConfigError(f"subcommand must be one of {SUBCOMMANDS}")
    out = {"format_version": FORMAT_VERSION, "subcommand": sub,
           "name": str(raw.get("name", sub))}
    s = seed if seed is not None else raw.get("seed", 0)
    if isinstance(s, bool) or not isinstance(s, int) or s < 0:
        raise ConfigError("seed must be a nonnegative integer")
    out["seed"] = s
    tol = dict(DEFAULTS["tolerances"])
    tol.update(raw.get("tolerances", {}))
    _check_keys(tol, DEFAULTS["tolerances"], "tolerances")
    out["tolerances"] = tol
    if "output" in raw:
        _check_keys(raw["output"], {"dir"}, "output")
        out["output"] = {"dir": str(raw["output"]["dir"])}

    if sub == "curve":
        if "curves" in raw:
            if any(k in raw for k in ("model", "disorder", "sweep")):
                raise ConfigError("give either curves or model/disorder/sweep, not both")
            curves = raw["curves"]
            if not isinstance(curves, list) or not curves:
                raise ConfigError("curves must be a non-empty list")
        else:
            curves = [{k: raw[k] for k in ("model", "disorder", "sweep") if k in raw}]
        out["curves"] = [_resolve_curve(c, f"curves[{i}]", beta_max) for i, c in enumerate(curves)]
        names = [c["name"] for c in out["curves"]]
        if len(set(names)) != len(names):
            raise ConfigError("curve names must be unique")
    elif sub == "pressure":
        out["model"] = _resolve_model(raw.get("model", {}), "model")
        out["disorder"] = _resolve_disorder(raw.get("disorder", {"kind": "point"}), "disorder")
        grid = dict(DEFAULTS["pressure"])
        grid.update(raw.get("grid", {}))
        _check_keys(grid, {"beta", "mu"}, "grid")
        out["grid"] = {"beta": _float_list(grid["beta"], "grid.beta", lambda v: v > 0),
                       "mu": _float_list(grid["mu"], "grid.mu")}
    elif sub in ("oracle", "ids"):
        out["model"] = _resolve_model(raw.get("model", {"lambda": 1.0}), "model")
        out["disorder"] = _resolve_disorder(raw.get("disorder", {"kind": "point"}), "disorder")
        o = dict(DEFAULTS["oracle"])
        o.update(raw.get("oracle", {}))
        _check_keys(o, DEFAULTS["oracle"], "oracle")
        Vs = o["V"]
        if not isinstance(Vs, list) or not Vs or any(
                isinstance(v, bool) or not isinstance(v, int) or v < 1 for v in Vs):
            raise ConfigError("oracle.V must be a non-empty list of integers >= 1")
        nm = o["n_max"]
        if isinstance(nm, bool) or not isinstance(nm, int) or nm < 1:
            raise ConfigError("oracle.n_max must be an integer >= 1")
        out["oracle"] = {"V": Vs, "n_max": nm,
                         "beta": _number(o, "beta", "oracle", lambda v: v > 0, "> 0"),
                         "mu": _number(o, "mu", "oracle")}
        i = dict(DEFAULTS["ids"])
        i.update(raw.get("ids", {}))
        _check_keys(i, DEFAULTS["ids"], "ids")
        for key in ("V", "samples"):
            v = i[key]
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"ids.{key} must be an integer >= 1")
        out["ids"] = {"V": i["V"], "samples": i["samples"], "E": _float_list(i["E"], "ids.E")}
    elif sub == "constants":
        c = dict(DEFAULTS["constants"])
        c.update(raw.get("constants", {}))
        _check_keys(c, DEFAULTS["constants"], "constants")
        out["constants"] = {"lambda": _number(c, "lambda", "constants", lambda v: v > 0, "> 0"),
                            "p": _number(c, "p", "constants", lambda v: 0 < v < 1, "in (0, 1)"),
                            "eps": _number(c, "eps", "constants", lambda v: v >= 0, ">= 0")}
    return out


def _quad(cfg):
    t = cfg["tolerances"]
    return dis.QuadratureConfig(int(t["quad_order"]), float(t["quad_tol"]),
                                float(t["quad_atol"]), int(t["quad_max_doublings"]))


# ---------------------------------------------------------------------------
# writers


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def _header_lines(cfg) -> list[str]:
    return [f"# format_version={FORMAT_VERSION}",
            "# config=" + json.dumps(cfg, sort_keys=True, separators=(",", ":"))]


def write_csv(path: Path, cfg: dict, header: list[str], rows) -> None:
    buf = io.StringIO()
    for line in _header_lines(cfg):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())


def curve_rows(curve: phase.CriticalCurve):
    for p in curve.points:
        beta = p.beta_c if p.status == phase.CONVERGED else (
            math.inf if p.status == phase.DIVERGENT else None)
        yield [p.rho, beta, p.mu_c, p.status, p.n_roots]


def gnuplot_script(csv_name: str, curve: phase.CriticalCurve, title: str, cfg: dict) -> str:
    lines = _header_lines(cfg) + [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        f"set title '{title}'",
        "set xlabel 'rho'",
        "set ylabel 'beta_c'",
        "set key off",
    ]
    for p in curve.points:
        if p.status == phase.DIVERGENT:
            lines.append(f"set arrow from {p.rho!r}, graph 0 to {p.rho!r}, graph 1 nohead dt 2")
    lines.append(f"plot '{csv_name}' every ::1 using 1:(strcol(4) eq 'converged' ? $2 : NaN) "
                 "with linespoints pt 7 ps 0.5")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands


def _executor(jobs):
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs <= 1:
        return None
    return ProcessPoolExecutor(max_workers=jobs)


def rho_grid(sweep: dict) -> list[float]:
    # rounding keeps grid values like 0.1 exact in decimal
    g = np.linspace(sweep["rho_min"], sweep["rho_max"], sweep["points"])
    return [float(v) for v in np.round(g, 12)]


def run_curves(cfg: dict, jobs: int | None = 1) -> list[phase.CriticalCurve]:
    quad = _quad(cfg)
    pool = _executor(jobs)
    try:
        out = []
        for c in cfg["curves"]:
            spec = dis.from_dict(c["disorder"])
            lam = model_lambda(c["model"])
            out.append(phase.curve_sweep(rho_grid(c["sweep"]), lam, spec,
                                         c["sweep"]["beta_max"], quad, executor=pool))
        return out
    finally:
        if pool is not None:
            pool.shutdown()


def cmd_curve(cfg: dict, out: Path, jobs: int | None = 1) -> list[Path]:
    curves = run_curves(cfg, jobs)
    single = len(curves) == 1
    written = []
    for c, curve in zip(cfg["curves"], curves):
        stem = "curve" if single else f"curve_{c['name']}"
        write_csv(out / f"{stem}.csv", cfg, ["rho", "beta_c", "mu_c", "status", "n_roots"],
                  curve_rows(curve))
        failed = [p.rho for p in curve.points if p.status == phase.FAILED]
        doc = {"format_version": FORMAT_VERSION, "config": cfg, "curve": c["name"],
               "model": c["model"], "disorder": c["disorder"], "solver": curve.meta,
               "failed_rho": failed, "points": [p.to_dict() for p in curve.points]}
        (out / f"{stem}.json").write_text(_dump_json(doc))
        (out / f"{stem}.gp").write_text(
            gnuplot_script(f"{stem}.csv", curve, f"{cfg['name']} {c['name']}", cfg))
        written += [out / f"{stem}.{ext}" for ext in ("csv", "json", "gp")]
    return written


def cmd_constants(cfg: dict, out: Path | None) -> dict:
    c = cfg["constants"]
    tab = const.table(c["lambda"], c["p"], c["eps"])
    width = max(len(k) for k in tab)
    for k, v in tab.items():
        shown = "n/a" if v is None else (", ".join(f"{x:.10g}" for x in v)
                                         if isinstance(v, tuple) else f"{v:.10g}")
        print(f"{k:<{width}}  {shown}")
    if out is not None:
        doc = {"format_version": FORMAT_VERSION, "config": cfg,
               "constants": {k: list(v) if isinstance(v, tuple) else v for k, v in tab.items()}}
        (out / "constants.json").write_text(_dump_json(doc))
    return tab


def _pressure_row(args):
    beta, mu, lam, spec_dict, quad = args
    spec = dis.from_dict(spec_dict)
    res = pressure.variational_pressure(ModelParams(beta, mu, lam), spec, quad)
    return [beta, mu, res.pressure, res.r_star, str(res.bec).lower()]


def cmd_pressure(cfg: dict, out: Path, jobs: int | None = 1) -> Path:
    lam = model_lambda(cfg["model"])
    quad = _quad(cfg)
    tasks = [(b, m, lam, cfg["disorder"], quad) for b in cfg["grid"]["beta"]
             for m in cfg["grid"]["mu"]]
    pool = _executor(jobs)
    try:
        rows = list((pool.map if pool else map)(_pressure_row, tasks))
    finally:
        if pool is not None:
            pool.shutdown()
    path = out / "pressure.csv"
    write_csv(path, cfg, ["beta", "mu", "p", "r_star", "bec"], rows)
    return path


def _oracle_rows(cfg):
    o = cfg["oracle"]
    lam = model_lambda(cfg["model"])
    spec = dis.from_dict(cfg["disorder"])
    n_max = 1 if math.isinf(lam) else o["n_max"]
    rows = []
    for k, V in enumerate(o["V"]):
        seed = cfg["seed"] + k
        real = oracle.realize(V, n_max, spec, o["beta"], o["mu"], lam, seed)
        pe = oracle.exact_pressure(real)
        pa, _ = oracle.approx_pressure_sup(real)
        gap = pe - pa
        if gap < oracle.GAP_FLOOR:
            raise oracle.InvariantError(f"negative Bogoliubov gap {gap:.3e} at V={V}")
        rows.append([V, o["beta"], o["mu"], lam, seed, pe, pa, gap])
    return rows


def _ids_rows(cfg):
    i = cfg["ids"]
    spec = dis.from_dict(cfg["disorder"])
    return oracle.ids_empirical(i["V"], spec, i["samples"], i["E"], cfg["seed"])


def cmd_oracle(cfg: dict, out: Path) -> list[Path]:
    a = out / "oracle.csv"
    write_csv(a, cfg, ["V", "beta", "mu", "lambda", "seed", "p_exact", "p_appr", "gap"],
              _oracle_rows(cfg))
    b = out / "ids.csv"
    write_csv(b, cfg, ["E", "N_bar", "stderr"], _ids_rows(cfg))
    return [a, b]


def cmd_ids(cfg: dict, out: Path) -> Path:
    b = out / "ids.csv"
    write_csv(b, cfg, ["E", "N_bar", "stderr"], _ids_rows(cfg))
    return b


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bhdisorder", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON run config")
        p.add_argument("--preset", choices=sorted(PRESETS), help="figure preset (curve only)")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=None, help="worker processes (default: cores)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--beta-max", type=float, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = {}
        if args.config is not None:
            try:
                raw = json.loads(args.config.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        if args.preset is not None and args.subcommand != "curve":
            raise ConfigError("presets apply to the curve subcommand only")
        if args.jobs is not None and args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg = resolve_config(raw, args.subcommand, args.preset, args.seed, args.beta_max)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = args.out or Path(cfg.get("output", {}).get("dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    try:
        if cfg["subcommand"] == "curve":
            files = cmd_curve(cfg, out, args.jobs)
        elif cfg["subcommand"] == "constants":
            cmd_constants(cfg, out)
            files = [out / "constants.json"]
        elif cfg["subcommand"] == "pressure":
            files = [cmd_pressure(cfg, out, args.jobs)]
        elif cfg["subcommand"] == "oracle":
            files = cmd_oracle(cfg, out)
        else:
            files = [cmd_ids(cfg, out)]
    except oracle.InvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except oracle.DimensionError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for f in files:
        print(f, file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
