"""Command-line front end: ``bitrade <mode> --config run.yaml [--out DIR] [--seed N]``.

Config files are YAML with these top-level sections (unknown keys are
rejected)::

    params:          {Y1, Y2, q1, q2, rho}        # required
    initial_prices:  {p1, p2}                     # required except for sweep
    options:         per-mode settings, see OPTION_DEFAULTS
    portrait:        {p1_min, p1_max, p2_min, p2_max, n1, n2}   # optional
    sweep:           {draws, ranges: {name: [lo, hi]}, oracle_grid_n}

Exit codes: 0 success, 2 configuration error, 3 orientation violation,
4 unresolved classification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .continuous import field_at, integrate, rhs, stationary_set
from .discrete import SteadyKind, iterate, p1_infinity
from .equilibrium import is_fixed_point, lemma_violations, solve_nash
from .errors import BitradeError, ConfigError, NoConvergence, OrientationViolated
from .model import ModelParams, PriceState, payoff1, payoff2
from .oracle import brute_force_nash
from .sampling import DEFAULT_RANGES, stratified_instances
from .stochastic import NoiseSpec, ShockMode, euler_maruyama
from .zones import (case_relation, classify, delta_p_branch, line_values, p1_star, p2_star)

MODES = ("equilibrium", "zones", "discrete", "ode", "sde", "sweep")

EXIT_OK, EXIT_CONFIG, EXIT_ORIENTATION, EXIT_UNRESOLVED = 0, 2, 3, 4

TRAJECTORY_COLUMNS = ("t", "p1", "p2", "alpha", "beta", "gamma", "delta", "zone", "event")
PORTRAIT_COLUMNS = ("p1", "p2", "f1", "f2", "zone")
SWEEP_COLUMNS = ("index", "Y1", "Y2", "q1", "q2", "rho", "p1", "p2", "zone", "branch",
                 "alpha", "beta", "gamma", "delta", "fixed_point", "lemma_ok", "oracle_ok")

OPTION_DEFAULTS: dict[str, Any] = {
    "max_steps": 100_000,
    "tol": 1e-10,
    "dt": 1e-3,
    "horizon": 50.0,
    "method": "rk4",
    "sigma": [0.0, 0.0],
    "shock_mode": "symmetric",
    "seed": 0,
    "record_every": 1,
}

_TOP_KEYS = {"mode", "params", "initial_prices", "options", "portrait", "sweep"}
_PARAM_KEYS = ("Y1", "Y2", "q1", "q2", "rho")
_PRICE_KEYS = ("p1", "p2")
_PORTRAIT_KEYS = ("p1_min", "p1_max", "p2_min", "p2_max", "n1", "n2")
_SWEEP_KEYS = {"draws", "ranges", "oracle_grid_n"}


def fmt(x: float) -> str:
    """Float with 17 significant digits (round-trips exactly)."""
    return format(float(x), ".17g")


@dataclass
class RunConfig:
    mode: str
    params: ModelParams | None
    initial_prices: PriceState | None
    options: dict[str, Any]
    portrait: dict[str, float] | None = None
    sweep: dict[str, Any] = field(default_factory=dict)

    def resolved(self) -> dict[str, Any]:
        out: dict[str, Any] = {"mode": self.mode, "options": self.options}
        if self.params is not None:
            out["params"] = {k: getattr(self.params, k) for k in _PARAM_KEYS}
        if self.initial_prices is not None:
            out["initial_prices"] = {"p1": self.initial_prices.p1, "p2": self.initial_prices.p2}
        if self.portrait is not None:
            out["portrait"] = self.portrait
        if self.sweep:
            out["sweep"] = self.sweep
        return out


def _section(raw: dict, name: str, keys, required: bool = True) -> dict:
    sec = raw.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing section '{name}'")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    unknown = set(sec) - set(keys)
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    return sec


def _number(sec: dict, key: str, where: str) -> float:
    if key not in sec:
        raise ConfigError(f"missing '{where}.{key}'")
    v = sec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"'{where}.{key}' must be a number, got {v!r}")
    return float(v)


def parse_config(raw: Any, mode: str | None = None, seed: int | None = None) -> RunConfig:
    """Validate a loaded YAML document; ``mode``/``seed`` override the file."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    mode = mode or raw.get("mode")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")

    opts_raw = _section(raw, "options", OPTION_DEFAULTS, required=False)
    options = {**OPTION_DEFAULTS, **opts_raw}
    if seed is not None:
        options["seed"] = seed
    if options["method"] not in ("euler", "rk4"):
        raise ConfigError("options.method must be 'euler' or 'rk4'")
    if options["shock_mode"] not in {m.value for m in ShockMode}:
        raise ConfigError(f"options.shock_mode must be one of {[m.value for m in ShockMode]}")
    sigma = options["sigma"]
    if (not isinstance(sigma, (list, tuple)) or len(sigma) != 2
            or any(isinstance(s, bool) or not isinstance(s, (int, float)) or s < 0 for s in sigma)):
        raise ConfigError("options.sigma must be a list of two numbers >= 0")
    for key in ("dt", "horizon", "tol"):
        if not (isinstance(options[key], (int, float)) and options[key] > 0):
            raise ConfigError(f"options.{key} must be > 0")
    for key in ("max_steps", "record_every"):
        if not (isinstance(options[key], int) and options[key] >= 1):
            raise ConfigError(f"options.{key} must be an integer >= 1")
    if not (isinstance(options["seed"], int) and 0 <= options["seed"] < 2**64):
        raise ConfigError("options.seed must be a 64-bit unsigned integer")

    try:
        p = _section(raw, "params", _PARAM_KEYS, required=mode != "sweep")
        params = ModelParams(*(_number(p, k, "params") for k in _PARAM_KEYS)) if p else None
        ip = _section(raw, "initial_prices", _PRICE_KEYS, required=mode != "sweep")
        prices = PriceState(*(_number(ip, k, "initial_prices") for k in _PRICE_KEYS)) if ip else None
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    portrait = None
    if "portrait" in raw:
        ps = _section(raw, "portrait", _PORTRAIT_KEYS)
        portrait = {k: _number(ps, k, "portrait") for k in _PORTRAIT_KEYS}
        if portrait["n1"] < 1 or portrait["n2"] < 1 or portrait["n1"] != int(portrait["n1"]) \
                or portrait["n2"] != int(portrait["n2"]):
            raise ConfigError("portrait.n1 and portrait.n2 must be positive integers")
        if portrait["p1_min"] <= 0 or portrait["p2_min"] <= 0:
            raise ConfigError("portrait bounds must be positive")

    sweep: dict[str, Any] = {}
    if mode == "sweep":
        sw = _section(raw, "sweep", _SWEEP_KEYS, required=False)
        draws = sw.get("draws", 1000)
        if not (isinstance(draws, int) and 1 <= draws <= 10**6):
            raise ConfigError("sweep.draws must be an integer in [1, 1e6]")
        ranges = {}
        for k, v in (sw.get("ranges") or {}).items():
            if k not in DEFAULT_RANGES:
                raise ConfigError(f"unknown sweep range '{k}'")
            if (not isinstance(v, (list, tuple)) or len(v) != 2
                    or not all(isinstance(x, (int, float)) and math.isfinite(x) for x in v)
                    or v[0] > v[1] or v[0] <= 0):
                raise ConfigError(f"sweep.ranges.{k} must be [lo, hi] with 0 < lo <= hi")
            ranges[k] = [float(v[0]), float(v[1])]
        grid_n = sw.get("oracle_grid_n", 0)
        if not (isinstance(grid_n, int) and (grid_n == 0 or grid_n >= 50)):
            raise ConfigError("sweep.oracle_grid_n must be 0 (off) or >= 50")
        sweep = {"draws": draws, "ranges": ranges, "oracle_grid_n": grid_n}
    return RunConfig(mode, params, prices, options, portrait, sweep)


def load_config(path: str | os.PathLike, mode: str | None = None,
                seed: int | None = None) -> RunConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    return parse_config(raw, mode, seed)


@dataclass
class OutputBundle:
    summary: dict[str, Any]
    trajectory: list[dict[str, Any]] | None = None
    portrait: list[dict[str, Any]] | None = None
    sweep_rows: list[dict[str, Any]] | None = None
    exit_code: int = EXIT_OK


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def write_bundle(bundle: OutputBundle, out: str | os.PathLike) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(json.dumps(_jsonable(bundle.summary), indent=2) + "\n")
    if bundle.trajectory is not None:
        (out / "trajectory.csv").write_text(_csv_text(TRAJECTORY_COLUMNS, bundle.trajectory))
    if bundle.portrait is not None:
        (out / "portrait.csv").write_text(_csv_text(PORTRAIT_COLUMNS, bundle.portrait))
    if bundle.sweep_rows is not None:
        (out / "sweep.csv").write_text(_csv_text(SWEEP_COLUMNS, bundle.sweep_rows))


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _traj_row(t: float, prices: PriceState, params: ModelParams, event: str = "") -> dict:
    eq = solve_nash(prices, params)
    a, b, g, d = eq.profile.as_tuple()
    return {"t": float(t), "p1": prices.p1, "p2": prices.p2, "alpha": float(a), "beta": float(b),
            "gamma": float(g), "delta": float(d), "zone": str(eq.zone), "event": event}


def _portrait(cfg: RunConfig) -> list[dict] | None:
    if cfg.portrait is None:
        return None
    pr = cfg.portrait
    rows = []
    for x in np.linspace(pr["p1_min"], pr["p1_max"], int(pr["n1"])):
        for y in np.linspace(pr["p2_min"], pr["p2_max"], int(pr["n2"])):
            v = rhs(PriceState(float(x), float(y)), cfg.params)
            rows.append({"p1": float(x), "p2": float(y), "f1": float(v.f1), "f2": float(v.f2),
                         "zone": str(v.zone)})
    return rows


def _run_equilibrium(cfg: RunConfig) -> OutputBundle:
    params, prices = cfg.params, cfg.initial_prices
    eq = solve_nash(prices, params)
    agg = eq.aggregates
    summary = {
        "profile": list(eq.profile.as_tuple()),
        "zone": str(eq.zone),
        "branch": eq.branch.name,
        "swapped": eq.swapped,
        "degenerate": eq.degenerate,
        "payoffs": [payoff1(eq.profile, params), payoff2(eq.profile, params)],
        "aggregates": vars(agg),
        "fixed_point": is_fixed_point(eq.profile, prices, params),
        "lemma_violations": lemma_violations(eq.profile, prices, params),
    }
    return OutputBundle(summary)


def _run_zones(cfg: RunConfig) -> OutputBundle:
    params, prices = cfg.params, cfg.initial_prices
    lv = line_values(prices, params)
    summary = {
        "zone": str(classify(prices, params)),
        "case_relation": case_relation(prices, params).name,
        "branch": delta_p_branch(prices, params).name,
        "line_values": lv._asdict(),
        "p1_star": p1_star(params),
        "p2_star": p2_star(params),
        "E_tilde": list(params.E_tilde.as_tuple()),
    }
    return OutputBundle(summary, portrait=_portrait(cfg))


def _run_discrete(cfg: RunConfig) -> OutputBundle:
    params, prices = cfg.params, cfg.initial_prices
    o = cfg.options
    traj = iterate(prices, params, max_steps=o["max_steps"], tol=o["tol"])
    rows = []
    for rec in traj.records:
        a, b, g, d = rec.equilibrium.profile.as_tuple()
        rows.append({"t": float(rec.t), "p1": rec.prices.p1, "p2": rec.prices.p2,
                     "alpha": float(a), "beta": float(b), "gamma": float(g), "delta": float(d),
                     "zone": str(rec.equilibrium.zone),
                     "event": ";".join(str(e) for e in rec.events)})
    cls = traj.classification
    summary = {
        "class": cls.kind.value,
        "limit": cls.limit,
        "converged_at": traj.converged_at,
        "steps": len(traj.records) - 1,
        "final_prices": list(traj.final_prices.as_tuple()),
        "p1_infinity": p1_infinity(params),
    }
    if cls.kind is SteadyKind.DegenerateL4:
        summary["k"] = cls.limit
    code = EXIT_UNRESOLVED if cls.kind is SteadyKind.Unresolved else EXIT_OK
    return OutputBundle(summary, trajectory=rows, exit_code=code)


def _run_ode(cfg: RunConfig) -> OutputBundle:
    params, prices = cfg.params, cfg.initial_prices
    o = cfg.options
    tr = integrate(prices, params, dt=o["dt"], horizon=o["horizon"], method=o["method"],
                   record_every=o["record_every"])
    rows = [_traj_row(s.t, s.prices, params, "sliding" if s.sliding else "") for s in tr.samples]
    ss = stationary_set(params, 50)
    summary = {
        "terminal": tr.terminal,
        "final_prices": list(tr.final_prices.as_tuple()),
        "final_field": list(field_at(tr.final_prices, params)),
        "E_tilde": list(ss.E_tilde.as_tuple()),
        "sliding_samples": sum(s.sliding for s in tr.samples),
    }
    return OutputBundle(summary, trajectory=rows, portrait=_portrait(cfg))


def _run_sde(cfg: RunConfig) -> OutputBundle:
    params, prices = cfg.params, cfg.initial_prices
    o = cfg.options
    noise = NoiseSpec(float(o["sigma"][0]), float(o["sigma"][1]), o["seed"],
                      ShockMode(o["shock_mode"]))
    path = euler_maruyama(prices, params, noise, dt=o["dt"], horizon=o["horizon"])
    step = o["record_every"]
    rows = [_traj_row(path.t[i], PriceState(float(path.p[i, 0]), float(path.p[i, 1])), params)
            for i in range(0, len(path.t), step)]
    e = params.E_tilde
    summary = {
        "final_prices": list(path.final_prices.as_tuple()),
        "max_distance_from_E_tilde": path.max_distance_from(e),
        "reflections": path.reflections,
        "seed": o["seed"],
    }
    return OutputBundle(summary, trajectory=rows)


def _evaluate(args) -> dict:
    idx, params, prices, grid_n = args
    eq = solve_nash(prices, params)
    a, b, g, d = eq.profile.as_tuple()
    row = {"index": idx, "Y1": params.Y1, "Y2": params.Y2, "q1": params.q1, "q2": params.q2,
           "rho": params.rho, "p1": prices.p1, "p2": prices.p2, "zone": str(eq.zone),
           "branch": eq.branch.name, "alpha": float(a), "beta": float(b), "gamma": float(g),
           "delta": float(d), "fixed_point": bool(is_fixed_point(eq.profile, prices, params)),
           "lemma_ok": not lemma_violations(eq.profile, prices, params), "oracle_ok": ""}
    if grid_n:
        try:
            o = brute_force_nash(prices, params, grid_n)
            ok = (abs(payoff1(eq.profile, params) - o.payoff1) <= o.bound
                  and abs(payoff2(eq.profile, params) - o.payoff2) <= o.bound)
            row["oracle_ok"] = bool(ok)
        except NoConvergence:
            row["oracle_ok"] = "no-convergence"
    return row


def worker_count() -> int:
    """Parallelism cap from ``BITRADE_THREADS`` (default: all CPUs)."""
    env = os.environ.get("BITRADE_THREADS")
    cpus = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cpus))
        except ValueError:
            raise ConfigError(f"BITRADE_THREADS must be an integer, got {env!r}")
    return cpus


def _run_sweep(cfg: RunConfig) -> OutputBundle:
    sw = cfg.sweep
    instances, counts = stratified_instances(sw["draws"], cfg.options["seed"], sw["ranges"])
    jobs = [(i, inst.params, inst.prices, sw["oracle_grid_n"]) for i, inst in enumerate(instances)]
    workers = worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_evaluate, jobs, chunksize=64))
    else:
        rows = [_evaluate(j) for j in jobs]
    summary = {
        "draws": len(rows),
        "zone_counts": {str(k): v for k, v in sorted(counts.items(), key=lambda kv: str(kv[0]))},
        "fixed_point_failures": sum(not r["fixed_point"] for r in rows),
        "lemma_failures": sum(not r["lemma_ok"] for r in rows),
    }
    if sw["oracle_grid_n"]:
        summary["oracle_agreement"] = sum(r["oracle_ok"] is True for r in rows) / len(rows)
    return OutputBundle(summary, sweep_rows=rows)


_RUNNERS = {
    "equilibrium": _run_equilibrium,
    "zones": _run_zones,
    "discrete": _run_discrete,
    "ode": _run_ode,
    "sde": _run_sde,
    "sweep": _run_sweep,
}


def run(cfg: RunConfig) -> OutputBundle:
    """Execute a validated config; the summary embeds version and resolved config."""
    bundle = _RUNNERS[cfg.mode](cfg)
    bundle.summary = {"version": __version__, "mode": cfg.mode, **bundle.summary,
                      "config": cfg.resolved()}
    return bundle


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="bitrade", description=__doc__.splitlines()[0])
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--out", default="bitrade-out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override options.seed")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.mode, args.seed)
        bundle = run(cfg)
        write_bundle(bundle, args.out)
    except ConfigError as exc:
        print(f"bitrade: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OrientationViolated as exc:
        print(f"bitrade: orientation violated: {exc}", file=sys.stderr)
        return EXIT_ORIENTATION
    except BitradeError as exc:
        print(f"bitrade: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if bundle.exit_code == EXIT_UNRESOLVED:
        print("bitrade: trajectory did not settle into a recognised steady state",
              file=sys.stderr)
    return bundle.exit_code


if __name__ == "__main__":
    sys.exit(main())
