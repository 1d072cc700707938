"""Command-line front end.

Usage::

    dmsolve minimize  --config run.json --out results/
    dmsolve threshold --config scan.json --out results/
    dmsolve probe     --config probe.json --out results/
    dmsolve density   --config density.json --out results/
    dmsolve gaussian  --config gauss.json --out results/
    dmsolve verify    --level quick

Exit codes: 0 success, 1 configuration error, 2 minimizer did not converge,
3 energy unbounded below, 4 numerically inconclusive (or failed checks).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as dio
from .errors import DMSError, InvalidInputError, UnboundedBelowError
from .nonlinearity import Potential, default_quad_nodes, kerr, potential_from_json, potential_to_json
from .optimizer import MinimizeConfig, minimize
from .oracles import (GaussianParams, gaussian_evolved, gaussian_h1_seminorm_sq,
                      gaussian_lgamma_norm)
from .profiles import RMeasure, measure_from_spec, profile_from_json, profile_table
from .spectral import GridSpec
from .thresholds import nonexistence_probe, threshold_scan

log = logging.getLogger("dmsolve")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2
EXIT_UNBOUNDED = 3
EXIT_INCONCLUSIVE = 4

_OPTIMIZER_KEYS = {"max_iters", "grad_tol", "sigma0_init", "gauge_fix_every", "noise",
                   "backtrack", "armijo", "step_bounds", "precondition", "lowpass_fraction",
                   "dispersal_rel", "max_step_rel", "init_shift"}
_TOP_KEYS = {"grid", "potential", "measure", "quadrature", "dav", "lambda", "optimizer",
             "output", "threshold", "probe", "density", "gaussian", "seed"}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Validated configuration; defaults n=1024, extent=40, 64 nodes, grad_tol=1e-8."""

    raw: dict
    grid: GridSpec
    quadrature: int
    dav: float
    lam: float | None
    seed: int
    optimizer: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def potential(self) -> Potential:
        spec = self.raw.get("potential", "kerr")
        if spec == "kerr":
            return kerr()
        if not isinstance(spec, dict):
            raise ConfigError("potential must be \"kerr\" or an object with \"terms\"")
        return potential_from_json(spec)

    def measure(self) -> RMeasure:
        return measure_from_spec(self.raw.get("measure", "uniform01"), self.quadrature)

    def minimize_config(self, lam: float, threads: int = 1) -> MinimizeConfig:
        opts = dict(self.optimizer)
        for key in ("sigma0_init", "step_bounds"):
            if key in opts:
                opts[key] = tuple(opts[key])
        return MinimizeConfig(lam=lam, dav=self.dav, grid=self.grid, seed=self.seed,
                              threads=threads, **opts)


def _number(d: dict, key: str, default=None, positive=False, integer=False):
    val = d.get(key, default)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{key!r} must be a number, got {val!r}")
    if integer and int(val) != val:
        raise ConfigError(f"{key!r} must be an integer, got {val!r}")
    if not math.isfinite(val):
        raise ConfigError(f"{key!r} must be finite")
    if positive and val <= 0:
        raise ConfigError(f"{key!r} must be positive, got {val!r}")
    return int(val) if integer else float(val)


def load_config(path, seed: int | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return parse_config(raw, seed)


def parse_config(raw, seed: int | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    g = raw.get("grid", {})
    if not isinstance(g, dict):
        raise ConfigError("'grid' must be an object with n and extent")
    try:
        grid = GridSpec(_number(g, "n", 1024, positive=True, integer=True),
                        _number(g, "extent", 40.0, positive=True))
    except InvalidInputError as exc:
        raise ConfigError(str(exc)) from exc
    quad = raw.get("quadrature")
    quad = default_quad_nodes() if quad is None else _number(raw, "quadrature", integer=True,
                                                              positive=True)
    dav = _number(raw, "dav", 1.0)
    if dav < 0:
        raise ConfigError("'dav' must be nonnegative")
    lam = _number(raw, "lambda", None, positive=True)
    opt = raw.get("optimizer", {})
    if not isinstance(opt, dict):
        raise ConfigError("'optimizer' must be an object")
    bad = set(opt) - _OPTIMIZER_KEYS
    if bad:
        raise ConfigError(f"unknown optimizer keys: {sorted(bad)}")
    out = raw.get("output", {})
    if not isinstance(out, dict):
        raise ConfigError("'output' must be an object")
    s = seed if seed is not None else raw.get("seed", 0)
    if not isinstance(s, int) or isinstance(s, bool) or s < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {s!r}")
    return RunConfig(raw, grid, quad, dav, lam, s, opt, out)


def _schedule(spec, default):
    """A list of numbers, or ``{"start", "stop", "num"}`` (geometric unless ``"linear"``)."""
    if spec is None:
        return np.asarray(default, dtype=float)
    if isinstance(spec, list):
        arr = np.asarray(spec, dtype=float)
    elif isinstance(spec, dict):
        start = _number(spec, "start")
        stop = _number(spec, "stop")
        num = _number(spec, "num", 50, positive=True, integer=True)
        if start is None or stop is None:
            raise ConfigError("schedule needs 'start' and 'stop'")
        if spec.get("linear", False):
            arr = np.linspace(start, stop, num)
        else:
            if start <= 0 or stop <= 0:
                raise ConfigError("geometric schedule needs positive start and stop")
            arr = np.geomspace(start, stop, num)
    else:
        raise ConfigError(f"schedule must be a list or an object, got {spec!r}")
    if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ConfigError("schedule must be a nonempty list of finite numbers")
    return arr


def _outdir(out) -> Path:
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


# ---------------------------------------------------------------- commands


def cmd_minimize(cfg: RunConfig, out: Path, threads: int = 1) -> int:
    if cfg.lam is None:
        raise ConfigError("minimize needs 'lambda'")
    pot, mu = cfg.potential(), cfg.measure()
    mcfg = cfg.minimize_config(cfg.lam, threads)
    names = {"result": "result.json", "field": "out.dmsf", **cfg.output}
    try:
        res = minimize(mcfg, mu, pot)
    except UnboundedBelowError as exc:
        dio.write_json(out / names["result"], {"status": "unbounded", "message": str(exc),
                                               "lambda": cfg.lam, "dav": cfg.dav})
        print(f"energy unbounded below: {exc}")
        return EXIT_UNBOUNDED
    dio.write_field(out / names["field"], res.field)
    payload = res.to_json(names["field"])
    payload.update({"lambda": cfg.lam, "dav": cfg.dav, "potential": potential_to_json(pot)})
    dio.write_json(out / names["result"], payload)
    print(f"energy={res.energy!r} omega={res.omega!r} el_residual={res.el_residual:.2e} "
          f"status={res.status}")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_threshold(cfg: RunConfig, out: Path, threads: int = 1) -> int:
    block = cfg.raw.get("threshold", {})
    if not isinstance(block, dict) or "bracket" not in block:
        raise ConfigError("threshold needs a 'threshold' block with 'bracket'")
    br = block["bracket"]
    if not (isinstance(br, list) and len(br) == 2):
        raise ConfigError("'bracket' must be [lambda_lo, lambda_hi]")
    e_tol = _number(block, "E_tol", 1e-7, positive=True)
    b_tol = _number(block, "bisect_tol", 1e-2, positive=True)
    pot, mu = cfg.potential(), cfg.measure()
    base = cfg.minimize_config(float(br[0]) if br[0] else 1.0, threads)
    try:
        scan = threshold_scan(cfg.dav, pot, mu, (float(br[0]), float(br[1])), E_tol=e_tol,
                              bisect_tol=b_tol, config=base)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    names = {"scan": "scan.csv", "result": "threshold.json", **cfg.output}
    (out / names["scan"]).write_text(scan.to_csv())
    dio.write_json(out / names["result"], {
        "dav": cfg.dav, "bracket": list(scan.bracket), "lambda_cr": scan.lam_cr,
        "outcome": scan.outcome, "E_tol": e_tol, "bisect_tol": b_tol,
        "monotone": scan.monotone(), "consistent": scan.consistent()})
    print(f"outcome={scan.outcome} bracket=[{scan.bracket[0]!r}, {scan.bracket[1]!r}]")
    return EXIT_INCONCLUSIVE if scan.outcome == "no_threshold" else EXIT_OK


def cmd_probe(cfg: RunConfig, out: Path, threads: int = 1) -> int:
    block = cfg.raw.get("probe", {})
    if not isinstance(block, dict):
        raise ConfigError("'probe' must be an object")
    gamma = _number(block, "gamma", None, positive=True)
    if gamma is None:
        raise ConfigError("probe needs 'gamma'")
    c = _number(block, "c", 1.0, positive=True)
    lam = cfg.lam if cfg.lam is not None else 1.0
    sched = _schedule(block.get("schedule"), np.geomspace(1.0, 1e-6, 61))
    if np.any(sched <= 0):
        raise ConfigError("sigma0 schedule must be positive")
    rep = nonexistence_probe(gamma, c, cfg.dav, lam, cfg.measure(), sched)
    names = {"table": "probe.csv", "result": "probe.json", **cfg.output}
    dio.write_csv(out / names["table"], ["sigma0", "energy"], rep.rows())
    dio.write_json(out / names["result"], {
        "gamma": gamma, "c": c, "dav": cfg.dav, "lambda": lam, "crosses": rep.crosses,
        "unbounded": rep.unbounded, "minimum": rep.minimum})
    print(f"minimum={rep.minimum!r} crosses={rep.crosses} unbounded={rep.unbounded}")
    return EXIT_OK


def cmd_density(cfg: RunConfig, out: Path, threads: int = 1) -> int:
    block = cfg.raw.get("density", {})
    if not isinstance(block, dict):
        raise ConfigError("'density' must be an object")
    prof = profile_from_json(block.get("profile", "model"))
    lo, hi = prof.support()
    pad = 0.05 * (hi - lo)
    rs = _schedule(block.get("r"), np.linspace(lo - pad, hi + pad, 45))
    rows = []
    for r, psi in profile_table(prof, rs):
        rows.append((r, psi))
    names = {"table": "density.csv", **cfg.output}
    dio.write_csv(out / names["table"], ["r", "psi"], rows)
    print(f"{len(rows)} rows, support [{lo!r}, {hi!r}]")
    return EXIT_OK


def cmd_gaussian(cfg: RunConfig, out: Path, threads: int = 1) -> int:
    block = cfg.raw.get("gaussian", {})
    if not isinstance(block, dict):
        raise ConfigError("'gaussian' must be an object")
    lam = cfg.lam if cfg.lam is not None else 1.0
    sig = block.get("sigma0", [1.0, 2.0, 4.0, 8.0])
    if not isinstance(sig, list) or not sig:
        raise ConfigError("'sigma0' must be a nonempty list")
    rs = _schedule(block.get("r"), [0.0, 0.1, 0.5, 1.0, 2.0])
    rows = []
    for s in sig:
        s0 = complex(s[0], s[1]) if isinstance(s, list) else complex(s)
        p = GaussianParams(lam, s0)
        for r in rs:
            rows.append((s0.real, s0.imag, float(r), p.amplitude,
                         float(abs(gaussian_evolved(p, float(r), 0.0))),
                         gaussian_h1_seminorm_sq(p), gaussian_lgamma_norm(p, float(r), 4.0),
                         gaussian_lgamma_norm(p, float(r), 6.0)))
    names = {"table": "gaussian.csv", **cfg.output}
    dio.write_csv(out / names["table"],
                  ["sigma0_re", "sigma0_im", "r", "amplitude", "peak_modulus", "h1_seminorm_sq",
                   "l4_norm4", "l6_norm6"], rows)
    print(f"{len(rows)} rows")
    return EXIT_OK


def cmd_verify(level: str) -> int:
    from .verify import format_table, run_suite

    results = run_suite(level)
    print(format_table(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("FAILED: " + ", ".join(failed))
        return EXIT_INCONCLUSIVE
    return EXIT_OK


COMMANDS = {"minimize": cmd_minimize, "threshold": cmd_threshold, "probe": cmd_probe,
            "density": cmd_density, "gaussian": cmd_gaussian}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dmsolve", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    v = sub.add_parser("verify")
    v.add_argument("--level", choices=("quick", "full"), default="quick")
    v.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; map onto the config-error code
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "verify":
        return cmd_verify(args.level)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.seed)
        out = _outdir(args.out)
        return COMMANDS[args.command](cfg, out, args.threads)
    except (ConfigError, InvalidInputError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DMSError, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


if __name__ == "__main__":
    sys.exit(main())
