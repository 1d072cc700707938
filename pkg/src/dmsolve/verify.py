"""Invariant suite shared by the test-suite and ``dmsolve verify``.

Every check returns ``(passed, detail)``. The quick level takes well under
a minute; the full level adds the Strichartz corpus, minimizer restarts, a
threshold scan and the subadditivity check.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import nonlinearity as nl
from . import oracles as orc
from . import spectral as sp
from . import thresholds as th
from .optimizer import MinimizeConfig, evaluate_H, grad_H, minimize
from .profiles import DispersionProfile, model_profile, pushforward_measure, uniform01, density_at

__all__ = ["CheckResult", "random_smooth_field", "fd_gradient_errors", "run_suite", "CHECKS",
           "format_table"]

GRID = sp.GridSpec(1024, 40.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def random_smooth_field(grid: sp.GridSpec, rng: np.random.Generator, bumps: int = 3,
                        lam: float = 1.0) -> sp.Field:
    """Sum of a few randomly placed, chirped and boosted Gaussians.

    Widths and offsets keep the field well inside the box and well
    resolved, so every spectral identity holds to rounding.
    """
    x = grid.x
    vals = np.zeros(grid.n, dtype=complex)
    for _ in range(bumps):
        c = rng.uniform(-4, 4)
        w = rng.uniform(0.6, 2.5)
        chirp = rng.uniform(-0.5, 0.5)
        k = grid.deta * rng.integers(-6, 7)
        amp = rng.normal() + 1j * rng.normal()
        vals += amp * np.exp(-(x - c) ** 2 * (1 / w ** 2 + 1j * chirp) + 1j * k * x)
    f = sp.Field(grid, vals)
    return f * math.sqrt(lam / f.power)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def fd_gradient_errors(pot, mu, dav: float = 1.0, pairs: int = 20, seed: int = 7,
                       eps: float = 1e-5, grid: sp.GridSpec = GRID) -> np.ndarray:
    """Relative gaps between central differences of ``H`` and ``Re<h, grad H>``."""
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(pairs):
        f = random_smooth_field(grid, rng, lam=rng.uniform(0.5, 2.0))
        h = random_smooth_field(grid, rng)
        fd = (evaluate_H(f + h * eps, dav, mu, pot) - evaluate_H(f - h * eps, dav, mu, pot)) / (2 * eps)
        an = sp.inner(h, grad_H(f, dav, mu, pot)).real
        errs.append(abs(fd - an) / max(abs(an), 1e-300))
    return np.array(errs)


# ---------------------------------------------------------------- checks


def check_unitarity():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(10):
        f = random_smooth_field(GRID, rng)
        r = rng.uniform(-5, 5)
        worst = max(worst, abs(sp.l2_norm(sp.propagate(f, r)) - sp.l2_norm(f)) / sp.l2_norm(f))
    return worst <= 1e-12, f"max rel norm drift {worst:.2e}"


def check_group_law():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(10):
        f = random_smooth_field(GRID, rng)
        r1, r2 = rng.uniform(-3, 3, size=2)
        a = sp.propagate(sp.propagate(f, r1), r2)
        b = sp.propagate(f, r1 + r2)
        worst = max(worst, sp.l2_norm(a - b) / sp.l2_norm(b))
    return worst <= 1e-12, f"max rel gap {worst:.2e}"


def check_kato():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        lhs, rhs = orc.kato_check(random_smooth_field(GRID, rng), strict=False)
        worst = max(worst, lhs / rhs)
    return worst <= 1 + 1e-8, f"max sup^2/(||f|| ||f'||) = {worst:.4f}"


def check_gaussian_propagator():
    worst = 0.0
    for s0 in (1.0, 2.0, 4.0, 8.0):
        p = orc.GaussianParams(1.0, s0)
        g = orc.gaussian_field(p, GRID)
        for r in (0.1, 0.5, 1.0, 2.0, -0.1, -0.5, -1.0, -2.0):
            num = sp.propagate(g, r).values
            ref = orc.gaussian_evolved(p, r, GRID.x, period=GRID.extent)
            worst = max(worst, np.linalg.norm(num - ref) / np.linalg.norm(ref))
    return worst <= 1e-9, f"max rel L2 error {worst:.2e}"


def check_lgamma_norms():
    worst = 0.0
    p = orc.GaussianParams(1.3, 2.0)
    g = orc.gaussian_field(p, GRID)
    for r in (0.0, 0.5, 1.0):
        u = sp.propagate(g, r)
        for gam in (2, 3, 4, 6):
            worst = max(worst, _rel(sp.lp_norm(u, gam) ** gam, orc.gaussian_lgamma_norm(p, r, gam)))
    return worst <= 1e-8, f"max rel error {worst:.2e}"


def check_galilei():
    rng = np.random.default_rng(4)
    f = random_smooth_field(GRID, rng)
    y = 2 * GRID.dx * 7
    v = 2 * math.pi * 3 / GRID.extent
    r = 0.7
    a = orc.galilei(f, y, v, r)
    b = sp.propagate(sp.boost(sp.translate(f, y), v), r)
    err = sp.l2_norm(a - b) / sp.l2_norm(b)
    return err <= 1e-10, f"two-path rel gap {err:.2e}"


def check_pushforward():
    profiles = {
        "model": model_profile(),
        "two-level": DispersionProfile([(2.0, 1.0), (-1.0, 2.0)]),
        "three-segment": DispersionProfile([(3.0, 1.0), (-1.0, 1.0), (-1.0, 2.0)]),
    }
    F = lambda r: np.cos(1.3 * r) + r ** 2
    worst = 0.0
    for prof in profiles.values():
        mu = pushforward_measure(prof, 32)
        quad = mu.integrate(F(mu.nodes))
        # independent: psi is constant between sorted corner values
        levels = np.unique(np.round(prof.corner_values(), 14))
        ref = 0.0
        for a, b in zip(levels[:-1], levels[1:]):
            psi = density_at(prof, 0.5 * (a + b))
            m = 20000
            mid = a + (np.arange(m) + 0.5) * (b - a) / m
            ref += psi * float(np.sum(F(mid))) * (b - a) / m
        worst = max(worst, _rel(quad, ref))
    return worst <= 1e-8, f"max rel gap {worst:.2e}"


def check_support_and_weights():
    ok = True
    for prof in (model_profile(), DispersionProfile([(2.0, 1.0), (-1.0, 2.0)])):
        lo, hi = prof.support()
        L = prof.period
        bound = 0.5 * L * max(abs(d) for d, _ in prof.segments)
        mu = pushforward_measure(prof, 16)
        ok &= hi - lo <= bound * (1 + 1e-12)
        ok &= bool(np.all(mu.weights >= 0)) and abs(mu.weights.sum() - 1) <= 1e-12
    return bool(ok), "support within (L/2) max|d0|; weights nonnegative, unit sum"


def check_homogeneity():
    rng = np.random.default_rng(5)
    mu = uniform01(32)
    worst = 0.0
    for gam in (3.0, 4.0, 6.0, 8.0):
        pot = nl.pure_power(1.0, gam)
        f = random_smooth_field(GRID, rng)
        for s in (0.5, 2.0, 3.0):
            worst = max(worst, _rel(nl.evaluate_N(f * s, mu, pot), s ** gam * nl.evaluate_N(f, mu, pot)))
    return worst <= 1e-12, f"max rel error {worst:.2e}"


def check_a2_consequence():
    rng = np.random.default_rng(6)
    mu = uniform01(32)
    pots = [(nl.kerr(), 4.0), (nl.Potential([(1.0, 4.0), (1.0, 6.0)]), 4.0),
            (nl.pure_power(1.0, 6.0), 6.0)]
    ok = True
    for pot, g0 in pots:
        if not nl.check_A2(pot, g0):
            return False, f"A2 unexpectedly fails for {pot.terms}"
        f = random_smooth_field(GRID, rng)
        n_f = nl.evaluate_N(f, mu, pot)
        for rho in (1.0, 1.5, 2.0, 4.0):
            ok &= nl.evaluate_N(f * math.sqrt(rho), mu, pot) >= rho ** (g0 / 2) * n_f - 1e-10 * (1 + abs(n_f))
    return bool(ok), "N(rho^1/2 f) >= rho^(gamma0/2) N(f) for rho in {1, 1.5, 2, 4}"


def _gradient_check(pairs):
    mu = uniform01(32)
    pots = {"kerr": nl.kerr(), "-a^4+a^8": nl.Potential([(-1.0, 4.0), (1.0, 8.0)])}
    worst = {k: float(fd_gradient_errors(p, mu, pairs=pairs).max()) for k, p in pots.items()}
    return max(worst.values()) <= 1e-6, ", ".join(f"{k}: {v:.1e}" for k, v in worst.items())


def check_gradient_quick():
    return _gradient_check(5)


def check_gradient_full():
    return _gradient_check(20)


def check_symmetry_invariance():
    rng = np.random.default_rng(8)
    mu = pushforward_measure(model_profile(), 32)
    f = random_smooth_field(GRID, rng)
    n0 = nl.evaluate_N(f, mu, nl.kerr())
    worst = 0.0
    for k in (1, 5, -13):
        worst = max(worst, _rel(nl.evaluate_N(sp.translate(f, k * GRID.dx), mu, nl.kerr()), n0))
        worst = max(worst, _rel(nl.evaluate_N(sp.boost(f, k * GRID.deta), mu, nl.kerr()), n0))
    return worst <= 1e-9, f"max rel change {worst:.2e}"


def check_r_scaling():
    rng = np.random.default_rng(9)
    mu = uniform01(32)
    worst = 0.0
    for gam in (4.0, 6.0, 8.0):
        pot = nl.pure_power(1.0, gam)
        h = random_smooth_field(GRID, rng)
        for l1, l2 in ((1.0, 4.0), (0.3, 2.0)):
            ratio = th.r_value(l2, h, mu, pot) / th.r_value(l1, h, mu, pot)
            worst = max(worst, _rel(ratio, (l2 / l1) ** ((gam - 2) / 2)))
    return worst <= 1e-12, f"max rel error {worst:.2e}"


def check_probe_vs_grid():
    mu = uniform01(64)
    worst = 0.0
    for gam in (4.0, 8.0):
        pot = nl.pure_power(1.0, gam)
        for s0 in (0.5, 1.0, 2.0, 4.0):
            rep = th.nonexistence_probe(gam, 1.0, 1.0, 1.0, mu, [s0])
            g = orc.gaussian_field(orc.GaussianParams(1.0, s0), GRID)
            worst = max(worst, _rel(rep.energies[0], evaluate_H(g, 1.0, mu, pot)))
    return worst <= 1e-6, f"max rel gap {worst:.2e}"


def check_g_alpha():
    s = np.geomspace(1e-3, 1e6, 200)
    ok = True
    for alpha in (0.1, 0.5, 1.0):
        vals = np.array([th.g_alpha(alpha, v) for v in s])
        ok &= bool(np.all(np.diff(vals) < 0))
    return ok, "strictly decreasing on a log grid for alpha in {0.1, 0.5, 1}"


def check_minimizer():
    mu = uniform01(64)
    cfg = MinimizeConfig(lam=1.0, dav=1.0)
    res = minimize(cfg, mu, nl.kerr())
    gauss = min(evaluate_H(orc.gaussian_field(orc.GaussianParams(1.0, s), GRID), 1.0, mu, nl.kerr())
                for s in cfg.sigma0_init)
    ok = (res.converged and res.energy <= gauss and res.el_residual <= 1e-6
          and res.omega < 2 * res.energy < 0 and abs(res.field.power - 1) <= 1e-10)
    return ok, (f"E={res.energy:.8f} (Gaussian bound {gauss:.8f}), omega={res.omega:.6f}, "
                f"residual={res.el_residual:.1e}")


def check_translation_minimize():
    mu = uniform01(64)
    a = minimize(MinimizeConfig(lam=1.0), mu, nl.kerr())
    b = minimize(MinimizeConfig(lam=1.0, init_shift=3.3), mu, nl.kerr())
    gap = abs(a.energy - b.energy)
    return gap <= 1e-7, f"energy gap {gap:.1e}"


def check_strichartz_corpus():
    rng = np.random.default_rng(10)
    g = orc.gaussian_field(orc.GaussianParams(1.0, 2.0), GRID)
    gauss = orc.strichartz_ratio(g)
    worst = -math.inf
    for _ in range(50):
        worst = max(worst, orc.strichartz_ratio(random_smooth_field(GRID, rng)))
    ok = abs(gauss - orc.STRICHARTZ_SHARP) <= 1e-4 and worst <= orc.STRICHARTZ_SHARP + 1e-6
    return ok, f"Gaussian {gauss:.8f}, worst random {worst:.6f}, sharp {orc.STRICHARTZ_SHARP:.8f}"


def check_threshold_scan():
    scan = th.threshold_scan(1.0, nl.pure_power(1.0, 6.0), uniform01(64), (0.05, 100.0))
    ok = scan.outcome == "bracketed" and scan.consistent() and scan.monotone()
    return ok, f"a^6 bracket [{scan.bracket[0]:.5f}, {scan.bracket[1]:.5f}]"


def check_subadditivity():
    rep = th.subadditivity_check(2.0, 1.0, 1.0, 0.9, 4.0, 1.0, uniform01(64), nl.kerr())
    return rep["holds"] and not rep["inconclusive"], f"margin {rep['margin']:.4f}"


def check_cs_invariance():
    g = orc.gaussian_field(orc.GaussianParams(1.0, 2.0), GRID)
    rep = th.cs_invariance_check(g, 1.0, 2.0)
    return rep["rel_err"] <= 1e-6 and not rep["inconclusive"], f"rel err {rep['rel_err']:.1e}"


CHECKS: list[tuple[str, str, Callable]] = [
    ("propagator unitarity", "quick", check_unitarity),
    ("propagator group law", "quick", check_group_law),
    ("Kato bound", "quick", check_kato),
    ("Gaussian propagator vs closed form", "quick", check_gaussian_propagator),
    ("Gaussian L^gamma norms", "quick", check_lgamma_norms),
    ("Galilei identity", "quick", check_galilei),
    ("pushforward vs density", "quick", check_pushforward),
    ("support bound and weights", "quick", check_support_and_weights),
    ("pure-power homogeneity", "quick", check_homogeneity),
    ("A2 lower scaling of N", "quick", check_a2_consequence),
    ("gradient vs finite differences (5 pairs)", "quick", check_gradient_quick),
    ("translation/boost invariance of N", "quick", check_symmetry_invariance),
    ("R scaling for pure powers", "quick", check_r_scaling),
    ("probe closed form vs grid", "quick", check_probe_vs_grid),
    ("G_alpha monotone", "quick", check_g_alpha),
    ("C_s invariance", "quick", check_cs_invariance),
    ("Kerr minimizer", "quick", check_minimizer),
    ("gradient vs finite differences (20 pairs)", "full", check_gradient_full),
    ("minimizer translation test", "full", check_translation_minimize),
    ("Strichartz corpus", "full", check_strichartz_corpus),
    ("a^6 threshold scan", "full", check_threshold_scan),
    ("subadditivity", "full", check_subadditivity),
]


def run_suite(level: str = "quick", only=None) -> list[CheckResult]:
    if level not in ("quick", "full"):
        raise ValueError(f"level must be 'quick' or 'full', got {level!r}")
    out = []
    for name, lvl, fn in CHECKS:
        if level == "quick" and lvl == "full":
            continue
        if only is not None and name not in only:
            continue
        t0 = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(passed), detail, time.perf_counter() - t0))
    return out


def format_table(results) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  time    detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  "
                     f"{r.seconds:6.1f}s  {r.detail}")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} passed")
    return "\n".join(lines)
