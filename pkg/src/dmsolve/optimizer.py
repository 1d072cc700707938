"""Minimization of ``H(f) = dav/2 ||f'||^2 - N(f)`` on the sphere ``||f||^2 = lam``.

The scheme is a projected (Riemannian) gradient descent with retraction by
renormalization. Directions are preconditioned with ``(alpha + dav eta^2)^-1``,
the usual Sobolev-gradient trick for ground states, so that the step size
is not limited by the stiffest Fourier mode. Step lengths start from a
Barzilai-Borwein estimate and are backtracked until an Armijo condition
holds, so accepted steps never raise ``H``. Stopping uses the tangent
gradient ``grad H - omega f``, which is exactly the Euler-Lagrange residual
times ``||f||``.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, UnboundedBelowError
from .nonlinearity import Potential, _grad_and_value, check_A2, evaluate_N
from .oracles import GaussianParams, gaussian_field
from .profiles import RMeasure
from .spectral import (Field, GridSpec, boost, boundary_mass, h1_seminorm, inner,
                       low_pass, second_derivative, translate)

__all__ = [
    "MinimizeConfig",
    "MinimizeResult",
    "RunRecord",
    "evaluate_H",
    "grad_H",
    "energy_and_gradient",
    "minimize",
    "lagrange_multiplier",
    "el_residual",
    "normalize",
    "quadrature_error",
]

log = logging.getLogger(__name__)

DIVERGENCE_FLOOR = -1e12
QUAD_WARN = 1e-6


@dataclass
class MinimizeConfig:
    lam: float
    dav: float = 1.0
    grid: GridSpec = field(default_factory=lambda: GridSpec(1024, 40.0))
    max_iters: int = 20000
    grad_tol: float = 1e-8
    sigma0_init: tuple = (1.0, 2.0, 4.0, 8.0)
    gauge_fix_every: int = 50
    seed: int | None = 0
    noise: float = 1e-3
    backtrack: float = 0.5
    armijo: float = 1e-4
    step_bounds: tuple = (1e-6, 1e2)
    precondition: bool = True
    lowpass_fraction: float = 2.0 / 3.0
    init_shift: float = 0.0
    # stop a run once the field reaches the box edge (it is dispersing)
    dispersal_rel: float = 1e-4
    max_step_rel: float = 0.25
    descent_slack: float = 1e-14
    threads: int = 1

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidInputError("lambda must be positive")
        if not self.dav >= 0:
            raise InvalidInputError("dav must be nonnegative")
        if not (self.grad_tol > 0 and self.max_iters > 0):
            raise InvalidInputError("tolerances and iteration caps must be positive")
        if not self.sigma0_init:
            raise InvalidInputError("need at least one starting width")


@dataclass
class RunRecord:
    sigma0: float
    field: Field
    energy: float
    omega: float
    grad_norm: float
    iterations: int
    status: str
    history: list

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def summary(self) -> dict:
        return {"sigma0": self.sigma0, "energy": self.energy, "omega": self.omega,
                "grad_norm": self.grad_norm, "iterations": self.iterations,
                "status": self.status}


@dataclass
class MinimizeResult:
    field: Field
    energy: float
    omega: float
    el_residual: float
    iterations: int
    converged: bool
    history: list
    status: str = "converged"
    restarts: list = field(default_factory=list)
    # relative change of N when the r-quadrature is refined twofold
    quad_error: float = float("nan")

    def to_json(self, field_file: str | None = None) -> dict:
        return {"energy": self.energy, "omega": self.omega,
                "el_residual": self.el_residual, "iterations": self.iterations,
                "converged": self.converged, "status": self.status,
                "quad_error": self.quad_error,
                "field_file": field_file,
                "restarts": [r for r in self.restarts]}


def normalize(f: Field, lam: float) -> Field:
    p = f.power
    if p == 0:
        raise InvalidInputError("cannot normalize the zero field")
    return f * math.sqrt(lam / p)


def evaluate_H(f: Field, dav: float, mu: RMeasure, pot: Potential) -> float:
    kin = 0.5 * dav * h1_seminorm(f) ** 2 if dav else 0.0
    return kin - evaluate_N(f, mu, pot)


def energy_and_gradient(f: Field, dav: float, mu: RMeasure, pot: Potential):
    """``(H(f), grad H(f))`` in one pass over the quadrature nodes."""
    gn, n_val = _grad_and_value(f, mu, pot)
    if dav:
        g = f.grid
        fk = np.fft.fft(f.values)
        kin = 0.5 * dav * g.dx / g.n * float(np.sum(g.eta ** 2 * np.abs(fk) ** 2))
        lap = np.fft.ifft(g.eta ** 2 * fk)
        return kin - n_val, Field(g, dav * lap - gn.values)
    return -n_val, -gn


def grad_H(f: Field, dav: float, mu: RMeasure, pot: Potential) -> Field:
    """``-dav f'' - grad_N(f)``; ``D_h H(f) = Re<h, grad_H>``."""
    return energy_and_gradient(f, dav, mu, pot)[1]


def lagrange_multiplier(f: Field, dav: float, mu: RMeasure, pot: Potential) -> float:
    """``omega = Re<f, grad H(f)> / ||f||^2``."""
    lam = f.power
    if lam == 0:
        raise InvalidInputError("multiplier undefined for the zero field")
    return inner(f, grad_H(f, dav, mu, pot)).real / lam


def el_residual(f: Field, omega: float, dav: float, mu: RMeasure, pot: Potential) -> float:
    """``||omega f + dav f'' + int T_r^-1[V'(|T_r f|) sgn T_r f] dmu|| / ||f||``."""
    g = grad_H(f, dav, mu, pot)
    res = omega * f - g
    return math.sqrt(res.power / f.power)


def quadrature_error(f: Field, mu: RMeasure, pot: Potential) -> float:
    """Relative change of ``N(f)`` under a twofold refinement of ``mu``.

    ``nan`` when the measure carries no density to refine.
    """
    if mu.pieces is None:
        return float("nan")
    coarse = evaluate_N(f, mu, pot)
    fine = evaluate_N(f, mu.refined(2), pot)
    return abs(coarse - fine) / max(abs(fine), 1e-300)


def _circular_centroid(f: Field) -> float:
    g = f.grid
    w = np.abs(f.values) ** 2
    z = np.sum(w * np.exp(2j * np.pi * g.x / g.extent))
    return float(np.angle(z) * g.extent / (2 * np.pi))


def _gauge_fix(f: Field, dav: float, lam: float, fraction: float) -> Field:
    f = translate(f, -_circular_centroid(f))
    if dav == 0:
        g = f.grid
        p = np.abs(np.fft.fft(f.values)) ** 2
        k = round(float(np.sum(g.eta * p) / p.sum()) / g.deta)
        if k:
            f = boost(f, -k * g.deta)
    if fraction < 1:
        f = low_pass(f, fraction)
    return normalize(f, lam)


def _smooth_noise(grid: GridSpec, rng: np.random.Generator, width: float) -> np.ndarray:
    """Random band-limited bump of unit L2 norm supported near the origin."""
    x = grid.x
    kmax = 4
    modes = rng.normal(size=(2, kmax)) + 1j * rng.normal(size=(2, kmax))
    z = np.zeros(grid.n, dtype=complex)
    for k in range(kmax):
        z += modes[0, k] * np.cos((k + 1) * x / width) + modes[1, k] * np.sin((k + 1) * x / width)
    z *= np.exp(-x ** 2 / (2 * width ** 2))
    return z / math.sqrt(grid.dx * np.sum(np.abs(z) ** 2))


def _initial_field(cfg: MinimizeConfig, sigma0: float, index: int) -> Field:
    f = gaussian_field(GaussianParams(cfg.lam, sigma0), cfg.grid)
    if cfg.seed is not None and cfg.noise > 0:
        rng = np.random.default_rng([cfg.seed, index])
        bump = _smooth_noise(cfg.grid, rng, math.sqrt(sigma0))
        f = f + cfg.noise * math.sqrt(cfg.lam) * bump
    if cfg.init_shift:
        f = translate(f, cfg.init_shift)
    return normalize(f, cfg.lam)


class _Descent:
    """One projected-gradient run from a fixed starting field."""

    def __init__(self, cfg: MinimizeConfig, mu: RMeasure, pot: Potential):
        self.cfg = cfg
        self.mu = mu
        self.pot = pot
        eta2 = cfg.grid.eta ** 2
        self.eta2 = eta2

    def precondition(self, vals: np.ndarray, shift: float) -> np.ndarray:
        if not self.cfg.precondition or self.cfg.dav == 0:
            return vals / shift
        return np.fft.ifft(np.fft.fft(vals) / (shift + self.cfg.dav * self.eta2))

    def run(self, f: Field, sigma0: float) -> RunRecord:
        cfg, mu, pot, lam = self.cfg, self.mu, self.pot, self.cfg.lam
        dx = cfg.grid.dx
        tmin, tmax = cfg.step_bounds
        H, G = energy_and_gradient(f, cfg.dav, mu, pot)
        history = []
        status = "max_iters"
        tau = 1.0
        prev = None
        shift = None
        omega = gnorm = float("nan")
        it = 0
        last_valid = None
        edge_tol = cfg.dispersal_rel * lam
        for it in range(cfg.max_iters + 1):
            if boundary_mass(f) > edge_tol:
                # the field feels the periodic box: report the last iterate
                # that did not, since later energies carry torus artifacts
                status = "dispersed"
                if last_valid is not None:
                    f, H, omega, gnorm = last_valid
                break
            omega = dx * np.vdot(f.values, G.values).real / lam
            tang = G.values - omega * f.values
            gnorm = math.sqrt(dx * float(np.sum(np.abs(tang) ** 2)))
            history.append((it, H, gnorm))
            last_valid = (f, H, omega, gnorm)
            if not math.isfinite(H) or H < DIVERGENCE_FLOOR:
                status = "diverged"
                break
            if gnorm <= cfg.grad_tol * max(1.0, abs(H)):
                status = "converged"
                break
            if it == cfg.max_iters:
                break
            if it and it % cfg.gauge_fix_every == 0:
                f = _gauge_fix(f, cfg.dav, lam, cfg.lowpass_fraction)
                H, G = energy_and_gradient(f, cfg.dav, mu, pot)
                prev = None
                shift = None
                continue
            if shift is None:
                shift = max(abs(omega), 1e-2)
            pg = self.precondition(G.values, shift)
            pf = self.precondition(f.values, shift)
            beta = np.vdot(f.values, pg).real / np.vdot(f.values, pf).real
            d = pg - beta * pf
            slope = dx * np.vdot(G.values, d).real
            if slope <= 0:
                status = "stalled"
                break
            if prev is not None:
                s_vec, y_vec = f.values - prev[0], tang - prev[1]
                sy = dx * np.vdot(s_vec, y_vec).real
                # BB1 in the metric induced by the preconditioner
                ps = np.fft.ifft(np.fft.fft(s_vec) * (shift + cfg.dav * self.eta2)) \
                    if cfg.precondition and cfg.dav else s_vec * shift
                ss = dx * np.vdot(s_vec, ps).real
                tau = ss / sy if sy > 0 else 2 * tau
            tau = min(max(tau, tmin), tmax)
            # trust cap: never move more than max_step_rel of the field at once
            dnorm = math.sqrt(dx * float(np.sum(np.abs(d) ** 2)))
            tau = min(tau, cfg.max_step_rel * math.sqrt(lam) / dnorm)
            slack = cfg.descent_slack * max(1.0, abs(H))
            accepted = edge_hit = False
            for _ in range(60):
                trial = Field(cfg.grid, f.values - tau * d)
                trial = normalize(trial, lam)
                if boundary_mass(trial) > edge_tol:
                    edge_hit = True
                    tau *= cfg.backtrack
                    continue
                H_new, G_new = energy_and_gradient(trial, cfg.dav, mu, pot)
                if H_new <= H - cfg.armijo * tau * slope + slack:
                    accepted = True
                    break
                tau *= cfg.backtrack
            if not accepted:
                status = "dispersed" if edge_hit else "stalled"
                break
            prev = (f.values, tang)
            f, H, G = trial, H_new, G_new
        return RunRecord(sigma0, f, float(H), float(omega), float(gnorm), it, status, history)


def _probe_unbounded(cfg: MinimizeConfig, mu: RMeasure, pot: Potential) -> bool:
    """Closed-form Gaussian energies collapse to below -1e3 as sigma0 -> 0."""
    if not pot.is_pure_power or mu.pieces is None or pot.coeffs[0] <= 0:
        return False
    from .thresholds import nonexistence_probe

    rep = nonexistence_probe(pot.powers[0], pot.coeffs[0], cfg.dav, cfg.lam, mu)
    return rep.unbounded


def minimize(cfg: MinimizeConfig, mu: RMeasure, pot: Potential,
             probe: bool = True) -> MinimizeResult:
    """Multi-start constrained minimization; returns the lowest-energy run.

    Raises :class:`UnboundedBelowError` when every run diverges, or when the
    closed-form Gaussian probe (pure powers only, ``probe=True``) shows the
    energy collapsing as the width shrinks.
    """
    g0 = pot.gamma0
    if g0 is not None and not check_A2(pot, g0):
        warnings.warn("potential fails the A2 sample check; the multiplier bound "
                      "and subadditivity guarantees do not apply", RuntimeWarning,
                      stacklevel=2)
    if probe and _probe_unbounded(cfg, mu, pot):
        raise UnboundedBelowError("Gaussian probe: H(g_sigma0) -> -inf as sigma0 -> 0")

    starts = []
    for i, s0 in enumerate(cfg.sigma0_init):
        try:
            starts.append((s0, _initial_field(cfg, s0, i)))
        except InvalidInputError as exc:
            log.info("skipping sigma0=%s: %s", s0, exc)
    if not starts:
        raise InvalidInputError("no starting Gaussian fits the grid")

    descent = _Descent(cfg, mu, pot)
    if cfg.threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            runs = list(pool.map(lambda sf: descent.run(sf[1], sf[0]), starts))
    else:
        runs = [descent.run(f, s0) for s0, f in starts]

    finite = [r for r in runs if r.status != "diverged"]
    if not finite:
        raise UnboundedBelowError("all restarts diverged",
                                  [r.energy for r in runs])
    # lowest energy wins; ties keep the earlier start so results are deterministic
    best = min(finite, key=lambda r: (r.energy, runs.index(r)))
    omega = lagrange_multiplier(best.field, cfg.dav, mu, pot)
    res = el_residual(best.field, omega, cfg.dav, mu, pot)
    qerr = quadrature_error(best.field, mu, pot)
    if qerr > QUAD_WARN:
        warnings.warn(f"r-quadrature changes N by {qerr:.1e} (relative) on refinement; "
                      "the minimizer is under-resolved in r, add quadrature nodes",
                      RuntimeWarning, stacklevel=2)
    return MinimizeResult(
        field=best.field, energy=best.energy, omega=omega, el_residual=res,
        iterations=sum(r.iterations for r in runs), converged=best.converged,
        history=best.history, status=best.status,
        restarts=[r.summary() for r in runs], quad_error=qerr)
