"""Existence thresholds and the checks that surround them.

The sign of the ground-state energy decides everything: minimizers exist
once ``E_lam < 0``, and ``E_lam < 0`` exactly when the ratio
``R(lam, h) = N(sqrt(lam) h) / (lam ||h'||^2)`` exceeds ``dav/2`` for some
normalized ``h``. Computed energies are upper bounds, so ``E = 0`` is
recognised as ``E_est >= -E_tol``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateError, InvalidInputError, UnboundedBelowError
from .nonlinearity import Potential, evaluate_N, evaluate_N_gaussian_closed_form, pure_power
from .optimizer import MinimizeConfig, evaluate_H, minimize
from .profiles import RMeasure
from .spectral import Field, h1_seminorm, propagate_many, resample

__all__ = [
    "r_value",
    "ScanRecord",
    "ThresholdScan",
    "threshold_scan",
    "scaling_check",
    "subadditivity_factor",
    "subadditivity_check",
    "ProbeReport",
    "nonexistence_probe",
    "cs_invariance_check",
    "g_alpha",
]


def r_value(lam: float, h: Field, mu: RMeasure, pot: Potential,
            norm_tol: float = 1e-8) -> float:
    """``R(lam, h) = N(sqrt(lam) h) / (lam ||h'||^2)`` for ``||h|| = 1``."""
    if not lam > 0:
        raise InvalidInputError("lambda must be positive")
    if abs(h.power - 1.0) > norm_tol:
        raise InvalidInputError(f"h must have unit norm, got ||h||^2={h.power}")
    kin = h1_seminorm(h) ** 2
    if kin <= 1e-300:
        raise DegenerateError("||h'|| = 0: R is undefined for constant h")
    return evaluate_N(h * math.sqrt(lam), mu, pot) / (lam * kin)


# ------------------------------------------------------------------ scans


@dataclass
class ScanRecord:
    """One energy estimate; ``energy = min(raw_energy, 0)``.

    Spreading a field out drives ``H`` to 0 for every power (all exponents
    exceed 2), so 0 is always an upper bound for the infimum.
    """
    lam: float
    energy: float
    converged: bool
    iterations: int
    omega: float
    status: str
    raw_energy: float = math.nan
    quad_error: float = math.nan


@dataclass
class ThresholdScan:
    dav: float
    bracket: tuple
    lam_cr: float
    records: list
    tolerance: float
    e_tol: float
    outcome: str = "bracketed"

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    def monotone(self, slack: float = 1e-7) -> bool:
        """Energies are non-increasing in lambda across the records."""
        recs = sorted(self.records, key=lambda r: r.lam)
        return all(b.energy <= a.energy + slack for a, b in zip(recs, recs[1:]))

    def consistent(self) -> bool:
        """No negative-energy record sits below a zero-energy record."""
        recs = sorted(self.records, key=lambda r: r.lam)
        seen_negative = False
        for r in recs:
            neg = r.energy < -self.e_tol
            if seen_negative and not neg:
                return False
            seen_negative |= neg
        return True

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "energy", "converged", "iterations", "omega"])
        for r in sorted(self.records, key=lambda r: r.lam):
            w.writerow([repr(r.lam), repr(r.energy), int(r.converged), r.iterations,
                        repr(r.omega)])
        return buf.getvalue()


def _estimate_energy(lam, dav, pot, mu, base: MinimizeConfig) -> ScanRecord:
    cfg = replace(base, lam=lam, dav=dav)
    try:
        res = minimize(cfg, mu, pot, probe=False)
    except UnboundedBelowError:
        return ScanRecord(lam, -math.inf, False, 0, math.nan, "diverged", -math.inf)
    return ScanRecord(lam, min(res.energy, 0.0), res.converged, res.iterations, res.omega,
                      res.status, res.energy, res.quad_error)


def threshold_scan(dav: float, pot: Potential, mu: RMeasure, lam_bracket,
                   E_tol: float = 1e-7, bisect_tol: float = 1e-2,
                   config: MinimizeConfig | None = None,
                   geometric: bool = True) -> ThresholdScan:
    """Bisect on the predicate ``E_est(lam) < -E_tol``.

    ``outcome`` is ``"bracketed"`` on success, ``"below_lo"`` when the
    predicate already holds at the lower end (``lam_cr <= lam_lo``) and
    ``"no_threshold"`` when it fails at the upper end.
    """
    lo, hi = (float(v) for v in lam_bracket)
    if not 0 < lo < hi:
        raise InvalidInputError("need 0 < lam_lo < lam_hi")
    base = config or MinimizeConfig(lam=lo, dav=dav)
    records = []

    def negative(lam):
        rec = _estimate_energy(lam, dav, pot, mu, base)
        records.append(rec)
        return rec.energy < -E_tol

    if negative(lo):
        return ThresholdScan(dav, (0.0, lo), lo, records, bisect_tol, E_tol, "below_lo")
    if not negative(hi):
        return ThresholdScan(dav, (lo, hi), math.inf, records, bisect_tol, E_tol,
                             "no_threshold")
    while hi - lo > bisect_tol * hi:
        mid = math.sqrt(lo * hi) if geometric else 0.5 * (lo + hi)
        if negative(mid):
            hi = mid
        else:
            lo = mid
    return ThresholdScan(dav, (lo, hi), 0.5 * (lo + hi), records, bisect_tol, E_tol)


# ---------------------------------------------------------- scaling checks


def scaling_check(f: Field, rho: float, gamma0: float, dav: float, mu: RMeasure,
                  pot: Potential) -> dict:
    """Compare ``H(rho^(1/2) f)`` with ``rho^(gamma0/2) H(f)`` for ``rho >= 1``.

    The inequality ``H(rho^(1/2) f) <= rho^(gamma0/2) H(f)`` is guaranteed
    whenever ``N(rho^(1/2) f) >= rho^(gamma0/2) N(f)``; both are reported.
    """
    if not rho >= 1:
        raise InvalidInputError("rho must be >= 1")
    scaled = f * math.sqrt(rho)
    n_f = evaluate_N(f, mu, pot)
    n_s = evaluate_N(scaled, mu, pot)
    kin = 0.5 * dav * h1_seminorm(f) ** 2
    h_f = kin - n_f
    h_s = rho * kin - n_s
    factor = rho ** (gamma0 / 2)
    tol = 1e-12 * (abs(h_s) + factor * abs(h_f))
    return {
        "rho": rho,
        "lhs": h_s,
        "rhs": factor * h_f,
        "margin": factor * h_f - h_s,
        "holds": h_s <= factor * h_f + tol,
        "n_lower_holds": n_s >= factor * n_f - 1e-10 * (1 + abs(n_f)),
    }


def subadditivity_factor(lam: float, delta: float, gamma0: float) -> float:
    """``1 - (2^(gamma0/2) - 2) (delta/lam)^(gamma0/2)``."""
    return 1.0 - (2 ** (gamma0 / 2) - 2) * (delta / lam) ** (gamma0 / 2)


def subadditivity_check(lam, lam1, lam2, delta, gamma0, dav, mu, pot,
                        config: MinimizeConfig | None = None, rtol: float = 1e-2) -> dict:
    """``E_lam1 + E_lam2 >= factor * E_lam`` with computed energies.

    All three energies are upper bounds, so the check is soft: it passes
    within ``rtol`` relative slack and is ``inconclusive`` if any run failed
    to converge.
    """
    if not (0 < delta < lam / 2 and lam1 >= delta and lam2 >= delta
            and lam1 + lam2 <= lam * (1 + 1e-12)):
        raise InvalidInputError("need 0 < delta < lam/2, lam1, lam2 >= delta, lam1+lam2 <= lam")
    base = config or MinimizeConfig(lam=lam, dav=dav)
    res = {}
    converged = True
    for key, l in (("E", lam), ("E1", lam1), ("E2", lam2)):
        r = minimize(replace(base, lam=l, dav=dav), mu, pot, probe=False)
        res[key] = r.energy
        converged &= r.converged
    factor = subadditivity_factor(lam, delta, gamma0)
    lhs = res["E1"] + res["E2"]
    rhs = factor * res["E"]
    return {
        **res,
        "factor": factor,
        "lhs": lhs,
        "rhs": rhs,
        "margin": lhs - rhs,
        "holds": lhs >= rhs - rtol * abs(rhs),
        "inconclusive": not converged,
    }


# --------------------------------------------------------- nonexistence


@dataclass
class ProbeReport:
    gamma: float
    dav: float
    lam: float
    sigma0: np.ndarray
    energies: np.ndarray
    crosses: bool
    unbounded: bool
    minimum: float

    def slope(self, lo: float, hi: float) -> float:
        """Log-log slope of ``|H|`` against ``sigma0`` on ``[lo, hi]``."""
        m = (self.sigma0 >= lo) & (self.sigma0 <= hi)
        if m.sum() < 2:
            raise InvalidInputError("fewer than two schedule points in the window")
        return float(np.polyfit(np.log(self.sigma0[m]), np.log(np.abs(self.energies[m])), 1)[0])

    def rows(self):
        return list(zip(self.sigma0.tolist(), self.energies.tolist()))


def nonexistence_probe(gamma: float, c: float, dav: float, lam: float, mu: RMeasure,
                       sigma0_schedule=None, threshold: float = -1e3) -> ProbeReport:
    """Closed-form ``H(g_sigma0) = dav lam/(2 sigma0) - N(g_sigma0)`` along a schedule.

    No grid is involved, so arbitrarily narrow Gaussians are exact.
    ``crosses`` records whether the sequence drops below ``threshold``;
    ``unbounded`` whether it is negative, strictly decreasing and growing
    like a power of ``1/sigma0`` over the narrowest decade of the schedule.
    """
    pot = pure_power(c, gamma)
    s = np.geomspace(1.0, 1e-6, 61) if sigma0_schedule is None \
        else np.asarray(sigma0_schedule, dtype=float)
    if np.any(s <= 0):
        raise InvalidInputError("sigma0 values must be positive")
    energies = np.array([dav * lam / (2 * s0)
                         - evaluate_N_gaussian_closed_form(pot, mu, lam, s0) for s0 in s])
    order = np.argsort(s)[::-1]
    e_sorted = energies[order]
    s_sorted = s[order]
    crosses = bool(np.any(energies < threshold))
    narrow = s_sorted <= s_sorted[-1] * 10
    tail, s_tail = e_sorted[narrow], s_sorted[narrow]
    unbounded = False
    if tail.size >= 2 and np.all(tail < 0) and np.all(np.diff(tail) < 0):
        # |H| growing like a negative power of sigma0 means H -> -inf
        slope = np.polyfit(np.log(s_tail), np.log(-tail), 1)[0]
        unbounded = bool(slope < -0.05)
    return ProbeReport(gamma, dav, lam, s, energies, crosses, unbounded,
                       float(energies.min()))


def cs_invariance_check(f: Field, s: float, delta: float, n_r: int = 96,
                        pad: int | None = None) -> dict:
    """``int_0^s int |T_r f_delta|^6`` against ``int_0^(delta^2 s) int |T_r f|^6``.

    ``f_delta(x) = delta^(1/2) f(delta x)`` is obtained from the trigonometric
    interpolant of ``f``. Both sides use ``n_r`` Gauss-Legendre nodes in ``r``
    on a zero-padded box so that the evolution does not wrap around.
    """
    if not (s > 0 and delta > 0):
        raise InvalidInputError("need s > 0 and delta > 0")
    g = f.grid
    # the interpolant is periodic: outside the box f is taken to be zero
    pts = delta * g.x
    inside = np.abs(pts) <= g.extent / 2
    vals = np.zeros(g.n, dtype=complex)
    vals[inside] = resample(f, pts[inside])
    fd = Field(g, math.sqrt(delta) * vals)
    spec = np.abs(np.fft.fft(fd.values))
    edge = spec[np.abs(g.eta) > 0.9 * g.eta_max].max() / spec.max()
    if pad is None:
        pad = _pad_factor(f, max(s, delta ** 2 * s))
        pad = max(pad, _pad_factor(fd, s))

    def sixth(field: Field, rmax: float) -> float:
        big = _embed(field, pad)
        xg, wg = np.polynomial.legendre.leggauss(n_r)
        rs = 0.5 * rmax * (xg + 1.0)
        rows = propagate_many(big, rs)
        vals = big.grid.dx * np.sum(np.abs(rows) ** 6, axis=1)
        return float(0.5 * rmax * np.dot(wg, vals))

    lhs = sixth(fd, s)
    rhs = sixth(f, delta ** 2 * s)
    rel = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    return {
        "lhs": lhs,
        "rhs": rhs,
        "rel_err": rel,
        "norm_ratio": fd.power / f.power,
        "aliasing": float(edge),
        "inconclusive": bool(edge > 1e-10),
    }


def _embed(f: Field, factor: int) -> Field:
    if factor == 1:
        return f
    big = f.grid.padded(factor)
    vals = np.zeros(big.n, dtype=complex)
    start = (big.n - f.grid.n) // 2
    vals[start:start + f.grid.n] = f.values
    return Field(big, vals)


def _pad_factor(f: Field, rmax: float, rel: float = 1e-14) -> int:
    g = f.grid
    p = np.abs(np.fft.fft(f.values)) ** 2
    eta = np.abs(g.eta)
    order = np.argsort(eta)[::-1]
    cum = np.cumsum(p[order])
    K = float(eta[order][np.searchsorted(cum, rel * p.sum())])
    xs = np.abs(g.x)
    w = np.abs(f.values) ** 2
    keep = np.nonzero(w > rel * w.max())[0]
    x_ext = float(xs[keep].max()) if keep.size else 0.0
    need = 2 * (x_ext + 2 * rmax * K) * 1.1
    factor = 1
    while factor * g.extent < need and factor < 512:
        factor *= 2
    return factor


def g_alpha(alpha: float, s: float) -> float:
    """``[(s + 1)^(2 alpha/(1 + 2 alpha)) - 1]^(-1/2)``; ``+inf`` for ``s <= 0``."""
    if not 0 < alpha <= 1:
        raise InvalidInputError("alpha must lie in (0, 1]")
    if s <= 0:
        return math.inf
    base = math.expm1(2 * alpha / (1 + 2 * alpha) * math.log1p(s))
    return base ** -0.5
