"""Dispersion profiles and the probability measure they induce on ``r``.

A mean-zero, piecewise-constant local dispersion ``d0`` on ``[0, L]`` has
the piecewise-linear antiderivative ``D(t) = int_0^t d0``. The averaged
nonlinearity integrates over ``mu``, the image of normalized Lebesgue
measure on ``[0, L]`` under ``D``. We never sample the density: every
integral ``int F dmu`` is evaluated as ``(1/L) int_0^L F(D(s)) ds`` with
Gauss-Legendre nodes on each segment.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, UndefinedDensityError

__all__ = [
    "DispersionProfile",
    "RMeasure",
    "model_profile",
    "accumulate_D",
    "pushforward_measure",
    "uniform01",
    "density_at",
    "density_lp_norm",
    "density_lower_bound",
    "profile_from_json",
    "profile_to_json",
    "measure_from_spec",
    "profile_table",
]


@dataclass(frozen=True)
class DispersionProfile:
    """Piecewise-constant ``d0`` given as ``(value, length)`` segments."""

    segments: tuple

    def __post_init__(self):
        segs = tuple((float(d), float(ell)) for d, ell in self.segments)
        if not segs:
            raise InvalidInputError("profile needs at least one segment")
        for d, ell in segs:
            if not (math.isfinite(d) and math.isfinite(ell)) or ell <= 0:
                raise InvalidInputError(f"bad segment (d0={d}, len={ell})")
        object.__setattr__(self, "segments", segs)
        total = sum(d * ell for d, ell in segs)
        scale = self.period * max(abs(d) for d, _ in segs)
        if abs(total) > 1e-12 * max(scale, 1e-300):
            raise InvalidInputError(
                f"profile is not mean zero: int d0 = {total:.3e}")

    @property
    def period(self) -> float:
        return sum(ell for _, ell in self.segments)

    @property
    def degenerate(self) -> bool:
        """Some segment has ``d0 = 0`` (the measure then has an atom)."""
        return any(d == 0.0 for d, _ in self.segments)

    def breakpoints(self) -> np.ndarray:
        """Segment boundaries ``t_0 = 0 < t_1 < ... < t_K = L``."""
        return np.concatenate([[0.0], np.cumsum([ell for _, ell in self.segments])])

    def corner_values(self) -> np.ndarray:
        """``D`` at the segment boundaries (last entry is 0 up to rounding)."""
        inc = [d * ell for d, ell in self.segments]
        vals = np.concatenate([[0.0], np.cumsum(inc)])
        vals[-1] = 0.0
        return vals

    def support(self) -> tuple:
        c = self.corner_values()
        return float(c.min()), float(c.max())


def model_profile() -> DispersionProfile:
    """``d0 = 1`` on ``[0,1)``, ``-1`` on ``[1,2)``; its measure is uniform on [0,1]."""
    return DispersionProfile(((1.0, 1.0), (-1.0, 1.0)))


@dataclass(frozen=True)
class RMeasure:
    """Quadrature rule ``int F dmu ~ sum_i w_i F(r_i)`` for a probability measure."""

    nodes: np.ndarray
    weights: np.ndarray
    support: tuple
    kind: str = "pushforward"
    # (r_a, r_b, density) pieces when psi is piecewise constant; lets
    # analytic integrands be integrated adaptively instead of on the nodes
    pieces: tuple | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1 or nodes.size == 0:
            raise InvalidInputError("nodes and weights must be equal-length 1-D arrays")
        if np.any(weights < 0) or not np.all(np.isfinite(nodes)):
            raise InvalidInputError("weights must be nonnegative and nodes finite")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidInputError(f"weights sum to {weights.sum()!r}, not 1")
        lo, hi = (float(s) for s in self.support)
        span = max(hi - lo, 1.0)
        if nodes.min() < lo - 1e-12 * span or nodes.max() > hi + 1e-12 * span:
            raise InvalidInputError("quadrature nodes leave the stated support")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "support", (lo, hi))

    def __len__(self):
        return self.nodes.size

    def integrate(self, values) -> float:
        """``sum_i w_i F(r_i)`` for precomputed ``F(r_i)`` (ascending order)."""
        return float(np.dot(self.weights, values))

    def mean(self) -> float:
        return self.integrate(self.nodes)

    def shifted(self, s: float) -> "RMeasure":
        lo, hi = self.support
        pieces = None
        if self.pieces is not None:
            pieces = tuple((a + s, b + s, p) for a, b, p in self.pieces)
        return RMeasure(self.nodes + s, self.weights, (lo + s, hi + s), self.kind, pieces)

    def refined(self, factor: int = 2) -> "RMeasure":
        """Same density with ``factor`` times more Gauss-Legendre nodes per piece.

        Used to check that a field is resolved by the ``r`` quadrature.
        """
        if self.pieces is None:
            raise InvalidInputError("refinement needs a piecewise-constant density")
        m = max(2, -(-factor * self.nodes.size // len(self.pieces)))
        x, w = np.polynomial.legendre.leggauss(m)
        nodes, weights = [], []
        for a, b, p in self.pieces:
            nodes.append(a + 0.5 * (b - a) * (x + 1.0))
            weights.append(0.5 * (b - a) * p * w)
        nodes, weights = _merge_nodes(np.concatenate(nodes), np.concatenate(weights))
        return RMeasure(nodes, weights / weights.sum(), self.support, self.kind, self.pieces)


def accumulate_D(profile: DispersionProfile, t: float) -> float:
    """``D(t) = int_0^t d0``, exact for piecewise-constant profiles."""
    L = profile.period
    if not (0.0 <= t <= L * (1 + 1e-15)):
        raise InvalidInputError(f"t={t} outside [0, {L}]")
    if t >= L:
        return 0.0
    bps = profile.breakpoints()
    corners = profile.corner_values()
    k = int(np.searchsorted(bps, t, side="right")) - 1
    d = profile.segments[k][0]
    return float(corners[k] + d * (t - bps[k]))


def _merge_nodes(nodes, weights, tol=1e-14):
    order = np.argsort(nodes, kind="stable")
    nodes, weights = nodes[order], weights[order]
    keep_n, keep_w = [nodes[0]], [weights[0]]
    for r, w in zip(nodes[1:], weights[1:]):
        if abs(r - keep_n[-1]) <= tol * max(1.0, abs(r)):
            keep_w[-1] += w
        else:
            keep_n.append(r)
            keep_w.append(w)
    return np.array(keep_n), np.array(keep_w)


def pushforward_measure(profile: DispersionProfile, m_per_segment: int = 64) -> RMeasure:
    """Gauss-Legendre nodes on every segment pushed through ``D``.

    Coincident images (e.g. the two halves of the model profile) are merged,
    so the model case yields exactly ``m`` nodes on ``[0, 1]``.
    """
    if m_per_segment < 2:
        raise InvalidInputError("m_per_segment must be >= 2")
    x, w = np.polynomial.legendre.leggauss(int(m_per_segment))
    L = profile.period
    corners = profile.corner_values()
    nodes, weights, pieces = [], [], []
    for k, (d, ell) in enumerate(profile.segments):
        s = 0.5 * ell * (x + 1.0)
        nodes.append(corners[k] + d * s)
        weights.append(0.5 * ell * w / L)
        if d != 0.0:
            a, b = sorted((corners[k], corners[k + 1]))
            pieces.append((float(a), float(b), 1.0 / (L * abs(d))))
    nodes, weights = _merge_nodes(np.concatenate(nodes), np.concatenate(weights))
    weights = weights / weights.sum()
    pieces = tuple(pieces) if not profile.degenerate else None
    return RMeasure(nodes, weights, profile.support(), "pushforward", pieces)


def uniform01(m: int = 64) -> RMeasure:
    """Density ``1_[0,1]`` with ``m`` Gauss-Legendre nodes."""
    if m < 2:
        raise InvalidInputError("m must be >= 2")
    x, w = np.polynomial.legendre.leggauss(int(m))
    w = 0.5 * w
    return RMeasure(0.5 * (x + 1.0), w / w.sum(), (0.0, 1.0), "uniform01",
                    ((0.0, 1.0, 1.0),))


def density_at(profile: DispersionProfile, r: float, strict: bool = True) -> float:
    """``psi(r) = (1/L) sum_{s : D(s) = r} 1/|d0(s)|``.

    Raises :class:`UndefinedDensityError` at corner values of ``D`` and,
    with ``strict``, outside the support; with ``strict=False`` the density
    outside the support is 0.
    """
    if profile.degenerate:
        raise UndefinedDensityError("profile has a d0 = 0 segment; mu has an atom")
    lo, hi = profile.support()
    if not (lo < r < hi):
        if strict or lo <= r <= hi:
            raise UndefinedDensityError(f"r={r} not strictly inside support [{lo}, {hi}]")
        return 0.0
    corners = profile.corner_values()
    tol = 1e-13 * max(1.0, hi - lo)
    if np.any(np.abs(corners - r) <= tol):
        raise UndefinedDensityError(f"r={r} is a corner value of D")
    total = 0.0
    for k, (d, _) in enumerate(profile.segments):
        a, b = corners[k], corners[k + 1]
        if min(a, b) < r < max(a, b):
            total += 1.0 / abs(d)
    return total / profile.period


def density_lp_norm(profile: DispersionProfile, p: float, m: int = 64) -> float:
    """``||psi||_{L^p}`` evaluated on the ``r`` axis.

    Between consecutive corner values of ``D`` the density is constant, so
    ``m`` only sets the number of probe points used to check that; the
    result is exact.
    """
    if not p >= 1:
        raise InvalidInputError(f"p must be >= 1, got {p}")
    if profile.degenerate:
        raise InvalidInputError("profile has a d0 = 0 segment")
    levels = np.unique(profile.corner_values())
    total = 0.0
    for a, b in zip(levels[:-1], levels[1:]):
        probes = a + (b - a) * (np.arange(1, m + 1) - 0.5) / m
        vals = [density_at(profile, float(q)) for q in probes]
        if max(vals) - min(vals) > 1e-12 * max(vals):
            raise AssertionError("density not constant between corner values")
        if math.isinf(p):
            total = max(total, vals[0])
        else:
            total += vals[0] ** p * (b - a)
    return total if math.isinf(p) else total ** (1.0 / p)


def density_lower_bound(profile: DispersionProfile, r0: float) -> tuple:
    """``(m, side)`` with ``psi >= m`` on ``[0, r0]`` (side=+1) or ``[-r0, 0]``.

    Diagnostic only: it inspects the segments touching ``t = 0`` and
    ``t = L``, which are where ``D`` leaves zero.
    """
    side = 1 if profile.segments[0][0] > 0 else -1
    probes = side * r0 * (np.arange(1, 65) - 0.5) / 64
    vals = [density_at(profile, float(q), strict=False) for q in probes]
    return float(min(vals)), side


def profile_from_json(spec) -> DispersionProfile:
    """Accepts a dict/JSON string ``{"segments": [{"d0":..,"len":..}, ...]}`` or "model"."""
    if isinstance(spec, str):
        if spec.strip() == "model":
            return model_profile()
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"profile is neither \"model\" nor JSON: {exc}") from exc
    if spec == "model":
        return model_profile()
    try:
        segs = [(s["d0"], s["len"]) for s in spec["segments"]]
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed profile spec: {exc}") from exc
    return DispersionProfile(tuple(segs))


def profile_to_json(profile: DispersionProfile) -> dict:
    return {"segments": [{"d0": d, "len": ell} for d, ell in profile.segments]}


def measure_from_spec(spec, m: int = 64) -> RMeasure:
    """Build an :class:`RMeasure` from a config value.

    ``"uniform01"``, ``"model"``, a profile dict, or an explicit
    ``{"nodes": [...], "weights": [...]}``.
    """
    if isinstance(spec, str):
        if spec == "uniform01":
            return uniform01(m)
        return pushforward_measure(profile_from_json(spec), m)
    if isinstance(spec, dict) and "nodes" in spec:
        nodes = np.asarray(spec["nodes"], dtype=float)
        weights = np.asarray(spec["weights"], dtype=float)
        lo = spec.get("support", [float(nodes.min()), float(nodes.max())])
        return RMeasure(nodes, weights, tuple(lo), "explicit")
    if isinstance(spec, dict) and spec.get("kind") == "uniform01":
        return uniform01(int(spec.get("m", m)))
    if isinstance(spec, dict) and "profile" in spec:
        return pushforward_measure(profile_from_json(spec["profile"]), int(spec.get("m", m)))
    return pushforward_measure(profile_from_json(spec), m)


def _as_profile(obj) -> DispersionProfile:
    if isinstance(obj, DispersionProfile):
        return obj
    return profile_from_json(obj)


def profile_table(profile, rs: Sequence[float]) -> list:
    """Rows ``(r, psi(r))`` for ``r`` inside the support (corner values skipped)."""
    prof = _as_profile(profile)
    rows = []
    for r in rs:
        try:
            rows.append((float(r), density_at(prof, float(r))))
        except UndefinedDensityError:
            continue
    return rows
