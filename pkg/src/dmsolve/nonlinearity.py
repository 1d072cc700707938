"""Power-sum potentials ``V`` and the averaged nonlinearity ``N``.

    N(f) = int int V(|T_r f(x)|) dx dmu(r)

with ``V(a) = sum_j c_j a**s_j`` (all ``s_j > 2``). The assumption
predicates are sampled numerically, never proved symbolically.
"""
from __future__ import annotations

import functools
import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import InvalidInputError, UnsupportedError
from .profiles import RMeasure
from .spectral import Field, GridSpec

__all__ = [
    "Potential",
    "kerr",
    "pure_power",
    "v",
    "v_prime",
    "check_A1",
    "check_A2",
    "check_A3",
    "check_A4",
    "check_homogeneity_lower",
    "evaluate_N",
    "grad_N",
    "grad_N_kerr",
    "evaluate_N_gaussian_closed_form",
    "adaptive_measure",
    "potential_from_json",
    "potential_to_json",
    "default_quad_nodes",
]

_ROW_CHUNK = 128


@dataclass(frozen=True)
class Potential:
    """``V(a) = sum_j c_j a**s_j`` with exponent metadata.

    ``gamma0`` is the exponent claimed for ``V'(a) a >= gamma0 V(a)`` and
    ``kappa0`` the small-amplitude exponent of ``V(a) >~ a**kappa0``; both are
    optional and only recorded, use the ``check_*`` predicates to test them.
    """

    terms: tuple
    gamma0: float | None = None
    kappa0: float | None = None
    coeffs: np.ndarray = field(init=False, repr=False, compare=False)
    powers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple((float(c), float(s)) for c, s in self.terms)
        if not terms:
            raise InvalidInputError("potential needs at least one term")
        ss = [s for _, s in terms]
        if any(s <= 2 or not math.isfinite(s) for s in ss):
            raise InvalidInputError(f"all exponents must exceed 2, got {ss}")
        if any(b <= a for a, b in zip(ss, ss[1:])):
            raise InvalidInputError(f"exponents must be strictly increasing, got {ss}")
        if any(not math.isfinite(c) for c, _ in terms):
            raise InvalidInputError("coefficients must be finite")
        if self.gamma0 is not None and not self.gamma0 > 2:
            raise InvalidInputError("gamma0 must exceed 2")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "coeffs", np.array([c for c, _ in terms]))
        object.__setattr__(self, "powers", np.array(ss))

    @property
    def gamma1(self) -> float:
        return float(self.powers[0])

    @property
    def gamma2(self) -> float:
        return float(self.powers[-1])

    @property
    def is_pure_power(self) -> bool:
        return len(self.terms) == 1

    def __call__(self, a):
        return v(self, a)

    def value(self, a: np.ndarray) -> np.ndarray:
        """Vectorized ``V`` without the domain check."""
        out = np.zeros_like(a, dtype=float)
        for c, s in self.terms:
            out += c * a ** s
        return out

    def force(self, u: np.ndarray) -> np.ndarray:
        """``V'(|u|) sgn(u) = sum c s |u|**(s-2) u`` (zero where ``u == 0``)."""
        a = np.abs(u)
        out = np.zeros_like(u)
        for c, s in self.terms:
            if s == 4.0:
                out += (c * s) * (a * a) * u
            else:
                out += (c * s) * a ** (s - 2.0) * u
        return out


def kerr(c: float = 1.0) -> Potential:
    return Potential(((c, 4.0),), gamma0=4.0, kappa0=4.0)


def pure_power(c: float, gamma: float) -> Potential:
    return Potential(((c, gamma),), gamma0=gamma, kappa0=gamma if c > 0 else None)


def _check_amplitude(a):
    arr = np.asarray(a, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise InvalidInputError("V is defined for finite a >= 0 only")
    return arr


def v(pot: Potential, a):
    arr = _check_amplitude(a)
    out = pot.value(arr)
    return float(out) if out.ndim == 0 else out


def v_prime(pot: Potential, a):
    arr = _check_amplitude(a)
    out = np.zeros_like(arr)
    for c, s in pot.terms:
        out += c * s * arr ** (s - 1.0)
    return float(out) if out.ndim == 0 else out


def _default_samples():
    return np.logspace(-6, 3, 1000)


def check_A1(pot: Potential, a_samples=None) -> bool:
    """Exponent structure ``2 <= gamma1 <= gamma2`` and ``|V'| / (a^(g1-1) + a^(g2-1))`` bounded."""
    a = _default_samples() if a_samples is None else _check_amplitude(a_samples)
    ratio = np.abs(v_prime(pot, a)) / (a ** (pot.gamma1 - 1) + a ** (pot.gamma2 - 1))
    return bool(pot.gamma1 >= 2 and np.all(np.isfinite(ratio))
                and ratio.max() <= np.abs(pot.coeffs * pot.powers).sum() * (1 + 1e-12))


def check_A2(pot: Potential, gamma0: float | None = None, a_samples=None) -> bool:
    """``V'(a) a - gamma0 V(a) >= -1e-12 (1 + |V(a)|)`` at every sample."""
    g0 = pot.gamma0 if gamma0 is None else gamma0
    if g0 is None or not g0 > 2:
        raise InvalidInputError("gamma0 must be given and exceed 2")
    a = _default_samples() if a_samples is None else _check_amplitude(a_samples)
    va = v(pot, a)
    gap = v_prime(pot, a) * a - g0 * va
    return bool(np.all(gap >= -1e-12 * (1.0 + np.abs(va))))


def check_A3(pot: Potential, a_samples=None):
    """Return some ``a0`` with ``V(a0) > 0`` or ``None``."""
    a = _default_samples() if a_samples is None else _check_amplitude(a_samples)
    pos = np.nonzero(v(pot, a) > 0)[0]
    return float(a[pos[0]]) if pos.size else None


def check_A4(pot: Potential, dav: float, kappa0: float | None = None,
             eps: float = 1e-2) -> bool:
    """Small-amplitude positivity.

    For ``dav > 0``: ``2 < kappa0 < 6`` and ``V(a) / a**kappa0`` bounded below by
    a positive constant on ``(0, eps]``. For ``dav = 0``: ``V > 0`` on ``(0, eps]``.
    """
    a = np.logspace(-8, math.log10(eps), 400)
    positive = bool(np.all(v(pot, a) > 0))
    if dav == 0:
        return positive
    k0 = pot.kappa0 if kappa0 is None else kappa0
    if k0 is None or not 2 < k0 < 6:
        return False
    # as a -> 0 the lowest power dominates, so V / a**kappa0 stays bounded
    # below iff that term is positive with exponent <= kappa0
    c1, s1 = pot.terms[0]
    return positive and c1 > 0 and s1 <= k0 * (1 + 1e-12)


def check_homogeneity_lower(pot: Potential, gamma0: float | None = None,
                            t_samples=None, a_samples=None) -> bool:
    """``V(t a) >= t**gamma0 V(a)`` for all sample pairs with ``t >= 1``."""
    g0 = pot.gamma0 if gamma0 is None else gamma0
    t = np.linspace(1.0, 10.0, 46) if t_samples is None else np.asarray(t_samples, float)
    if np.any(t < 1):
        raise InvalidInputError("t samples must be >= 1")
    a = np.logspace(-4, 2, 200) if a_samples is None else _check_amplitude(a_samples)
    T, A = np.meshgrid(t, a, indexing="ij")
    lhs = v(pot, T * A)
    rhs = T ** g0 * v(pot, A)
    return bool(np.all(lhs - rhs >= -1e-12 * (np.abs(lhs) + np.abs(rhs))))


def _row_chunks(m):
    for start in range(0, m, _ROW_CHUNK):
        yield slice(start, min(m, start + _ROW_CHUNK))


@functools.lru_cache(maxsize=8)
def _cached_multipliers(n, extent, nodes_bytes):
    eta2 = GridSpec(n, extent).eta ** 2
    nodes = np.frombuffer(nodes_bytes, dtype=float)
    fwd = np.exp(-1j * nodes[:, None] * eta2[None, :])
    fwd.flags.writeable = False
    return fwd


def _multipliers(grid, mu, sl):
    """Rows ``exp(-i r_i eta^2)``; cached when the table is small enough."""
    if len(mu) * grid.n <= 2 ** 22:
        return _cached_multipliers(grid.n, grid.extent, mu.nodes.tobytes())[sl]
    return np.exp(-1j * mu.nodes[sl, None] * (grid.eta ** 2)[None, :])


def evaluate_N(f: Field, mu: RMeasure, pot: Potential) -> float:
    """``sum_i w_i dx sum_j V(|T_{r_i} f(x_j)|)``."""
    g = f.grid
    fk = np.fft.fft(f.values)
    per_node = np.empty(len(mu))
    for sl in _row_chunks(len(mu)):
        u = np.fft.ifft(_multipliers(g, mu, sl) * fk[None, :], axis=1)
        per_node[sl] = np.sum(pot.value(np.abs(u)), axis=1)
    return float(g.dx * np.dot(mu.weights, per_node))


def _grad_and_value(f: Field, mu: RMeasure, pot: Potential, force=None):
    g = f.grid
    fk = np.fft.fft(f.values)
    force = pot.force if force is None else force
    acc = np.zeros(g.n, dtype=complex)
    per_node = np.empty(len(mu))
    for sl in _row_chunks(len(mu)):
        mult = _multipliers(g, mu, sl)
        u = np.fft.ifft(mult * fk[None, :], axis=1)
        per_node[sl] = np.sum(pot.value(np.abs(u)), axis=1)
        q = np.fft.fft(force(u), axis=1)
        acc += mu.weights[sl] @ (np.conj(mult) * q)
    return Field(g, np.fft.ifft(acc)), float(g.dx * np.dot(mu.weights, per_node))


def grad_N(f: Field, mu: RMeasure, pot: Potential) -> Field:
    """``int T_r^{-1}[V'(|T_r f|) sgn(T_r f)] dmu``, so ``D_h N(f) = Re<h, grad_N>``."""
    return _grad_and_value(f, mu, pot)[0]


def grad_N_kerr(f: Field, mu: RMeasure, c: float = 1.0) -> Field:
    """Kerr-specialized gradient ``4c int T_r^{-1}[|T_r f|^2 T_r f] dmu``, node by node."""
    g = f.grid
    out = np.zeros(g.n, dtype=complex)
    fk = np.fft.fft(f.values)
    eta2 = g.eta ** 2
    for r, w in zip(mu.nodes, mu.weights):
        u = np.fft.ifft(np.exp(-1j * r * eta2) * fk)
        cubic = np.abs(u) ** 2 * u
        out += w * np.fft.ifft(np.exp(1j * r * eta2) * np.fft.fft(cubic))
    return Field(g, 4.0 * c * out)


def _lorentz_power_integral(p: float, ta: float, tb: float) -> float:
    """``int_ta^tb (1 + t^2)^(-p) dt`` for ``p > 0``.

    With ``t = tan(theta)`` this is ``int cos^(2p-2)``, an incomplete beta
    function for ``p > 1/2`` and ``asinh`` at ``p = 1/2``. Tails are taken
    through ``1/(1 + t^2)`` so that long, far-out intervals keep full
    relative accuracy.
    """
    if tb <= ta:
        return 0.0
    if p > 0.5:
        b = p - 0.5
        half = 0.5 * special.beta(0.5, b)

        def tail(t):  # int_t^inf for t >= 0
            return half * special.betainc(b, 0.5, 1.0 / (1.0 + t * t))

        if ta >= 0:
            return float(tail(ta) - tail(tb))
        if tb <= 0:
            return float(tail(-tb) - tail(-ta))
        return float(2 * half - tail(-ta) - tail(tb))
    if p == 0.5:
        return math.asinh(tb) - math.asinh(ta)
    pts = [0.0] if ta < 0 < tb else None
    val, _ = integrate.quad(lambda t: (1 + t * t) ** -p, ta, tb, points=pts,
                            epsabs=0.0, epsrel=1e-13, limit=400)
    return val


def evaluate_N_gaussian_closed_form(pot: Potential, mu: RMeasure, lam: float,
                                    sigma0: complex) -> float:
    """``N(g_sigma0)`` for a pure power ``c a**gamma`` without any x-grid.

    ``c (pi/gamma)^(1/2) (2 lam^2/pi)^(gamma/4) (Re s0/|s0|^2)^((gamma-2)/4)
    int (|s0|/|s0 + 4 i r|)^((gamma-2)/2) dmu(r)``. On piecewise-constant
    densities the ``r`` integral is exact (see ``_lorentz_power_integral``)
    so arbitrarily narrow Gaussians are fine; otherwise the nodes are used.
    """
    if not pot.is_pure_power:
        raise UnsupportedError("closed form needs a pure power potential")
    (c, gam), = pot.terms
    s0 = complex(sigma0)
    if not (s0.real > 0 and lam > 0):
        raise InvalidInputError("need Re sigma0 > 0 and lambda > 0")
    pref = (c * math.sqrt(math.pi / gam) * (2 * lam ** 2 / math.pi) ** (gam / 4)
            * (s0.real / abs(s0) ** 2) ** ((gam - 2) / 4))
    p = (gam - 2) / 4
    a0, re, im = abs(s0), s0.real, s0.imag
    if mu.pieces is None:
        # |s0 + 4ir|^2 = Re(s0)^2 + (Im(s0) + 4r)^2
        vals = (a0 ** 2 / (re ** 2 + (im + 4 * mu.nodes) ** 2)) ** p
        return pref * mu.integrate(vals)
    # Im(s0) + 4r = Re(s0) t
    scale = 0.25 * re * (a0 / re) ** (2 * p)
    total = 0.0
    for a, b, dens in mu.pieces:
        total += dens * _lorentz_power_integral(p, (im + 4 * a) / re, (im + 4 * b) / re)
    return pref * scale * total


def default_quad_nodes(fallback: int = 64) -> int:
    """Quadrature default, overridable through ``DMS_QUAD_NODES``."""
    raw = os.environ.get("DMS_QUAD_NODES")
    if not raw:
        return fallback
    try:
        m = int(raw)
    except ValueError as exc:
        raise InvalidInputError(f"DMS_QUAD_NODES={raw!r} is not an integer") from exc
    if m < 2:
        raise InvalidInputError("DMS_QUAD_NODES must be >= 2")
    return m


def adaptive_measure(builder: Callable[[int], RMeasure], f: Field, pot: Potential,
                     m0: int | None = None, cap: int = 1024, rtol: float = 1e-10):
    """Double the node count until ``N(f)`` moves by less than ``rtol``.

    Returns ``(measure, m)``; stops at ``cap`` nodes per segment.
    """
    m = default_quad_nodes() if m0 is None else m0
    mu = builder(m)
    prev = evaluate_N(f, mu, pot)
    while 2 * m <= cap:
        m2 = 2 * m
        mu2 = builder(m2)
        cur = evaluate_N(f, mu2, pot)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return mu, m
        mu, m, prev = mu2, m2, cur
    return mu, m


def potential_from_json(spec) -> Potential:
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"potential spec is not JSON: {exc}") from exc
    try:
        terms = tuple((t["c"], t["s"]) for t in spec["terms"])
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed potential spec: {exc}") from exc
    return Potential(terms, gamma0=spec.get("gamma0"), kappa0=spec.get("kappa0"))


def potential_to_json(pot: Potential) -> dict:
    out = {"terms": [{"c": c, "s": s} for c, s in pot.terms]}
    if pot.gamma0 is not None:
        out["gamma0"] = pot.gamma0
    if pot.kappa0 is not None:
        out["kappa0"] = pot.kappa0
    return out
