"""Closed-form references used to validate the spectral machinery.

Gaussians ``g(x) = A0 exp(-x^2/sigma0)`` with ``Re sigma0 > 0`` stay
Gaussian under free evolution, ``T_r g(x) = A0 (sigma0/sigma(r))^(1/2)
exp(-x^2/sigma(r))`` with ``sigma(r) = sigma0 + 4 i r``, so every norm of
``T_r g`` is available exactly.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, ResolutionError
from .spectral import Field, GridSpec, boost, propagate, propagate_many, translate

__all__ = [
    "GaussianParams",
    "gaussian_field",
    "gaussian_evolved",
    "gaussian_lgamma_norm",
    "gaussian_h1_seminorm_sq",
    "galilei",
    "strichartz_ratio",
    "StrichartzResult",
    "STRICHARTZ_SHARP",
    "kato_check",
]

#: Sharp 1-D Strichartz constant to the sixth power, ``(12**(-1/12))**6``.
STRICHARTZ_SHARP = 12.0 ** -0.5


@dataclass(frozen=True)
class GaussianParams:
    lam: float
    sigma0: complex

    def __post_init__(self):
        s0 = complex(self.sigma0)
        if not (self.lam > 0 and s0.real > 0):
            raise InvalidInputError("need lambda > 0 and Re sigma0 > 0")
        object.__setattr__(self, "sigma0", s0)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def amplitude(self) -> float:
        """``A0 = (2 Re(s0) lam^2 / (pi |s0|^2))^(1/4)``."""
        s0 = self.sigma0
        return (2 * s0.real * self.lam ** 2 / (math.pi * abs(s0) ** 2)) ** 0.25

    def sigma(self, r: float) -> complex:
        return self.sigma0 + 4j * r


def _decay_guard(params: GaussianParams, grid: GridSpec, tol: float = 1e-14):
    s0 = params.sigma0
    edge = math.exp(-(grid.extent / 2) ** 2 * s0.real / abs(s0) ** 2)
    spec_tail = math.exp(-(grid.eta_max ** 2) * s0.real / 4)
    if edge > tol:
        raise ResolutionError(
            f"box X={grid.extent} too small for sigma0={s0}: edge amplitude {edge:.2e}")
    if spec_tail > tol:
        raise ResolutionError(
            f"dx={grid.dx} too coarse for sigma0={s0}: spectral tail {spec_tail:.2e}")


def gaussian_field(params: GaussianParams, grid: GridSpec, check: bool = True) -> Field:
    """Sample ``g_sigma0`` on ``grid``; refuses grids that cut or alias it."""
    if check:
        _decay_guard(params, grid)
    x = grid.x
    return Field(grid, params.amplitude * np.exp(-x ** 2 / params.sigma0))


def gaussian_evolved(params: GaussianParams, r: float, x, period: float | None = None):
    """Closed-form ``T_r g_sigma0`` at ``x``.

    Both ``sigma0`` and ``sigma(r)`` lie in the right half plane, so the
    ratio of principal square roots is continuous in ``r``. With ``period``
    the result is summed over periodic images, i.e. the exact evolution on
    a box of that length.
    """
    s0 = params.sigma0
    sr = params.sigma(r)
    amp = params.amplitude * cmath.sqrt(s0) / cmath.sqrt(sr)
    x = np.asarray(x, dtype=float)
    if period is None:
        return amp * np.exp(-x ** 2 / sr)
    # images decay like exp(-(m X)^2 Re(1/sigma)); stop once negligible
    decay = (1.0 / sr).real
    m_max = 1 + int(math.ceil(math.sqrt(40.0 / max(decay, 1e-300)) / period))
    out = np.zeros(x.shape, dtype=complex)
    for m in range(-m_max, m_max + 1):
        out += np.exp(-(x + m * period) ** 2 / sr)
    return amp * out


def gaussian_lgamma_norm(params: GaussianParams, r: float, gamma: float) -> float:
    """``||T_r g_sigma0||_gamma^gamma`` in closed form."""
    if not gamma >= 1:
        raise InvalidInputError(f"gamma must be >= 1, got {gamma}")
    s0 = params.sigma0
    lam = params.lam
    return (math.sqrt(math.pi / gamma) * (2 * lam ** 2 / math.pi) ** (gamma / 4)
            * (s0.real / abs(s0) ** 2) ** ((gamma - 2) / 4)
            * (abs(s0) / abs(params.sigma(r))) ** ((gamma - 2) / 2))


def gaussian_h1_seminorm_sq(params: GaussianParams) -> float:
    """``||g'||^2 = lam / Re sigma0``."""
    return params.lam / params.sigma0.real


def galilei(f: Field, y: float, v: float, r: float) -> Field:
    """``exp(-i r v^2) exp(i v x) (T_r f)(x - y - 2 r v)``.

    Equals ``propagate(boost(translate(f, y), v), r)`` for band-limited ``f``.
    """
    moved = translate(propagate(f, r), y + 2 * r * v)
    return boost(moved, v) * np.exp(-1j * r * v * v)


# ---------------------------------------------------------------- Strichartz


@dataclass(frozen=True)
class StrichartzResult:
    ratio: float
    near: float
    far: float
    switch: float
    focus: float
    timescale: float
    pad_factor: int
    conclusive: bool


def _moments(f: Field, rows: np.ndarray):
    x = f.grid.x
    mass = np.sum(np.abs(rows) ** 2, axis=1)
    c = np.sum(x * np.abs(rows) ** 2, axis=1) / mass
    var = np.sum((x[None, :] - c[:, None]) ** 2 * np.abs(rows) ** 2, axis=1) / mass
    return c, var


def _spectral_radius(f: Field, rel: float = 1e-14) -> float:
    g = f.grid
    p = np.abs(np.fft.fft(f.values)) ** 2
    eta = np.abs(g.eta)
    order = np.argsort(eta)
    cum = np.cumsum(p[order][::-1])[::-1]
    idx = np.nonzero(cum > rel * p.sum())[0]
    return float(eta[order][idx[-1]]) if idx.size else 0.0


def _centre_in_fourier(f: Field) -> Field:
    """Boost by the nearest grid frequency to the mean momentum."""
    g = f.grid
    p = np.abs(np.fft.fft(f.values)) ** 2
    mean_eta = float(np.sum(g.eta * p) / p.sum())
    k = round(mean_eta / g.deta)
    return boost(f, -k * g.deta) if k else f


def _embed(f: Field, factor: int) -> Field:
    if factor == 1:
        return f
    big = f.grid.padded(factor)
    vals = np.zeros(big.n, dtype=complex)
    start = (big.n - f.grid.n) // 2
    vals[start:start + f.grid.n] = f.values
    return Field(big, vals)


def _sixth_direct(big: Field, rs: np.ndarray) -> np.ndarray:
    """``int |T_r f|^6 dx`` for each ``r`` by propagating on the grid."""
    bk = np.fft.fft(big.values)
    eta2 = big.grid.eta ** 2
    out = np.empty(rs.size)
    for start in range(0, rs.size, 16):
        sl = slice(start, min(rs.size, start + 16))
        u = np.fft.ifft(np.exp(-1j * rs[sl, None] * eta2[None, :]) * bk[None, :], axis=1)
        out[sl] = big.grid.dx * np.sum(np.abs(u) ** 6, axis=1)
    return out


def _sixth_lens(wide: Field, ss: np.ndarray) -> np.ndarray:
    """``r^2 int |T_r f|^6 dx`` at ``r = 1/s``, via the lens identity.

    ``|T_r f(x)| = (2|r|)^(-1/2) |ghat(x / 2r)|`` with ``g = exp(i y^2/(4r)) f``,
    so ``int |T_r f|^6 dx = ||ghat||_6^6 / (4 r^2)``. The factor ``r^2``
    cancels against ``dr = -ds/s^2`` and the ``s`` integrand stays smooth
    down to ``s = 0`` (``r = inf``). ``wide`` must be padded at least 3x
    so that the sum over ``eta`` integrates ``|ghat|^6`` exactly.
    """
    g = wide.grid
    y2 = g.x ** 2
    out = np.empty(ss.size)
    scale = g.dx / math.sqrt(2 * math.pi)
    for start in range(0, ss.size, 16):
        sl = slice(start, min(ss.size, start + 16))
        gk = np.fft.fft(np.exp(0.25j * ss[sl, None] * y2[None, :]) * wide.values[None, :], axis=1)
        out[sl] = 0.25 * g.deta * np.sum(np.abs(scale * gk) ** 6, axis=1)
    return out


def strichartz_ratio(f: Field, r_truncation: float | None = None, n_theta: int = 256,
                     n_far: int = 96, max_pad: int = 256, detail: bool = False):
    """``int int |T_r f|^6 dx dr / ||f||^6`` over all ``r`` (or ``|r| <= r_truncation``).

    The line is split at ``|r| = r_sw``. Inside, ``T_r f`` is propagated on
    a zero-padded grid and integrated with Gauss-Legendre nodes in
    ``theta``, ``r = r_c + (tau/2) tan(theta)``, which follows the peak at
    the focus ``r_c`` of the spatial variance. Outside, the lens identity
    (see ``_sixth_lens``) turns the integral over ``r`` into a smooth one
    over ``s = 1/r`` on ``[0, 1/r_sw]``, so no truncation or tail model is
    needed.
    """
    lam = f.power
    if lam == 0:
        raise InvalidInputError("ratio undefined for the zero field")
    f = _centre_in_fourier(f)
    g = f.grid
    # spatial variance is quadratic in r; fit it through three times
    probe = np.array([-1.0, 0.0, 1.0])
    cent, var = _moments(f, propagate_many(f, probe))
    a2 = 0.5 * (var[0] + var[2]) - var[1]
    a1 = 0.5 * (var[2] - var[0])
    r_c = -a1 / (2 * a2) if a2 > 0 else 0.0
    var_min = max(var[1] + a1 * r_c + a2 * r_c ** 2, 1e-300)
    fk = f.fourier()
    p_eta = np.abs(fk) ** 2
    var_eta = float(np.sum(g.eta ** 2 * p_eta) / p_eta.sum()
                    - (np.sum(g.eta * p_eta) / p_eta.sum()) ** 2)
    tau = 2.0 * math.sqrt(var_min / max(var_eta, 1e-300))
    r_sw = max(1.0, abs(r_c) + 4 * tau)
    R = math.inf if r_truncation is None else float(r_truncation)
    if not R > 0:
        raise InvalidInputError("r_truncation must be positive")
    r_in = min(r_sw, R)

    K = _spectral_radius(f)
    x_extent = float(np.max(np.abs(cent))) + 8 * math.sqrt(max(var.max(), 1e-300))
    need = 2 * (x_extent + 2 * r_in * K) * 1.1
    factor = 1
    while factor * g.extent < need and factor < max_pad:
        factor *= 2
    conclusive = factor * g.extent >= need

    th_lo = math.atan(2 * (-r_in - r_c) / tau)
    th_hi = math.atan(2 * (r_in - r_c) / tau)
    xg, wg = np.polynomial.legendre.leggauss(n_theta)
    th = 0.5 * (th_hi - th_lo) * xg + 0.5 * (th_hi + th_lo)
    wt = 0.5 * (th_hi - th_lo) * wg
    rs = r_c + 0.5 * tau * np.tan(th)
    jac = 0.5 * tau / np.cos(th) ** 2
    near = float(np.dot(wt * jac, _sixth_direct(_embed(f, factor), rs)))

    far = 0.0
    if R > r_sw:
        wide = _embed(f, 4)
        xs, ws = np.polynomial.legendre.leggauss(n_far)
        s_lo, s_hi = 1.0 / R, 1.0 / r_sw
        s_nodes = 0.5 * (s_hi - s_lo) * (xs + 1.0) + s_lo
        w_s = 0.5 * (s_hi - s_lo) * ws
        far = float(np.dot(w_s, _sixth_lens(wide, s_nodes) + _sixth_lens(wide, -s_nodes)))
    ratio = (near + far) / lam ** 3
    if detail:
        return StrichartzResult(ratio, near / lam ** 3, far / lam ** 3, r_sw, r_c, tau,
                                factor, bool(conclusive))
    return ratio


def kato_check(f: Field, strict: bool = True):
    """``(||f||_inf^2, ||f|| ||f'||)``; the first never exceeds the second."""
    from .spectral import h1_seminorm, l2_norm, sup_norm

    lhs = sup_norm(f) ** 2
    rhs = l2_norm(f) * h1_seminorm(f)
    if strict and lhs > rhs * (1 + 1e-8):
        raise AssertionError(f"Kato bound violated: {lhs} > {rhs}")
    return lhs, rhs
