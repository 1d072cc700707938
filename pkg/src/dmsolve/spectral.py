"""Uniform periodic grids, complex fields and Fourier multipliers.

Conventions
-----------
Node ``j`` sits at ``x_j = -X/2 + j*dx`` with ``dx = X/n``. The unitary
transform is ``fhat_k = dx/sqrt(2 pi) * sum_j f_j exp(-i eta_k x_j)`` with
``eta_k = 2 pi k / X``, so that ``dx*sum|f_j|^2 == deta*sum|fhat_k|^2``.
All norms below use this convention.

The free propagator ``T_r = exp(i r d^2/dx^2)`` acts as the multiplier
``exp(-i r eta^2)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import CommensurabilityError, InvalidInputError

__all__ = [
    "GridSpec",
    "Field",
    "propagate",
    "propagate_many",
    "l2_norm",
    "h1_seminorm",
    "lp_norm",
    "sup_norm",
    "inner",
    "translate",
    "boost",
    "derivative",
    "second_derivative",
    "low_pass",
    "boundary_mass",
    "check_boundary",
    "resample",
    "BoundaryMassWarning",
]


class BoundaryMassWarning(RuntimeWarning):
    """The field carries non-negligible mass near the box edge."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[-X/2, X/2)``."""

    n: int
    extent: float

    def __post_init__(self):
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise InvalidInputError(f"n must be a power of two >= 8, got {self.n}")
        if not (math.isfinite(self.extent) and self.extent > 0):
            raise InvalidInputError(f"extent must be positive, got {self.extent}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "extent", float(self.extent))

    @property
    def dx(self) -> float:
        return self.extent / self.n

    @property
    def deta(self) -> float:
        return 2 * np.pi / self.extent

    @property
    def x(self) -> np.ndarray:
        return -self.extent / 2 + self.dx * np.arange(self.n)

    @property
    def eta(self) -> np.ndarray:
        """Frequencies in FFT order (``k = 0..n/2-1, -n/2..-1``)."""
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def eta_max(self) -> float:
        return np.pi / self.dx

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.n, dtype=complex))

    def field(self, values) -> "Field":
        return Field(self, values)

    def padded(self, factor: int) -> "GridSpec":
        """Same spacing, ``factor`` times the box (factor a power of two)."""
        return GridSpec(self.n * factor, self.extent * factor)


@dataclass(frozen=True)
class Field:
    """Complex samples of a function on a :class:`GridSpec`."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n,):
            raise InvalidInputError(
                f"expected {self.grid.n} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("field contains non-finite samples")
        object.__setattr__(self, "values", vals)

    # arithmetic is convenient for finite differences and line searches
    def __add__(self, other):
        return Field(self.grid, self.values + _vals(other, self.grid))

    def __sub__(self, other):
        return Field(self.grid, self.values - _vals(other, self.grid))

    def __mul__(self, s):
        return Field(self.grid, self.values * s)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)

    @property
    def power(self) -> float:
        """``||f||^2``."""
        return float(self.grid.dx * np.sum(np.abs(self.values) ** 2))

    def fourier(self) -> np.ndarray:
        """Unitary transform in FFT order (see module docstring)."""
        g = self.grid
        phase = np.exp(1j * g.eta * g.extent / 2)
        return g.dx / np.sqrt(2 * np.pi) * phase * np.fft.fft(self.values)

    @classmethod
    def from_fourier(cls, grid: GridSpec, fhat) -> "Field":
        phase = np.exp(-1j * grid.eta * grid.extent / 2)
        vals = np.fft.ifft(phase * np.asarray(fhat)) * np.sqrt(2 * np.pi) / grid.dx
        return cls(grid, vals)

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


def _vals(other, grid):
    if isinstance(other, Field):
        if other.grid != grid:
            raise InvalidInputError("fields live on different grids")
        return other.values
    return other


def _check_real(name, value):
    if not np.isfinite(value):
        raise InvalidInputError(f"{name} must be finite, got {value}")


def propagate(f: Field, r: float) -> Field:
    """Free Schroedinger evolution ``T_r f``; exactly unitary on the grid."""
    _check_real("r", r)
    if r == 0:
        return f.copy()
    mult = np.exp(-1j * r * f.grid.eta ** 2)
    return Field(f.grid, np.fft.ifft(mult * np.fft.fft(f.values)))


def propagate_many(f: Field, rs) -> np.ndarray:
    """Rows ``T_{r_i} f`` for every ``r_i`` as a ``(len(rs), n)`` array."""
    rs = np.asarray(rs, dtype=float)
    if not np.all(np.isfinite(rs)):
        raise InvalidInputError("propagation times must be finite")
    fk = np.fft.fft(f.values)
    mult = np.exp(-1j * rs[:, None] * f.grid.eta[None, :] ** 2)
    return np.fft.ifft(mult * fk[None, :], axis=1)


def inner(f: Field, g: Field) -> complex:
    """``<f, g> = int conj(f) g dx``."""
    return complex(f.grid.dx * np.vdot(f.values, _vals(g, f.grid)))


def l2_norm(f: Field) -> float:
    return math.sqrt(f.power)


def h1_seminorm(f: Field) -> float:
    """``||f'||`` through the spectral multiplier ``i eta``."""
    g = f.grid
    fk = np.fft.fft(f.values)
    # dx * sum |f'_j|^2 with f' = ifft(i eta fft f), via Parseval
    return math.sqrt(g.dx / g.n * float(np.sum((g.eta * np.abs(fk)) ** 2)))


def lp_norm(f: Field, p: float) -> float:
    if not p >= 1:
        raise InvalidInputError(f"p must be >= 1, got {p}")
    if math.isinf(p):
        return sup_norm(f)
    return float(f.grid.dx * np.sum(np.abs(f.values) ** p)) ** (1.0 / p)


def sup_norm(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def translate(f: Field, y: float) -> Field:
    """``f(. - y)``; grid shifts are exact rolls, others a spectral phase."""
    _check_real("y", y)
    g = f.grid
    steps = y / g.dx
    k = round(steps)
    if abs(steps - k) < 1e-12 * max(1.0, abs(steps)):
        return Field(g, np.roll(f.values, k))
    mult = np.exp(-1j * g.eta * y)
    return Field(g, np.fft.ifft(mult * np.fft.fft(f.values)))


def boost(f: Field, v: float, strict: bool = True) -> Field:
    """``exp(i v x) f(x)``; ``v`` must be a grid frequency ``2 pi k / X``."""
    _check_real("v", v)
    g = f.grid
    k = v / g.deta
    if strict and abs(k - round(k)) > 1e-9 * max(1.0, abs(k)):
        raise CommensurabilityError(
            f"boost v={v} is not a multiple of 2*pi/X={g.deta}")
    return Field(g, np.exp(1j * v * g.x) * f.values)


def derivative(f: Field) -> Field:
    """First spectral derivative; the unpaired Nyquist mode is dropped."""
    g = f.grid
    mult = 1j * g.eta
    mult[g.n // 2] = 0.0
    return Field(g, np.fft.ifft(mult * np.fft.fft(f.values)))


def second_derivative(f: Field) -> Field:
    g = f.grid
    return Field(g, np.fft.ifft(-(g.eta ** 2) * np.fft.fft(f.values)))


def low_pass(f: Field, fraction: float = 2.0 / 3.0) -> Field:
    """Zero every mode with ``|eta| > fraction * eta_max``."""
    g = f.grid
    fk = np.fft.fft(f.values)
    fk[np.abs(g.eta) > fraction * g.eta_max] = 0.0
    return Field(g, np.fft.ifft(fk))


def boundary_mass(f: Field, frac: float = 0.4) -> float:
    """``dx * sum_{|x_j| > frac*X} |f_j|^2``."""
    g = f.grid
    mask = np.abs(g.x) > frac * g.extent
    return float(g.dx * np.sum(np.abs(f.values[mask]) ** 2))


def check_boundary(f: Field, rel: float = 1e-10, warn: bool = True) -> bool:
    """True when the edge mass is below ``rel * ||f||^2``; warns otherwise."""
    lam = f.power
    bm = boundary_mass(f)
    ok = bm <= rel * max(lam, np.finfo(float).tiny)
    if not ok and warn:
        warnings.warn(
            f"boundary mass {bm:.3e} exceeds {rel:g} * ||f||^2 = {rel * lam:.3e}; "
            "enlarge the box", BoundaryMassWarning, stacklevel=2)
    return ok


def resample(f: Field, points) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``f`` at arbitrary points."""
    g = f.grid
    pts = np.asarray(points, dtype=float)
    fk = np.fft.fft(f.values) / g.n
    eta = g.eta.copy()
    # split the Nyquist mode evenly so real data stays real
    nyq = g.n // 2
    out = np.zeros(pts.shape, dtype=complex)
    rel = pts - g.x[0]
    for start in range(0, pts.size, 4096):
        chunk = rel.ravel()[start:start + 4096]
        ph = np.exp(1j * np.outer(chunk, eta))
        ph[:, nyq] = np.cos(eta[nyq] * chunk)
        out.ravel()[start:start + 4096] = ph @ fk
    return out
