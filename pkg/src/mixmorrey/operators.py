"""Spectral operators: heat semigroup, Leray projector, Riesz transforms,
generic Fourier multipliers, the projected nonlinearity and the Duhamel
bilinear term.

Every symbol is set to 0 at xi = 0 unless it is the identity there (heat).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import SPECTRAL, Field, Grid, VectorField, multiply_spectrum

_BAND_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on a uniform time grid; ``data`` has shape (n_times, d, *grid.shape), spectral."""

    grid: Grid
    times: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        data = np.asarray(self.data, dtype=complex)
        g = self.grid
        if data.shape != (len(times), g.d) + g.shape:
            raise ValueError(f"trajectory data shape {data.shape} does not match grid/times")
        if len(times) > 1:
            dt = np.diff(times)
            if dt[0] <= 0 or np.max(np.abs(dt - dt[0])) > 1e-9 * dt[0]:
                raise ValueError("time grid must be uniform and increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "data", data)

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.steps else 0.0

    def state(self, m: int) -> VectorField:
        return VectorField(self.grid, self.data[m], SPECTRAL)

    def like(self, data: np.ndarray) -> "Trajectory":
        return Trajectory(self.grid, self.times, data)

    def __add__(self, other: "Trajectory") -> "Trajectory":
        _same_discretization(self, other)
        return self.like(self.data + other.data)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        _same_discretization(self, other)
        return self.like(self.data - other.data)

    def __mul__(self, c) -> "Trajectory":
        return self.like(self.data * c)

    __rmul__ = __mul__

    def physical(self) -> np.ndarray:
        return np.fft.ifftn(self.data, axes=self.grid.axes) * self.grid.size


def time_grid(T: float, M: int) -> np.ndarray:
    return np.linspace(0.0, float(T), int(M) + 1)


def _same_discretization(a: Trajectory, b: Trajectory):
    if a.grid != b.grid or a.times.shape != b.times.shape or not np.allclose(a.times, b.times):
        raise ValueError("trajectories have mismatched grids or time grids")


# --- symbols ---------------------------------------------------------------

@dataclass(frozen=True)
class MultiplierSymbol:
    """Fourier multiplier P(D). ``evaluator`` maps the list of xi arrays to values.

    Scalar symbols return an array broadcastable to the grid shape; matrix
    symbols (``matrix=True``) return shape (d, d, *grid.shape).
    """

    evaluator: Callable
    degree: float = 0.0
    matrix: bool = False

    def table(self, grid: Grid) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.asarray(self.evaluator(grid.xi), dtype=complex)
        target = ((grid.d, grid.d) if self.matrix else ()) + grid.shape
        vals = np.broadcast_to(vals, target).copy()
        zero = (0,) * grid.d
        vals[(...,) + zero] = 0
        if not np.all(np.isfinite(vals)):
            raise ValueError("multiplier symbol is not finite at every nonzero frequency")
        return vals


def power_symbol(gamma: float) -> MultiplierSymbol:
    """|xi|^gamma."""
    return MultiplierSymbol(lambda xi: np.sqrt(sum(x * x for x in xi)) ** gamma, gamma)


def riesz_symbol(j: int) -> MultiplierSymbol:
    """i xi_j / |xi|, axes numbered from 1."""
    return MultiplierSymbol(lambda xi: 1j * xi[j - 1] / np.sqrt(sum(x * x for x in xi)), 0.0)


def leray_symbol() -> MultiplierSymbol:
    """delta_ij - xi_i xi_j / |xi|^2."""
    def evaluator(xi):
        d = len(xi)
        shape = np.broadcast(*xi).shape
        r2 = sum(x * x for x in xi)
        return np.array([[np.broadcast_to(float(i == k) - xi[i] * xi[k] / r2, shape)
                          for k in range(d)] for i in range(d)])

    return MultiplierSymbol(evaluator, 0.0, matrix=True)


def apply_multiplier(f, P: MultiplierSymbol):
    """Pointwise spectral multiplication by a scalar or matrix symbol; mean mode zeroed."""
    tab = P.table(f.grid)
    if not P.matrix:
        return multiply_spectrum(f, tab)
    if not isinstance(f, VectorField):
        raise TypeError("matrix symbols act on vector fields")
    s = f.spectral()
    out = s.like(np.einsum("ij...,j...->i...", tab, s.data))
    return out if f.tag == SPECTRAL else out.physical()


# --- operators --------------------------------------------------------------

def heat_symbol(grid: Grid, nu: float, t: float) -> np.ndarray:
    return np.exp(-nu * t * grid.xi_abs**2)


def heat_semigroup(f, nu: float, t: float):
    if t < 0:
        raise ValueError("t must be nonnegative")
    if not nu > 0:
        raise ValueError("nu must be positive")
    return multiply_spectrum(f, heat_symbol(f.grid, nu, t))


def _leray_array(s: np.ndarray, grid: Grid) -> np.ndarray:
    """Leray projection of stacked spectral vector data (..., d, *shape)."""
    xi = grid.xi
    r2 = grid.xi_abs**2
    r2 = np.where(r2 > 0, r2, 1.0)
    d = grid.d
    comp_axis = s.ndim - d - 1
    comps = [np.take(s, i, axis=comp_axis) for i in range(d)]
    dot = sum(x * c for x, c in zip(xi, comps)) / r2
    out = np.stack([c - x * dot for x, c in zip(xi, comps)], axis=comp_axis)
    out[(...,) + (0,) * d] = 0
    return out


def leray_project(u: VectorField) -> VectorField:
    s = u.spectral()
    out = s.like(_leray_array(s.data, u.grid))
    return out if u.tag == SPECTRAL else out.physical()


def riesz_transform(f: Field, j: int) -> Field:
    if not 1 <= j <= f.grid.d:
        raise ValueError(f"axis {j} outside 1..{f.grid.d}")
    return apply_multiplier(f, riesz_symbol(j))


def fractional_laplacian(f, s: float):
    """|xi|^s with the mean mode zeroed."""
    r = f.grid.xi_abs
    with np.errstate(divide="ignore"):
        tab = np.where(r > 0, np.where(r > 0, r, 1.0) ** s, 0.0)
    return multiply_spectrum(f, tab)


def gradient(f: Field) -> VectorField:
    s = f.spectral()
    return VectorField(f.grid, np.stack([1j * x * s.data for x in f.grid.xi]), SPECTRAL)


def divergence(u: VectorField) -> Field:
    s = u.spectral()
    return Field(u.grid, sum(1j * x * c for x, c in zip(u.grid.xi, s.data)), SPECTRAL)


def _check_band(s: np.ndarray, grid: Grid, name: str):
    a = np.abs(s)
    top = float(a.max(initial=0.0))
    if top == 0:
        return
    out = a[..., ~grid.dealias_mask]
    if float(out.max(initial=0.0)) > _BAND_TOL * top:
        raise ValueError(f"{name} has spectral content outside the dealiasing band")


def _nonlinear_array(us: np.ndarray, vs: np.ndarray, grid: Grid, check: bool = True) -> np.ndarray:
    """P div(u (x) v) for stacked spectral data (..., d, *shape); component l is
    sum_j d_j (u_j v_l)."""
    if check:
        _check_band(us, grid, "u")
        _check_band(vs, grid, "v")
    mask = grid.dealias_mask
    ax = grid.axes
    up = np.fft.ifftn(us * mask, axes=ax) * grid.size
    vp = np.fft.ifftn(vs * mask, axes=ax) * grid.size
    d = grid.d
    cax = us.ndim - d - 1
    ucomp = [np.take(up, j, axis=cax) for j in range(d)]
    out = []
    for l in range(d):
        vl = np.take(vp, l, axis=cax)
        acc = 0
        for j in range(d):
            acc = acc + 1j * grid.xi[j] * (np.fft.fftn(ucomp[j] * vl, axes=ax) / grid.size)
        out.append(acc * mask)
    return _leray_array(np.stack(out, axis=cax), grid)


def nonlinear_term(u: VectorField, v: VectorField) -> VectorField:
    """Leray-projected divergence of the dealiased tensor product; returned spectral."""
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    return VectorField(u.grid, _nonlinear_array(u.spectral().data, v.spectral().data, u.grid),
                       SPECTRAL)


def integrator_weights(a: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """E, w0, w1 for one step of length tau of y' = -a y + g with g linear in time.

    y(tau) = E y(0) + w0 g(0) + w1 (g(tau) - g(0)), exact for linear g.
    """
    x = np.asarray(a, dtype=float) * tau
    E = np.exp(-x)
    small = x < 0.5
    xs = np.where(small, x, 1.0)
    xl = np.where(small, 1.0, x)
    # series of (1 - e^-x)/x and (x - 1 + e^-x)/x^2
    s0 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    term = np.ones_like(x)
    fact1, fact2 = 1.0, 2.0
    for k in range(20):
        s0 = s0 + term / fact1
        s1 = s1 + term / fact2
        term = term * (-xs)
        fact1 *= k + 2
        fact2 *= k + 3
    w0 = np.where(small, s0, -np.expm1(-xl) / xl) * tau
    w1 = np.where(small, s1, (xl + np.expm1(-xl)) / xl**2) * tau
    return E, w0, w1


def duhamel(forcing: np.ndarray, grid: Grid, times: np.ndarray, nu: float) -> np.ndarray:
    """int_0^t S(t - t') g(t') dt' on the time grid, with g piecewise linear.

    ``forcing`` is spectral data of shape (n_times, ...); the recursion
    B_{m+1} = E B_m + w0 g_m + w1 (g_{m+1} - g_m) costs one pass over time.
    """
    out = np.zeros_like(forcing)
    if len(times) < 2:
        return out
    tau = float(times[1] - times[0])
    E, w0, w1 = integrator_weights(nu * grid.xi_abs**2, tau)
    for m in range(len(times) - 1):
        g0, g1 = forcing[m], forcing[m + 1]
        out[m + 1] = E * out[m] + w0 * g0 + w1 * (g1 - g0)
    return out


def bilinear_B(u: Trajectory, v: Trajectory, nu: float) -> Trajectory:
    """Duhamel term of the nonlinearity with forcing -P div(u (x) v).

    The sign makes u = S(t) u0 + B(u, u) the Navier-Stokes mild formulation.
    """
    _same_discretization(u, v)
    if not nu > 0:
        raise ValueError("nu must be positive")
    N = -_nonlinear_array(u.data, v.data, u.grid)
    return u.like(duhamel(N, u.grid, u.times, nu))


def free_trajectory(u0: VectorField, nu: float, times: np.ndarray) -> Trajectory:
    s = u0.spectral().data
    tt = np.asarray(times, dtype=float).reshape((-1,) + (1,) * (u0.grid.d + 1))
    data = np.exp(-nu * tt * u0.grid.xi_abs**2) * s[None]
    return Trajectory(u0.grid, times, data)
