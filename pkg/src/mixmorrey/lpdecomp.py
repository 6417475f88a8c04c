"""Dyadic Littlewood-Paley partition on the discrete frequency lattice.

The profile chi equals 1 on [0, 3/4], vanishes on [4/3, inf) and is joined
by a C-infinity step. Blocks use phi(xi) = chi(|xi|/2) - chi(|xi|), which
is supported in the annulus 3/4 <= |xi| <= 8/3, and phi_l = phi(2^-l .).
The low-frequency lump psi = chi(2^-l_min |xi|) holds the mean: l_min is the
largest scale whose lump vanishes on every nonzero lattice frequency. l_max
is the largest scale whose annulus stays inside the dealiased ball
|xi| <= kappa n / 3. Summing the lump and all blocks telescopes to
chi(2^-(l_max+1) |xi|), which is identically 1 for |xi| <= (4/3) 2^l_max:
the reconstruction band.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Field, Grid, VectorField, multiply_spectrum, dealias

LO, HI = 0.75, 4.0 / 3.0
_TOL = 1e-12


def smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def chi(rho: np.ndarray) -> np.ndarray:
    return smooth_step((HI - np.asarray(rho, dtype=float)) / (HI - LO))


def scale_range(grid: Grid) -> tuple[int, int]:
    kap = grid.kappa
    l_min = int(np.floor(np.log2(3 * kap / 4) + 1e-12))
    top = kap * grid.n / 3
    l_max = int(np.floor(np.log2(top * 3 / 8) + 1e-12))
    if l_max - l_min + 1 < 2:
        raise ValueError(f"grid n={grid.n} resolves fewer than two dyadic scales")
    return l_min, l_max


@dataclass
class DyadicPartition:
    grid: Grid
    l_min: int
    l_max: int
    phi: dict = field(repr=False)
    psi: np.ndarray = field(repr=False)

    @property
    def scales(self) -> range:
        return range(self.l_min, self.l_max + 1)

    @property
    def band_radius(self) -> float:
        return HI * 2.0**self.l_max

    def band_mask(self) -> np.ndarray:
        return self.grid.xi_abs <= self.band_radius * (1 + _TOL)

    def low(self, l: int) -> np.ndarray:
        """Multiplier of S_l: the lump plus all blocks below l (any l <= l_max + 1)."""
        if l > self.l_max + 1:
            raise ValueError(f"scale {l} above l_max + 1")
        if l <= self.l_min:
            # below the partition only the mean survives
            return chi(2.0 ** (-l) * self.grid.xi_abs)
        out = self.psi.copy()
        for lp in range(self.l_min, l):
            out = out + self.phi[lp]
        return out

    def stacked(self) -> np.ndarray:
        """(n_scales, *shape) array of block multipliers."""
        return np.stack([self.phi[l] for l in self.scales])


def build_partition(grid: Grid) -> DyadicPartition:
    l_min, l_max = scale_range(grid)
    r = grid.xi_abs
    phi = {l: chi(2.0 ** (-l - 1) * r) - chi(2.0 ** (-l) * r) for l in range(l_min, l_max + 1)}
    psi = chi(2.0 ** (-l_min) * r)
    return DyadicPartition(grid, l_min, l_max, phi, psi)


_CACHE: dict = {}


def partition(grid: Grid) -> DyadicPartition:
    p = _CACHE.get(grid)
    if p is None:
        p = _CACHE[grid] = build_partition(grid)
    return p


def _check_scale(p: DyadicPartition, l: int):
    if not p.l_min <= l <= p.l_max:
        raise ValueError(f"scale {l} outside [{p.l_min}, {p.l_max}]")


def dyadic_block(f, l: int, p: DyadicPartition | None = None):
    p = p or partition(f.grid)
    _check_scale(p, l)
    return multiply_spectrum(f, p.phi[l])


def low_pass(f, l: int, p: DyadicPartition | None = None):
    p = p or partition(f.grid)
    if not p.l_min <= l <= p.l_max + 1:
        raise ValueError(f"scale {l} outside [{p.l_min}, {p.l_max + 1}]")
    return multiply_spectrum(f, p.low(l))


def lump(f, p: DyadicPartition | None = None):
    p = p or partition(f.grid)
    return multiply_spectrum(f, p.psi)


def decompose(f, p: DyadicPartition | None = None) -> dict:
    """Blocks keyed by scale, plus the low lump under key ``'low'``."""
    p = p or partition(f.grid)
    out = {l: dyadic_block(f, l, p) for l in p.scales}
    out["low"] = lump(f, p)
    return out


def block_stack(f, p: DyadicPartition | None = None) -> np.ndarray:
    """Physical samples of every block, shape (n_scales, [d,] *grid.shape)."""
    p = p or partition(f.grid)
    s = f.spectral().data
    g = f.grid
    mult = p.stacked()
    if isinstance(f, VectorField):
        mult = mult[:, None]
    return np.fft.ifftn(mult * s[None], axes=g.axes) * g.size


def reconstruct(f, p: DyadicPartition | None = None):
    """Lump plus sum of blocks; equals ``f`` when its spectrum lies in the band."""
    p = p or partition(f.grid)
    parts = decompose(f, p)
    out = parts.pop("low")
    for v in parts.values():
        out = out + v
    return out


def in_band(f, p: DyadicPartition | None = None, tol: float = _TOL) -> bool:
    p = p or partition(f.grid)
    s = np.abs(f.spectral().data)
    scale = max(float(s.max(initial=0.0)), 1e-300)
    outside = s[..., ~p.band_mask()] if s.ndim > f.grid.d else s[~p.band_mask()]
    return float(outside.max(initial=0.0)) <= tol * scale


def _require_band(f, p, name):
    if not in_band(f, p):
        raise ValueError(f"{name} has spectral content outside the reconstruction band")


def _product(a: Field, b: Field) -> Field:
    a = dealias(a).physical()
    b = dealias(b).physical()
    return dealias(Field(a.grid, a.data * b.data))


def _block(f: Field, l: int, p: DyadicPartition) -> Field:
    if l < p.l_min or l > p.l_max:
        return f.like(np.zeros(f.grid.shape))
    return multiply_spectrum(f, p.phi[l])


@dataclass
class ParaproductParts:
    T_vw: Field
    T_wv: Field
    R_vw: Field

    def total(self) -> Field:
        return self.T_vw + self.T_wv + self.R_vw


def _para(v: Field, w: Field, p: DyadicPartition) -> Field:
    # T_v w = sum_l S_{l-1} v * Delta_l w
    out = Field(v.grid, np.zeros(v.grid.shape))
    for l in p.scales:
        out = out + _product(multiply_spectrum(v, p.low(l - 1)), _block(w, l, p))
    return out.physical()


def _rem(v: Field, w: Field, p: DyadicPartition) -> Field:
    # sum_l Delta_l v * (Delta_{l-1} + Delta_l + Delta_{l+1}) w, plus the
    # product of the means so the three parts add up with nonzero means too
    out = _product(lump(v, p), lump(w, p))
    for l in p.scales:
        wt = _block(w, l - 1, p) + _block(w, l, p) + _block(w, l + 1, p)
        out = out + _product(_block(v, l, p), wt)
    return out.physical()


def paraproduct(v: Field, w: Field, p: DyadicPartition | None = None) -> ParaproductParts:
    """Bony split of the dealiased product v w, every product dealiased."""
    p = p or partition(v.grid)
    _require_band(v, p, "v")
    _require_band(w, p, "w")
    return ParaproductParts(_para(v, w, p), _para(w, v, p), _rem(v, w, p))


def product(v: Field, w: Field) -> Field:
    """Dealiased pointwise product."""
    return _product(v, w).physical()
