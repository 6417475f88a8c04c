"""Periodic sampling grid and the discrete Fourier transform contract.

Spectral coefficients are Fourier-series coefficients of the periodic
function: the forward transform carries the 1/N factor, so a constant field
``c`` has a single coefficient ``c`` at k = 0. Coefficient arrays are kept in
the standard DFT index order (index j <-> k = j for j < n/2, j - n otherwise).
The physical frequency of integer mode k is xi = (2 pi / L) k.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

PHYSICAL = "physical"
SPECTRAL = "spectral"
_TAGS = (PHYSICAL, SPECTRAL)

# imaginary residue allowed when a real result is requested
IMAG_TOL = 1e-10


class RepresentationError(ValueError):
    """Operation received a field in the wrong representation."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` points per axis on [0, L)^d."""

    d: int
    n: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {self.d}")
        if int(self.n) != self.n or self.n % 2:
            raise ValueError(f"n must be even, got {self.n}")
        if self.n < 8:
            raise ValueError(f"n must be at least 8, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def kappa(self) -> float:
        """Spacing of the frequency lattice, 2 pi / L."""
        return 2 * np.pi / self.L

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def axes(self) -> tuple[int, ...]:
        """Array axes holding the grid (trailing axes of any batched array)."""
        return tuple(range(-self.d, 0))

    def coords(self) -> list[np.ndarray]:
        """Physical coordinates per axis, broadcastable to ``shape``."""
        x = np.arange(self.n) * self.h
        return _broadcast_axes(x, self.d)

    @cached_property
    def k_int(self) -> list[np.ndarray]:
        """Integer wavenumbers per axis (DFT order), broadcastable."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        return _broadcast_axes(k, self.d)

    @cached_property
    def xi(self) -> list[np.ndarray]:
        """Physical frequencies per axis, broadcastable to ``shape``."""
        return [self.kappa * k for k in self.k_int]

    @cached_property
    def xi_abs(self) -> np.ndarray:
        """|xi| on the full frequency grid."""
        s = np.zeros(self.shape)
        for x in self.xi:
            s = s + x**2
        return np.sqrt(s)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: True where every |k_i| < n/3."""
        m = np.ones(self.shape, dtype=bool)
        for k in self.k_int:
            m = m & (3 * np.abs(k) < self.n)
        return m


def _broadcast_axes(v: np.ndarray, d: int) -> list[np.ndarray]:
    out = []
    for i in range(d):
        shp = [1] * d
        shp[i] = v.size
        out.append(v.reshape(shp))
    return out


def make_grid(d: int, n: int, L: float) -> Grid:
    return Grid(int(d), int(n), float(L))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Field:
    """Scalar samples on a grid, tagged physical or spectral.

    The sample array is copied to complex storage and made read-only.
    """

    grid: Grid
    data: np.ndarray
    tag: str = PHYSICAL

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ValueError(f"unknown representation tag {self.tag!r}")
        data = _freeze(self.data)
        if data.shape != self.grid.shape:
            raise ValueError(f"data shape {data.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "data", data)

    def physical(self) -> "Field":
        return self if self.tag == PHYSICAL else inverse_transform(self)

    def spectral(self) -> "Field":
        return self if self.tag == SPECTRAL else forward_transform(self)

    def like(self, data: np.ndarray, tag: str | None = None) -> "Field":
        return Field(self.grid, data, self.tag if tag is None else tag)

    def real(self) -> np.ndarray:
        """Physical samples as a real array; raises if the imaginary part is not negligible."""
        return to_real(self.physical().data)

    def __add__(self, other: "Field") -> "Field":
        other = _match(self, other)
        return self.like(self.data + other.data)

    def __sub__(self, other: "Field") -> "Field":
        other = _match(self, other)
        return self.like(self.data - other.data)

    def __mul__(self, c) -> "Field":
        return self.like(self.data * c)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return self.like(-self.data)


@dataclass(frozen=True, eq=False)
class VectorField:
    """d components sharing one grid and tag, stored stacked as ``(d, *grid.shape)``."""

    grid: Grid
    data: np.ndarray
    tag: str = PHYSICAL

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ValueError(f"unknown representation tag {self.tag!r}")
        data = _freeze(self.data)
        if data.shape != (self.grid.d,) + self.grid.shape:
            raise ValueError(f"vector data shape {data.shape} invalid for grid {self.grid}")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_components(cls, comps: list[Field]) -> "VectorField":
        g, t = comps[0].grid, comps[0].tag
        if any(c.grid != g or c.tag != t for c in comps):
            raise ValueError("components must share grid and representation tag")
        return cls(g, np.stack([c.data for c in comps]), t)

    @property
    def components(self) -> list[Field]:
        return [Field(self.grid, c, self.tag) for c in self.data]

    def physical(self) -> "VectorField":
        if self.tag == PHYSICAL:
            return self
        return VectorField(self.grid, _ifft(self.data, self.grid), PHYSICAL)

    def spectral(self) -> "VectorField":
        if self.tag == SPECTRAL:
            return self
        return VectorField(self.grid, _fft(self.data, self.grid), SPECTRAL)

    def like(self, data: np.ndarray, tag: str | None = None) -> "VectorField":
        return VectorField(self.grid, data, self.tag if tag is None else tag)

    def __add__(self, other: "VectorField") -> "VectorField":
        other = _match(self, other)
        return self.like(self.data + other.data)

    def __sub__(self, other: "VectorField") -> "VectorField":
        other = _match(self, other)
        return self.like(self.data - other.data)

    def __mul__(self, c) -> "VectorField":
        return self.like(self.data * c)

    __rmul__ = __mul__


def _match(a, b):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    if b.tag != a.tag:
        b = b.spectral() if a.tag == SPECTRAL else b.physical()
    return b


def _fft(a: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.fftn(a, axes=grid.axes) / grid.size


def _ifft(a: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.ifftn(a, axes=grid.axes) * grid.size


def forward_transform(f: Field) -> Field:
    if f.tag != PHYSICAL:
        raise RepresentationError("forward_transform expects a physical field")
    return Field(f.grid, _fft(f.data, f.grid), SPECTRAL)


def inverse_transform(f: Field) -> Field:
    if f.tag != SPECTRAL:
        raise RepresentationError("inverse_transform expects a spectral field")
    return Field(f.grid, _ifft(f.data, f.grid), PHYSICAL)


def to_real(a: np.ndarray, tol: float = IMAG_TOL) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    imag = float(np.max(np.abs(a.imag), initial=0.0)) if np.iscomplexobj(a) else 0.0
    if imag > tol * scale:
        raise ValueError(f"field is not real: max |imag| = {imag:.3e}")
    return np.real(a).copy()


def hermitian_symmetrize(coef: np.ndarray, grid: Grid) -> np.ndarray:
    """Project spectral coefficients onto those of a real field: (c(k) + conj c(-k)) / 2."""
    axes = grid.axes
    flipped = np.flip(coef, axis=axes)
    flipped = np.roll(flipped, 1, axis=axes)
    return 0.5 * (coef + np.conj(flipped))


def multiply_spectrum(f, mult: np.ndarray):
    """Multiply the spectrum of a Field or VectorField by ``mult``; keeps the input tag."""
    s = f.spectral()
    out = s.like(s.data * mult)
    return out if f.tag == SPECTRAL else out.physical()


def dealias(f):
    return multiply_spectrum(f, f.grid.dealias_mask)
