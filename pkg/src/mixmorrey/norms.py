"""Norm families on discrete fields.

Vector fields are measured through their pointwise Euclidean magnitude.
The mean mode never enters a Besov-type norm: every block multiplier
vanishes at xi = 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import morrey
from .grid import Field, Grid, VectorField
from .lpdecomp import DyadicPartition, partition

PHYSICAL_BESOV = "physical-besov"
FOURIER_BESOV = "fourier-besov"
FLAVORS = (PHYSICAL_BESOV, FOURIER_BESOV)
_CRIT_TOL = 1e-9


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceParams:
    q: tuple
    lam: tuple
    r: float = np.inf
    regularity: float = 0.0
    flavor: str = PHYSICAL_BESOV

    def __post_init__(self):
        q = tuple(float(x) for x in np.atleast_1d(self.q))
        lam = tuple(float(x) for x in np.atleast_1d(self.lam))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "regularity", float(self.regularity))
        if len(q) != len(lam):
            raise ParameterError("q and lam need one entry per axis")
        if any(not 1 <= x < np.inf for x in q):
            raise ParameterError(f"q entries must lie in [1, inf), got {q}")
        if any(not 0 <= x < 1 for x in lam):
            raise ParameterError(f"lam entries must lie in [0, 1), got {lam}")
        if not self.r >= 1:
            raise ParameterError(f"r must be >= 1, got {self.r}")
        if self.flavor not in FLAVORS:
            raise ParameterError(f"unknown flavor {self.flavor!r}")

    @property
    def d(self) -> int:
        return len(self.q)

    @property
    def m(self) -> float:
        """sum (1 - lam_i) / q_i."""
        return sum((1 - l) / q for q, l in zip(self.q, self.lam))

    @property
    def fourier_sum(self) -> float:
        """sum (1 - (1 - lam_i) / q_i)."""
        return sum(1 - (1 - l) / q for q, l in zip(self.q, self.lam))

    def critical_regularity(self) -> float:
        if self.flavor == PHYSICAL_BESOV:
            return -1 + self.m
        return -1 + self.fourier_sum

    @classmethod
    def critical(cls, q, lam, r=np.inf, flavor=PHYSICAL_BESOV) -> "SpaceParams":
        p = cls(q, lam, r, 0.0, flavor)
        return cls(p.q, p.lam, p.r, p.critical_regularity(), flavor)

    def with_(self, **kw) -> "SpaceParams":
        d = dict(q=self.q, lam=self.lam, r=self.r, regularity=self.regularity, flavor=self.flavor)
        d.update(kw)
        return SpaceParams(**d)

    def check_dimension(self, d: int):
        if self.d != d:
            raise ParameterError(f"parameters have {self.d} axes, grid has {d}")

    def check_admissible(self):
        """Raise unless the regularity is the critical one with a positive defining sum."""
        if self.flavor == PHYSICAL_BESOV:
            if not self.m > 0:
                raise ParameterError("sum (1 - lam_i)/q_i must be positive")
        elif not self.fourier_sum > 0:
            raise ParameterError("sum (1 - (1 - lam_i)/q_i) must be positive")
        crit = self.critical_regularity()
        if abs(self.regularity - crit) > _CRIT_TOL:
            raise ParameterError(f"regularity {self.regularity} is not the critical value {crit}")

    def to_dict(self) -> dict:
        return {"q": list(self.q), "lam": list(self.lam), "r": _jnum(self.r),
                "regularity": self.regularity, "flavor": self.flavor}

    @classmethod
    def from_dict(cls, d: dict) -> "SpaceParams":
        flavor = d.get("flavor", PHYSICAL_BESOV)
        r = float(d.get("r", np.inf))
        if "regularity" in d and d["regularity"] is not None:
            return cls(d["q"], d["lam"], r, float(d["regularity"]), flavor)
        return cls.critical(d["q"], d["lam"], r, flavor)


def _jnum(x):
    return "inf" if np.isinf(x) else x


@dataclass
class NormReport:
    value: float
    per_scale: dict
    ball_argmax: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"value": float(self.value),
                "per_scale": {str(l): float(v) for l, v in self.per_scale.items()},
                "ball_argmax": self.ball_argmax}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def lr_aggregate(values, r: float, axis: int = -1) -> np.ndarray:
    """l^r norm along ``axis``; r = inf is the max."""
    v = np.abs(np.asarray(values, dtype=float))
    if v.shape[axis] == 0:
        return np.zeros(np.delete(v.shape, axis))
    top = np.max(v, axis=axis, keepdims=True)
    if np.isinf(r):
        return np.squeeze(top, axis=axis)
    safe = np.where(top > 0, top, 1.0)
    out = np.sum((v / safe) ** r, axis=axis, keepdims=True) ** (1.0 / r) * safe
    return np.squeeze(out, axis=axis)


def _magnitude(a: np.ndarray, d: int, vector: bool) -> np.ndarray:
    a = np.abs(a)
    if vector:
        a = np.sqrt(np.sum(a * a, axis=-(d + 1)))
    return a


def _phys_array(f) -> np.ndarray:
    return f.physical().data


def mixed_lebesgue_norm(f, p) -> float:
    g = f.grid
    a = _magnitude(_phys_array(f), g.d, isinstance(f, VectorField))
    return float(morrey.mixed_lebesgue(a, p, g.h, g.d))


def mixed_morrey_norm(f, q, lam, *, stride=None, full_diameter=False) -> float:
    return float(mixed_morrey_report(f, q, lam, stride=stride, full_diameter=full_diameter).value)


def mixed_morrey_report(f, q, lam, *, stride=None, full_diameter=False) -> morrey.MorreyResult:
    g = f.grid
    a = _magnitude(_phys_array(f), g.d, isinstance(f, VectorField))
    return morrey.mixed_morrey(a, q, lam, g.h, g.d, stride=stride, full_diameter=full_diameter)


def spectral_morrey(coef: np.ndarray, grid: Grid, q, lam, *, stride=None) -> morrey.MorreyResult:
    """Mixed-Morrey norm of a coefficient array read as a function on the frequency lattice.

    Trailing ``d`` axes are in DFT order; leading axes are batch axes.
    """
    a = np.fft.fftshift(np.abs(coef), axes=grid.axes)
    return morrey.mixed_morrey(a, q, lam, grid.kappa, grid.d, periodic=False, stride=stride)


def block_morrey(spec: np.ndarray, grid: Grid, params: SpaceParams, p: DyadicPartition,
                 vector: bool, *, stride=None) -> morrey.MorreyResult:
    """Unweighted mixed-Morrey norms of every block of spectral data ``spec``.

    ``spec`` has shape (..., [d,] *grid.shape); the result has shape (..., n_scales).
    """
    d = grid.d
    lead = spec.shape[: spec.ndim - d - (1 if vector else 0)]
    mult = p.stacked()  # (nl, *shape)
    if vector:
        mult = mult[:, None]
    expand = spec.reshape(lead + (1,) + spec.shape[len(lead):])
    blocks = mult * expand  # (..., nl, [d,] *shape)
    if params.flavor == PHYSICAL_BESOV:
        a = np.fft.ifftn(blocks, axes=grid.axes) * grid.size
        a = _magnitude(a, d, vector)
        return morrey.mixed_morrey(a, params.q, params.lam, grid.h, d, stride=stride)
    a = _magnitude(blocks, d, vector)
    return spectral_morrey(a, grid, params.q, params.lam, stride=stride)


def _check_flavor(params: SpaceParams, flavor: str):
    if params.flavor != flavor:
        raise ParameterError(f"expected {flavor} parameters, got {params.flavor}")


def _besov_report(f, params: SpaceParams, p: DyadicPartition | None, stride) -> NormReport:
    g = f.grid
    params.check_dimension(g.d)
    p = p or partition(g)
    vector = isinstance(f, VectorField)
    res = block_morrey(f.spectral().data, g, params, p, vector, stride=stride)
    scales = np.array(list(p.scales))
    weighted = 2.0 ** (scales * params.regularity) * res.value
    value = float(lr_aggregate(weighted, params.r))
    k = int(np.argmax(weighted))
    c = res.center[k]
    if params.flavor == PHYSICAL_BESOV:
        center = [float(x) for x in c * g.h]
    else:
        center = [float(x) for x in (c - g.n // 2) * g.kappa]
    arg = {"scale": int(scales[k]), "center": center, "radius": float(res.radius[k])}
    return NormReport(value, {int(l): float(v) for l, v in zip(scales, weighted)}, arg)


def besov_mixed_morrey_norm(f, params: SpaceParams, p: DyadicPartition | None = None,
                            *, stride=None) -> NormReport:
    _check_flavor(params, PHYSICAL_BESOV)
    return _besov_report(f, params, p, stride)


def fourier_besov_mixed_morrey_norm(f, params: SpaceParams, p: DyadicPartition | None = None,
                                    *, stride=None) -> NormReport:
    _check_flavor(params, FOURIER_BESOV)
    return _besov_report(f, params, p, stride)


def besov_norm(f, params: SpaceParams, p: DyadicPartition | None = None, *, stride=None) -> NormReport:
    """Dispatch on the parameter flavor."""
    return _besov_report(f, params, p, stride)


# --- time-space norms -----------------------------------------------------

def _uniform_dt(times: np.ndarray) -> float:
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        return 0.0
    dt = np.diff(times)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * max(abs(dt[0]), 1e-300):
        raise ValueError("time grid must be uniform")
    return float(dt[0])


def trajectory_block_norms(traj, params: SpaceParams, p: DyadicPartition | None = None,
                           *, stride=None) -> np.ndarray:
    """(n_times, n_scales) unweighted block norms of every state."""
    g = traj.grid
    params.check_dimension(g.d)
    p = p or partition(g)
    return block_morrey(traj.data, g, params, p, True, stride=stride).value


def time_reduce(block_norms: np.ndarray, times, a: float) -> np.ndarray:
    _uniform_dt(times)
    if np.isinf(a):
        return np.max(block_norms, axis=0)
    if a == 1:
        if len(times) < 2:
            return np.zeros(block_norms.shape[1:])
        return np.trapezoid(block_norms, np.asarray(times, dtype=float), axis=0)
    raise ValueError(f"time exponent must be 1 or inf, got {a}")


def timespace_from_blocks(block_norms, times, a, regularity, r, scales) -> float:
    inner = time_reduce(block_norms, times, a)
    w = 2.0 ** (np.asarray(list(scales)) * regularity)
    return float(lr_aggregate(w * inner, r))


def timespace_norm(traj, a: float, params: SpaceParams, p: DyadicPartition | None = None,
                   *, stride=None) -> float:
    """Time norm inside the l^r sum: || 2^(l reg) ||block_l||_{L^a_t} ||_{l^r}."""
    p = p or partition(traj.grid)
    bn = trajectory_block_norms(traj, params, p, stride=stride)
    return timespace_from_blocks(bn, traj.times, a, params.regularity, params.r, p.scales)


def z_from_blocks(block_norms, times, params: SpaceParams, scales) -> float:
    hi = timespace_from_blocks(block_norms, times, np.inf, params.regularity, params.r, scales)
    lo = timespace_from_blocks(block_norms, times, 1, params.regularity + 2, params.r, scales)
    return max(hi, lo)


def z_norm(traj, params: SpaceParams, p: DyadicPartition | None = None, nu: float = 1.0,
           *, stride=None) -> float:
    """max of the L^inf-in-time norm at the critical regularity and the L^1 norm two orders up."""
    if not nu > 0:
        raise ParameterError("nu must be positive")
    params.check_admissible()
    p = p or partition(traj.grid)
    bn = trajectory_block_norms(traj, params, p, stride=stride)
    return z_from_blocks(bn, traj.times, params, p.scales)
