"""Discrete mixed-Lebesgue and mixed-Morrey norms.

The Morrey supremum runs over balls B(x, R) with centers on a (possibly
strided) sub-lattice of grid points and radii in the dyadic set
{h, 2h, 4h, ...} up to half the period. Balls are closed and use the
per-axis torus distance. The restricted mixed norm of ``f * 1_B`` is
iterated innermost axis first; along x1 the ball is an interval, so each
inner sum is a difference of prefix sums, and one vectorised gather covers
every (radius, row offset, center) triple.

Functions on the frequency lattice are not periodic; ``periodic=False``
zero-pads to twice the size so no ball wraps onto the support.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_CENTERS = 4096
# elements per gather chunk
_CHUNK = 1 << 22


def mixed_lebesgue(a: np.ndarray, p, h: float, d: int) -> np.ndarray:
    """Iterated discrete L^p norm over the trailing ``d`` axes, x1 innermost.

    Finite exponents use (h * sum |.|^p)^(1/p); p = inf is a plain max.
    """
    p = _vec(p, d)
    if any(pi < 1 for pi in p):
        raise ValueError(f"exponents must be >= 1, got {p}")
    v = np.abs(np.asarray(a))
    scale = np.max(v, axis=tuple(range(-d, 0)), keepdims=True) if v.size else v
    scale = np.where(scale > 0, scale, 1.0)
    v = v / scale
    for i, pi in enumerate(p):
        ax = -(d - i)
        if np.isinf(pi):
            v = np.max(v, axis=ax)
        else:
            v = (h * np.sum(v**pi, axis=ax)) ** (1.0 / pi)
    return v * scale.reshape(v.shape)


def _vec(p, d):
    if np.isscalar(p):
        return (float(p),) * d
    p = tuple(float(x) for x in p)
    if len(p) != d:
        raise ValueError(f"expected {d} exponents, got {len(p)}")
    return p


def dyadic_radii(h: float, period: float, d: int, full: bool = False) -> tuple[float, ...]:
    """{h, 2h, ...} up to period/2; ``full`` appends the torus diameter."""
    radii = []
    r = h
    while r <= 0.5 * period * (1 + 1e-12):
        radii.append(r)
        r *= 2
    if full:
        diam = 0.5 * period * np.sqrt(d)
        if diam > radii[-1] * (1 + 1e-12):
            radii.append(diam)
    return tuple(radii)


def auto_stride(n: int, d: int, max_centers: int = MAX_CENTERS) -> int:
    s = 1
    while (n // s) ** d > max_centers and s < n:
        s *= 2
    return s


@dataclass(frozen=True)
class _Plan:
    P: int  # lattice period in points (padded size when not periodic)
    d: int
    radii_pts: tuple  # radii in units of h
    centers: tuple  # per-axis center index arrays
    rows: np.ndarray  # (nrows, d - 1) outer offsets
    half: np.ndarray  # (nrows,) half-width along x1
    count: np.ndarray  # (nrows,) points along x1
    r_index: np.ndarray  # (nrows,) radius index
    level_starts: tuple  # reduceat starts per aggregation level


@lru_cache(maxsize=64)
def _plan(P: int, d: int, radii_pts: tuple, n_box: int, stride: int) -> _Plan:
    centers = tuple(np.arange(0, n_box, stride) for _ in range(d))
    rows, half, count, ridx = [], [], [], []
    span = range(-(P // 2) + 1, P // 2 + 1)
    for ri, R in enumerate(radii_pts):
        R2 = R * R * (1 + 1e-12)
        reach = int(np.floor(R + 1e-9))
        offs = [o for o in span if abs(o) <= reach]
        # sort by (o_{d-1}, ..., o_1) so groups are contiguous
        for combo in itertools.product(offs, repeat=d - 1):
            rem = R2 - sum(o * o for o in combo)
            if rem < 0:
                continue
            m = int(np.floor(np.sqrt(rem) + 1e-9))
            rows.append(combo[::-1])
            half.append(m)
            count.append(min(2 * m + 1, P))
            ridx.append(ri)
    rows = np.array(rows, dtype=np.int64).reshape(len(half), d - 1)
    half = np.array(half, dtype=np.int64)
    count = np.array(count, dtype=np.int64)
    ridx = np.array(ridx, dtype=np.int64)

    # level k (1..d-1) sums over o_k with (R, o_{k+1}, ..., o_{d-1}) fixed;
    # starts are relative to the rows left after the previous level
    keys = np.column_stack([ridx, rows])
    level_starts = []
    for _ in range(1, d):
        rest = np.delete(keys, 1, axis=1)
        change = np.ones(len(rest), dtype=bool)
        change[1:] = np.any(rest[1:] != rest[:-1], axis=1)
        st = np.flatnonzero(change)
        level_starts.append(st)
        keys = rest[st]
    return _Plan(P, d, radii_pts, centers, rows, half, count, ridx, tuple(level_starts))


@dataclass
class MorreyResult:
    value: np.ndarray  # (...) sup values
    center: np.ndarray  # (..., d) index of the maximising center
    radius: np.ndarray  # (...) maximising radius (physical units)


def mixed_morrey(a: np.ndarray, q, lam, h: float, d: int, *, periodic: bool = True,
                 stride: int | None = None, radii: tuple | None = None,
                 full_diameter: bool = False) -> MorreyResult:
    """Discrete mixed-Morrey norm of the trailing ``d`` axes of ``a``.

    sup over centers x and radii R of R^(-sum lam_i/q_i) ||a 1_B(x,R)||_{L^q}.
    Leading axes are batch axes.
    """
    q = _vec(q, d)
    lam = _vec(lam, d)
    if any(not 1 <= qi < np.inf for qi in q):
        raise ValueError(f"Morrey exponents must lie in [1, inf), got {q}")
    if any(not 0 <= li < 1 for li in lam):
        raise ValueError(f"Morrey indices must lie in [0, 1), got {lam}")
    a = np.abs(np.asarray(a))
    n = a.shape[-1]
    if a.shape[-d:] != (n,) * d:
        raise ValueError("trailing axes must form a cubic grid")
    batch = a.shape[:-d]
    a = a.reshape((-1,) + (n,) * d)

    if periodic:
        P = n
        if radii is None:
            radii = dyadic_radii(h, n * h, d, full_diameter)
    else:
        P = 2 * n
        pad = [(0, 0)] + [(0, n)] * d
        a = np.pad(a, pad)
        if radii is None:
            radii = dyadic_radii(h, n * h, d, full_diameter)
    radii_pts = tuple(float(r / h) for r in radii)
    if stride is None:
        stride = auto_stride(n, d)
    plan = _plan(P, d, radii_pts, n, int(stride))

    B = a.shape[0]
    scale = a.reshape(B, -1).max(axis=1)
    scale = np.where(scale > 0, scale, 1.0)
    g = (a / scale.reshape((B,) + (1,) * d)) ** q[0] * h

    # prefix sums along x1 over three periods
    tiled = np.concatenate([g, g, g], axis=1)
    pre = np.zeros((B, 3 * P + 1) + (P,) * (d - 1))
    np.cumsum(tiled, axis=1, out=pre[:, 1:])

    nrows = len(plan.half)
    c = plan.centers
    ncs = tuple(len(ci) for ci in c)
    # index arrays: (nrows, nc1, nc2, ...)
    start = np.where(plan.count < P, -plan.half + P, P)
    s1 = (start.reshape(nrows, 1) + c[0].reshape(1, -1))
    lo = s1.reshape([nrows, ncs[0]] + [1] * (d - 1))
    hi = lo + plan.count.reshape([nrows] + [1] * d)
    # flat indices into pre reshaped to (B, (3P + 1) * P^(d - 1))
    flat_other = np.zeros([nrows] + [1] * d, dtype=np.int64)
    for j in range(1, d):
        shp = [nrows] + [1] * d
        shp[j + 1] = ncs[j]
        idx = (c[j].reshape(1, -1) + plan.rows[:, j - 1].reshape(-1, 1)) % P
        flat_other = flat_other + idx.reshape(shp) * P ** (d - 1 - j)
    row = P ** (d - 1)
    flo = (lo * row + flat_other).ravel()
    fhi = (hi * row + flat_other).ravel()
    gshape = (nrows,) + ncs

    weights = np.array(radii_pts) ** (-sum(l / qq for l, qq in zip(lam, q))) * h ** (
        -sum(l / qq for l, qq in zip(lam, q)))
    nrad = len(radii_pts)
    per_b = nrows * int(np.prod(ncs))
    chunk = max(1, _CHUNK // max(per_b, 1))

    best = np.empty(B)
    best_c = np.empty((B, d), dtype=np.int64)
    best_r = np.empty(B)
    for b0 in range(0, B, chunk):
        pb = pre[b0:b0 + chunk].reshape(min(chunk, B - b0), -1)
        v = np.take(pb, fhi, axis=1)
        v -= np.take(pb, flo, axis=1)
        v = v.reshape((-1,) + gshape)
        np.maximum(v, 0.0, out=v)
        for k in range(1, d):
            v = v ** (q[k] / q[k - 1])
            v = np.add.reduceat(v, plan.level_starts[k - 1], axis=1) * h
        # v now has one row per radius (rows collapse in order of radius)
        v = v ** (1.0 / q[-1])
        v = v * weights.reshape((1, nrad) + (1,) * d)
        flat = v.reshape(v.shape[0], -1)
        arg = np.argmax(flat, axis=1)
        best[b0:b0 + chunk] = flat[np.arange(flat.shape[0]), arg]
        ri, *ci = np.unravel_index(arg, (nrad,) + ncs)
        best_r[b0:b0 + chunk] = np.array(radii)[ri]
        best_c[b0:b0 + chunk] = np.stack([c[j][ci[j]] for j in range(d)], axis=1)

    best = best * scale
    return MorreyResult(best.reshape(batch), best_c.reshape(batch + (d,)), best_r.reshape(batch))
