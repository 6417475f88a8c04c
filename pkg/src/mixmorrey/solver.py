"""Picard iteration for the mild Navier-Stokes formulation u = S(t) u0 + B(u, u).

Smallness is judged with the fixed-point bound: with K = K0 max(1, 1/nu)
and eps the Z-norm of the free evolution, the iteration is a contraction
on the ball of radius 2 eps as soon as 4 K eps < 1.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .grid import SPECTRAL, Field, Grid, VectorField, hermitian_symmetrize
from .lpdecomp import partition
from .norms import ParameterError, SpaceParams, trajectory_block_norms, z_from_blocks
from .operators import (Trajectory, bilinear_B, fractional_laplacian, free_trajectory,
                        leray_project, time_grid)

# residual growth past this is treated as divergence
_BLOWUP = 1e150


class SolverDivergence(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    nu: float
    T: float
    M: int
    params: SpaceParams
    K_estimate: float
    max_picard: int = 50
    tol: float = 1e-10
    stride: int | None = None

    def __post_init__(self):
        if not self.nu > 0:
            raise ParameterError("nu must be positive")
        if not self.T > 0:
            raise ParameterError("T must be positive")
        if int(self.M) != self.M or self.M < 1:
            raise ParameterError("M must be a positive integer")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if int(self.max_picard) != self.max_picard or self.max_picard < 1:
            raise ParameterError("max_picard must be a positive integer")
        if not self.K_estimate > 0:
            raise ParameterError("K_estimate must be positive")
        self.params.check_admissible()

    @property
    def K(self) -> float:
        """Effective bilinear constant K0 max(1, 1/nu)."""
        return self.K_estimate * max(1.0, 1.0 / self.nu)

    @property
    def threshold(self) -> float:
        return 1.0 / (4.0 * self.K)

    def times(self) -> np.ndarray:
        return time_grid(self.T, self.M)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "params"}
        d["params"] = self.params.to_dict()
        return d


@dataclass
class ConvergenceReport:
    residuals: list
    z0_norm: float
    final_norm: float
    admissible: bool
    contraction_estimate: float
    converged: bool
    diverged: bool
    iterations: int
    bound_ok: bool
    threshold: float
    config: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        for k in ("z0_norm", "final_norm", "contraction_estimate", "threshold"):
            out[k] = _jfloat(out[k])
        out["residuals"] = [_jfloat(r) for r in self.residuals]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _jfloat(x):
    x = float(x)
    if np.isfinite(x):
        return x
    return "nan" if np.isnan(x) else ("inf" if x > 0 else "-inf")


# --- initial data ------------------------------------------------------------

def periodic_distance(grid: Grid, axis: int) -> np.ndarray:
    x = grid.coords()[axis]
    return np.minimum(x, grid.L - x)


def _clamped_power(grid: Grid, axis: int, alpha: float) -> np.ndarray:
    r = np.maximum(periodic_distance(grid, axis), grid.h / 2)
    return r ** (-alpha)


def anisotropic_initial_data(grid: Grid, q, lam, eps: float, variant: str = "product") -> VectorField:
    """eps (0, ..., 0, g) made divergence-free, with g = |D|^sigma f.

    ``product``: f = prod_j |x_j|^(-(1 - lam_j)/q_j); ``single-axis``:
    f = |x_1|^(-(1 - lam_1)/q_1). sigma = -1 + sum (1 - lam_i)/q_i.
    Distances are periodic and clamped at h/2; the result is band-limited to
    the reconstruction band of the dyadic partition.
    """
    params = SpaceParams.critical(q, lam)
    params.check_dimension(grid.d)
    if not params.m > 0:
        raise ParameterError("sum (1 - lam_i)/q_i must be positive")
    alphas = [(1 - l) / qq for qq, l in zip(params.q, params.lam)]
    if variant == "product":
        if not all(l > 0 for l in params.lam):
            raise ParameterError("the product variant needs every lam_i > 0")
        f = np.ones(grid.shape)
        for j, a in enumerate(alphas):
            f = f * _clamped_power(grid, j, a)
    elif variant == "single-axis":
        if not params.lam[0] > 0:
            raise ParameterError("the single-axis variant needs lam_1 > 0")
        f = np.broadcast_to(_clamped_power(grid, 0, alphas[0]), grid.shape)
    else:
        raise ParameterError(f"unknown variant {variant!r}")
    g = fractional_laplacian(Field(grid, f), params.regularity).spectral().data
    g = hermitian_symmetrize(g, grid) * partition(grid).band_mask()
    data = np.zeros((grid.d,) + grid.shape, dtype=complex)
    data[-1] = eps * g
    return leray_project(VectorField(grid, data, SPECTRAL))


def taylor_green(grid: Grid, amplitude: float = 1.0) -> VectorField:
    """(sin x cos y, -cos x sin y) scaled to the period; d = 2 only."""
    if grid.d != 2:
        raise ValueError("Taylor-Green data is two-dimensional")
    x, y = (c * grid.kappa for c in grid.coords())
    u = np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)]) * amplitude
    return VectorField(grid, u).spectral()


# --- solve -------------------------------------------------------------------

def free_evolution(u0: VectorField, cfg: SolverConfig) -> Trajectory:
    return free_trajectory(u0, cfg.nu, cfg.times())


def traj_z_norm(traj: Trajectory, cfg: SolverConfig) -> float:
    p = partition(traj.grid)
    bn = trajectory_block_norms(traj, cfg.params, p, stride=cfg.stride)
    return z_from_blocks(bn, traj.times, cfg.params, p.scales)


class Admissibility(NamedTuple):
    eps: float  # Z-norm of the free evolution
    ok: bool


def admissibility(u0: VectorField, cfg: SolverConfig) -> Admissibility:
    z0 = traj_z_norm(free_evolution(u0, cfg), cfg)
    return Admissibility(z0, bool(z0 < cfg.threshold))


def _contraction(res: list) -> float:
    r = np.array([x for x in res if np.isfinite(x) and x > 0])
    if r.size < 2:
        return 0.0
    ratios = r[1:] / r[:-1]
    tail = ratios[len(ratios) // 2:]
    return float(np.exp(np.mean(np.log(tail))))


def picard_solve(u0: VectorField, cfg: SolverConfig) -> tuple[Trajectory, ConvergenceReport]:
    z0 = free_evolution(u0, cfg)
    z0_norm = traj_z_norm(z0, cfg)
    u = z0
    residuals = []
    converged = diverged = False
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(cfg.max_picard):
            try:
                new = z0 + bilinear_B(u, u, cfg.nu)
            except (FloatingPointError, ValueError):
                diverged = True
                break
            if not np.all(np.isfinite(new.data)):
                diverged = True
                residuals.append(float("inf"))
                break
            res = traj_z_norm(new - u, cfg)
            residuals.append(res)
            u = new
            if not np.isfinite(res) or res > _BLOWUP:
                diverged = True
                break
            if res <= cfg.tol:
                converged = True
                break
    final = traj_z_norm(u, cfg) if not diverged else float("inf")
    notes = [f"time horizon truncated to [0, {cfg.T}]"]
    if not converged and not diverged:
        notes.append("max_picard reached before the tolerance")
    report = ConvergenceReport(
        residuals=residuals, z0_norm=z0_norm, final_norm=final,
        admissible=bool(z0_norm < cfg.threshold), contraction_estimate=_contraction(residuals),
        converged=converged, diverged=diverged, iterations=len(residuals),
        bound_ok=bool(converged and final <= 2 * z0_norm + cfg.tol),
        threshold=cfg.threshold, config=cfg.to_dict(), notes=notes)
    return u, report


@dataclass
class ContinuityReport:
    ratio: float
    ceiling: float
    solution_gap: float
    data_gap: float
    eps: float

    def to_dict(self) -> dict:
        return {k: _jfloat(v) for k, v in asdict(self).items()}


def continuity_experiment(u0: VectorField, du0: VectorField, cfg: SolverConfig) -> ContinuityReport:
    """Gap of solutions over gap of free evolutions, against (1 - 4 K eps)^-1."""
    v0 = u0 + du0
    u, ru = picard_solve(u0, cfg)
    v, rv = picard_solve(v0, cfg)
    if ru.diverged or rv.diverged:
        raise SolverDivergence("a Picard solve diverged")
    data_gap = traj_z_norm(free_evolution(du0, cfg), cfg)
    sol_gap = traj_z_norm(u - v, cfg)
    ratio = 0.0 if data_gap == 0 else sol_gap / data_gap
    eps = max(ru.z0_norm, rv.z0_norm)
    k = 4 * cfg.K * eps
    ceiling = 1.0 / (1.0 - k) if k < 1 else float("inf")
    return ContinuityReport(ratio, ceiling, sol_gap, data_gap, eps)
