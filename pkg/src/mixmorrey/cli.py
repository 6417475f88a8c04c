"""Batch driver: ``mixmorrey norm | decompose | solve | verify``.

Exit codes: 0 success, 2 malformed input, 3 parameter validation failure,
4 solver divergence, 5 failing lab check.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import lab
from .grid import SPECTRAL, Field, VectorField, make_grid
from .io import FieldFormatError, read_field, write_field, write_trajectory
from .lpdecomp import partition
from .norms import (ParameterError, SpaceParams, besov_norm, mixed_lebesgue_norm,
                    mixed_morrey_report, trajectory_block_norms)
from .solver import SolverConfig, anisotropic_initial_data, picard_solve, taylor_green

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PARAMS = 3
EXIT_DIVERGED = 4
EXIT_CHECK = 5


class InputError(Exception):
    pass


@dataclass
class ExperimentConfig:
    command: str = "verify"
    grid: dict = field(default_factory=lambda: {"d": 2, "n": 64, "L": float(2 * np.pi)})
    space: dict = field(default_factory=lambda: {"q": [2.0, 2.0], "lam": [0.5, 0.5], "r": "inf",
                                                 "flavor": "physical-besov"})
    solver: dict = field(default_factory=lambda: {"nu": 1.0, "T": 1.0, "M": 64, "K_estimate": 1.0,
                                                  "max_picard": 50, "tol": 1e-10})
    data: dict = field(default_factory=lambda: {"kind": "anisotropic", "eps": 0.01,
                                                "variant": "product"})
    lab: dict = field(default_factory=lambda: {"samples": 30, "ceiling": 10.0, "shift": 0.5,
                                               "stride": None, "checks": list(lab.CHECKS),
                                               "overrides": {}})
    seed: int = 1
    out: str = "out"
    jobs: int = 1

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        raw = json.loads(text)
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError(f"unknown config keys {sorted(unknown)}")
        base = cls()
        for k, v in raw.items():
            cur = getattr(base, k)
            setattr(base, k, {**cur, **v} if isinstance(cur, dict) else v)
        return base

    def space_params(self) -> SpaceParams:
        return SpaceParams.from_dict(self.space)

    def make_grid(self):
        g = self.grid
        return make_grid(int(g["d"]), int(g["n"]), float(g["L"]))


# --- argument handling ---------------------------------------------------------

def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mixmorrey", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="run seed (u64)")
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("--out", help="output directory")
    common.add_argument("--require-admissible", action="store_true",
                        help="refuse data above the smallness threshold")
    common.add_argument("--plot", action="store_true", help="also render PNG figures (needs matplotlib)")
    space = argparse.ArgumentParser(add_help=False)
    space.add_argument("--q", type=_floats, help="comma-separated Morrey exponents")
    space.add_argument("--lam", type=_floats, help="comma-separated Morrey indices")
    space.add_argument("--r", type=float, help="l^r exponent (inf allowed)")
    space.add_argument("--regularity", type=float, help="Besov regularity (default: critical)")
    space.add_argument("--flavor", choices=["physical-besov", "fourier-besov"])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", parents=[common, space], help="norm of one or more field files")
    p.add_argument("files", nargs="+")
    p.add_argument("--kind", choices=["besov", "morrey", "lebesgue"], default="besov")
    p.add_argument("--radii", type=_floats, help="one radius per file: fit the norm's power law")
    p.add_argument("--stride", type=int)

    p = sub.add_parser("decompose", parents=[common, space], help="dyadic blocks of a field file")
    p.add_argument("file")

    p = sub.add_parser("solve", parents=[common, space], help="Picard solve of the mild equation")
    p.add_argument("--data", choices=["anisotropic", "taylor-green", "zero", "file"])
    p.add_argument("--data-file")
    p.add_argument("--eps", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--K", type=float, dest="K_estimate", help="bilinear constant estimate K0")

    p = sub.add_parser("verify", parents=[common], help="run lab checks")
    p.add_argument("--checks", help="comma-separated check names (default: all)")
    p.add_argument("--controls-only", action="store_true",
                   help="judge only the negative controls, which must fail")
    p.add_argument("--n", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--stride", type=int)
    return ap


def resolve_config(args) -> ExperimentConfig:
    if args.config:
        try:
            cfg = ExperimentConfig.from_json(Path(args.config).read_text())
        except OSError as e:
            raise InputError(f"cannot read config {args.config}: {e.strerror}") from e
        except json.JSONDecodeError as e:
            raise InputError(f"config {args.config} is not valid JSON: {e}") from e
    else:
        cfg = ExperimentConfig()
    cfg.command = args.command
    for k in ("seed", "jobs", "out"):
        if getattr(args, k, None) is not None:
            setattr(cfg, k, getattr(args, k))
    for k in ("q", "lam", "r", "regularity", "flavor"):
        v = getattr(args, k, None)
        if v is not None:
            cfg.space[k] = v
    if getattr(args, "q", None) is not None or getattr(args, "lam", None) is not None:
        if getattr(args, "regularity", None) is None:
            cfg.space.pop("regularity", None)
    for k in ("nu", "T", "M", "K_estimate"):
        v = getattr(args, k, None)
        if v is not None:
            cfg.solver[k] = v
    if getattr(args, "data", None):
        cfg.data["kind"] = args.data
    if getattr(args, "data_file", None):
        cfg.data["path"] = args.data_file
    if getattr(args, "eps", None) is not None:
        cfg.data["eps"] = args.eps
    if args.command == "verify":
        if args.checks:
            cfg.lab["checks"] = args.checks.split(",")
        if args.n:
            cfg.grid["n"] = args.n
        if args.samples:
            cfg.lab["samples"] = args.samples
    if getattr(args, "stride", None):
        cfg.lab["stride"] = args.stride
    if not 0 <= int(cfg.seed) < 2**64:
        raise ParameterError("seed must be an unsigned 64-bit integer")
    return cfg


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_text(path: Path, text: str):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


# --- commands -------------------------------------------------------------------

def cmd_norm(cfg: ExperimentConfig, args) -> int:
    fields = [read_field(f) for f in args.files]
    params = cfg.space_params()
    reports = []
    for f in fields:
        if args.kind == "besov":
            reports.append(besov_norm(f, params, stride=args.stride).to_dict())
        elif args.kind == "morrey":
            res = mixed_morrey_report(f, params.q, params.lam, stride=args.stride)
            reports.append({"value": float(res.value),
                            "ball_argmax": {"center": [float(x) for x in res.center * f.grid.h],
                                            "radius": float(res.radius)}})
        else:
            reports.append({"value": mixed_lebesgue_norm(f, params.q)})
    out = {"kind": args.kind, "space": params.to_dict(), "reports": reports}
    if args.radii:
        if len(args.radii) != len(fields):
            raise ParameterError("--radii needs one radius per file")
        vals = np.array([r["value"] for r in reports])
        if len(vals) > 1 and np.all(vals > 0):
            out["exponent_fit"] = float(np.polyfit(np.log(args.radii), np.log(vals), 1)[0])
    text = json.dumps(out, sort_keys=True)
    print(text)
    if args.out:
        _write_text(_out_dir(cfg) / "norm.json", text + "\n")
    return EXIT_OK


def cmd_decompose(cfg: ExperimentConfig, args) -> int:
    f = read_field(args.file)
    g = f.grid
    p = partition(g)
    params = cfg.space_params()
    out = _out_dir(cfg)
    spec = f.spectral().data
    rows = []
    vector = isinstance(f, VectorField)
    for l in p.scales:
        block = spec * p.phi[l]
        bf = (VectorField if vector else Field)(g, block, SPECTRAL).physical()
        write_field(out / f"block_{l}.anf", bf)
        res = mixed_morrey_report(bf, params.q, params.lam)
        rows.append((l, float(res.value)))
    low = spec * p.psi
    write_field(out / "low.anf", (VectorField if vector else Field)(g, low, SPECTRAL).physical())
    with open(out / "blocks.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["l", "morrey_norm"])
        w.writerows(rows)
    print(json.dumps({"scales": [int(l) for l in p.scales], "out": str(out)}))
    return EXIT_OK


def initial_data(cfg: ExperimentConfig, grid) -> VectorField:
    kind = cfg.data.get("kind", "anisotropic")
    if kind == "anisotropic":
        return anisotropic_initial_data(grid, cfg.space["q"], cfg.space["lam"], float(cfg.data["eps"]),
                                        cfg.data.get("variant", "product"))
    if kind == "taylor-green":
        return taylor_green(grid, float(cfg.data.get("amplitude", 1.0)))
    if kind == "zero":
        return VectorField(grid, np.zeros((grid.d,) + grid.shape, dtype=complex), SPECTRAL)
    if kind == "file":
        if "path" not in cfg.data:
            raise InputError("data kind 'file' needs a path")
        u = read_field(cfg.data["path"], vector=True)
        if u.grid != grid:
            raise InputError("data file grid does not match the configured grid")
        return u
    raise ParameterError(f"unknown data kind {kind!r}")


def cmd_solve(cfg: ExperimentConfig, args) -> int:
    grid = cfg.make_grid()
    s = cfg.solver
    params = cfg.space_params()
    scfg = SolverConfig(float(s["nu"]), float(s["T"]), int(s["M"]), params, float(s["K_estimate"]),
                        int(s.get("max_picard", 50)), float(s.get("tol", 1e-10)), s.get("stride"))
    u0 = initial_data(cfg, grid)
    if args.require_admissible:
        from .solver import admissibility

        adm = admissibility(u0, scfg)
        if not adm.ok:
            print(f"data Z-norm {adm.eps:.6g} is not below the threshold {scfg.threshold:.6g}",
                  file=sys.stderr)
            return EXIT_PARAMS
    traj, report = picard_solve(u0, scfg)
    out = _out_dir(cfg)
    _write_text(out / "report.json", report.to_json() + "\n")
    if not report.diverged:
        write_trajectory(out / "trajectory.anf", traj, scfg.nu)
        p = partition(grid)
        bn = trajectory_block_norms(traj, params, p, stride=scfg.stride)
        with open(out / "block_norms.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"l={l}" for l in p.scales])
            for t, row in zip(traj.times, bn):
                w.writerow([repr(float(t))] + [repr(float(x)) for x in row])
        if args.plot:
            from . import plotting

            plotting.plot_block_norms(out / "block_norms.csv", out / "block_norms.png")
    print(report.to_json())
    if report.converged:
        return EXIT_OK
    print("Picard iteration did not converge" + (" (diverged)" if report.diverged else ""),
          file=sys.stderr)
    return EXIT_DIVERGED


def _lab_config(cfg: ExperimentConfig) -> lab.LabConfig:
    g = cfg.grid
    L = cfg.lab
    return lab.LabConfig(int(g["d"]), int(g["n"]), float(g["L"]), int(L.get("samples", 30)), int(cfg.seed),
                         float(L.get("ceiling", 10.0)), float(L.get("shift", 0.5)), L.get("stride"),
                         dict(L.get("overrides", {})))


def _run_job(job):
    name, lcfg, path = job
    reports = lab.run_check(name, lcfg)
    lab.write_jsonl(path, reports)
    return name, [r.to_dict() for r in reports]


def _judge(rep: dict, controls_only: bool) -> bool:
    ctrl = rep.get("control") or {}
    ctrl_ok = ctrl.get("verdict", "fail") == ctrl.get("required", "fail") if ctrl else True
    if controls_only:
        return ctrl_ok
    return rep["verdict"] == "pass"


def cmd_verify(cfg: ExperimentConfig, args) -> int:
    names = list(cfg.lab.get("checks") or lab.CHECKS)
    unknown = [n for n in names if n not in lab.ALL_CHECKS]
    if unknown:
        raise ParameterError(f"unknown checks {unknown}; available: {', '.join(lab.ALL_CHECKS)}")
    lcfg = _lab_config(cfg)
    out = _out_dir(cfg)
    jobs = [(n, lcfg, out / f"{n}.jsonl") for n in names]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=int(cfg.jobs)) as ex:
            results = list(ex.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    reports = [r for _, reps in results for r in reps]
    _write_text(out / "verify.jsonl", "".join(json.dumps(r, sort_keys=True) + "\n" for r in reports))
    failing = [r["id"] for r in reports if not _judge(r, args.controls_only)]
    for r in reports:
        print(json.dumps({k: r.get(k) for k in ("id", "fitted_C", "spread", "slope", "verdict")}
                         | {"control": (r.get("control") or {}).get("verdict")}, sort_keys=True))
    if args.plot:
        from . import plotting

        plotting.plot_verify(reports, out / "verify.png")
    if failing:
        print("failing checks: " + ", ".join(failing), file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


COMMANDS = {"norm": cmd_norm, "decompose": cmd_decompose, "solve": cmd_solve, "verify": cmd_verify}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except (FieldFormatError, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ParameterError as e:
        print(f"invalid parameters: {e}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())
