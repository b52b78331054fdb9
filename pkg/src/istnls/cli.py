"""Command-line interface.

Configuration is a flat ``key = value`` file; command-line flags override it.
Every command validates the complete configuration before computing.

Exit codes: 0 success, 2 configuration error, 3 precondition violation,
4 numerical singularity.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import (
    ComplexField1D,
    ComplexField2D,
    DomainError,
    EdgeDecayWarning,
    Grid1D,
    Grid2D,
    ISTError,
    KernelOperator,
    SingularityError,
    operator_norm,
)
from .evolution import evolve_factors
from .fileio import (
    read_field_1d,
    read_field_2d,
    read_json,
    read_kernel,
    write_field_2d,
    write_json,
    write_kernel,
)
from .ist import (
    BoundaryData,
    forward_scattering,
    gaussian_data,
    gaussian_solution,
    nystrom_reconstruct,
    reconstruct_rank1,
    solve_cauchy,
    SolutionSnapshot,
)
from .rank1 import Rank1Data, rank1_factors
from .verify import conserved_norm, pde_residual

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_SINGULAR = 0, 2, 3, 4
REPORT_KEYS = ("conservation_error", "residual_linf", "residual_l2", "norm_drift",
               "k", "grid", "times")


class ConfigError(Exception):
    pass


class PreconditionError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    nx: int = 256
    ny: int = 256
    x_range: tuple[float, float] = (-10.0, 10.0)
    y_range: tuple[float, float] = (-10.0, 10.0)
    k: float = 0.5
    factors: str = "gaussian"
    f_file: Optional[str] = None
    g_file: Optional[str] = None
    boundary: str = "zero"
    q_amp: float = 0.0
    q_decay: float = 0.0
    p_amp: float = 0.0
    p_decay: float = 0.0
    q_file: Optional[str] = None
    p_file: Optional[str] = None
    times: tuple[float, ...] = (0.0, 0.25, 0.5)
    dt: float = 1e-3
    residual_dt: float = 1e-3
    quadrature: str = "spectral"
    method: str = "rank1"
    pad: int = 0
    input: Optional[str] = None
    out: str = "out"
    threads: Optional[int] = None
    tol_conservation: float = 1e-5
    tol_residual: float = 1e-2
    tol_norm: float = 1e-6

    def grid2d(self) -> Grid2D:
        return Grid2D(Grid1D.from_bounds(*self.x_range, self.nx),
                      Grid1D.from_bounds(*self.y_range, self.ny))

    def validate(self) -> "RunConfig":
        if not (0 <= self.k < 1):
            raise ConfigError(f"k: coupling must satisfy 0 <= k < 1 (operator norm of the "
                              f"scattering data below one), got {self.k}")
        for name in ("nx", "ny"):
            if getattr(self, name) < 2:
                raise ConfigError(f"{name}: grid needs at least 2 points")
        for name in ("x_range", "y_range"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ConfigError(f"{name}: need finite MIN < MAX, got {lo}:{hi}")
        for name in ("dt", "residual_dt"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name}: must be positive")
        if not self.times:
            raise ConfigError("times: at least one time is required")
        if any(t < 0 for t in self.times):
            raise ConfigError("times: must be nonnegative")
        choices = {"factors": ("gaussian", "file"), "boundary": ("zero", "cosine", "file"),
                   "quadrature": ("spectral", "trapezoid"), "method": ("rank1", "nystrom")}
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name}: expected one of {', '.join(allowed)}")
        if self.factors == "file" and not (self.f_file and self.g_file):
            raise ConfigError("factors=file needs f_file and g_file")
        if self.boundary == "file" and not (self.q_file or self.p_file):
            raise ConfigError("boundary=file needs q_file and/or p_file")
        if self.pad < 0:
            raise ConfigError("pad: must be nonnegative")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads: must be at least 1")
        return self


_FLOAT = ("k", "q_amp", "q_decay", "p_amp", "p_decay", "dt", "residual_dt",
          "tol_conservation", "tol_residual", "tol_norm")
_INT = ("pad", "threads")
_STR = ("factors", "f_file", "g_file", "boundary", "q_file", "p_file", "quadrature",
        "method", "input", "out")


def _parse_range(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError("expected MIN:MAX")
    return float(parts[0]), float(parts[1])


def _parse_times(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def apply_setting(cfg: RunConfig, key: str, value: str) -> RunConfig:
    """Return ``cfg`` with one textual setting applied."""
    key = key.strip().replace("-", "_")
    value = value.strip()
    if key in ("grid", "n"):
        n = int(value)
        return replace(cfg, nx=n, ny=n)
    if key in ("grid_x", "nx"):
        return replace(cfg, nx=int(value))
    if key in ("grid_y", "ny"):
        return replace(cfg, ny=int(value))
    if key == "domain":
        r = _parse_range(value)
        return replace(cfg, x_range=r, y_range=r)
    if key == "domain_x":
        return replace(cfg, x_range=_parse_range(value))
    if key == "domain_y":
        return replace(cfg, y_range=_parse_range(value))
    if key in ("t", "times"):
        return replace(cfg, times=_parse_times(value))
    if key in _FLOAT:
        return replace(cfg, **{key: float(value)})
    if key in _INT:
        return replace(cfg, **{key: int(value)})
    if key in _STR:
        return replace(cfg, **{key: value})
    raise KeyError(key)


def load_config(path: Optional[str], overrides: Sequence[tuple[str, str]] = ()) -> RunConfig:
    cfg = RunConfig()
    if path:
        try:
            lines = Path(path).read_text().splitlines()
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        for lineno, raw in enumerate(lines, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            try:
                cfg = apply_setting(cfg, key, value)
            except KeyError:
                raise ConfigError(f"{path}:{lineno}: unknown key {key.strip()!r}") from None
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key.strip()}: {exc}") from None
    for key, value in overrides:
        try:
            cfg = apply_setting(cfg, key, value)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"--{key}: invalid value {value!r} ({exc})") from None
    if cfg.threads is not None:
        os.environ["IST_THREADS"] = str(cfg.threads)
    return cfg.validate()


# -- helpers ------------------------------------------------------------------

def _tag(t: float) -> str:
    return f"t{t:.6g}"


def _profile_potential(path: str, amp_decay: float):
    prof = read_field_1d(path)
    if np.any(prof.values.imag != 0):
        raise PreconditionError(f"{path}: boundary profile must be real")
    xs, vals = prof.grid.points, prof.values.real.copy()

    def w(x, t):
        return np.interp(x, xs, vals) * np.exp(-amp_decay * t)
    return w


def build_boundary(cfg: RunConfig) -> BoundaryData:
    if cfg.boundary == "zero":
        return BoundaryData.zero()
    if cfg.boundary == "cosine":
        q = (lambda x, t: cfg.q_amp * np.cos(x) * np.exp(-cfg.q_decay * t)) if cfg.q_amp else None
        p = (lambda y, t: cfg.p_amp * np.cos(y) * np.exp(-cfg.p_decay * t)) if cfg.p_amp else None
        return BoundaryData(p_minus=p, q_plus=q)
    q = _profile_potential(cfg.q_file, cfg.q_decay) if cfg.q_file else None
    p = _profile_potential(cfg.p_file, cfg.p_decay) if cfg.p_file else None
    return BoundaryData(p_minus=p, q_plus=q)


def build_data(cfg: RunConfig) -> Rank1Data:
    grid = cfg.grid2d()
    if cfg.factors == "gaussian":
        return gaussian_data(grid, cfg.k)
    f, g = read_field_1d(cfg.f_file), read_field_1d(cfg.g_file)
    if not (f.grid.matches(grid.gx) and g.grid.matches(grid.gy)):
        raise PreconditionError("factor files must be sampled on the configured grid")
    if f.norm() == 0 or g.norm() == 0:
        raise PreconditionError("factor files must not be identically zero")
    return Rank1Data(cfg.k, f.normalized(), g.normalized())


def _report(cfg: RunConfig, conservation, linf, l2, drift, k=None) -> dict:
    vals = dict(
        conservation_error=conservation,
        residual_linf=linf,
        residual_l2=l2,
        norm_drift=drift,
        k=cfg.k if k is None else k,
        grid={"nx": cfg.nx, "ny": cfg.ny, "x": list(cfg.x_range), "y": list(cfg.y_range)},
        times=list(cfg.times),
    )
    return {key: vals[key] for key in REPORT_KEYS}


def _conservation_error(norm2: float, k: float) -> float:
    exact = -math.log1p(-k * k)
    return abs(norm2 - exact) / exact if exact > 0 else abs(norm2)


def _residual_center(t: float, r: float) -> float:
    return t if t - r >= 0 else r


def _norm_drift(data: Rank1Data, boundary: BoundaryData, times, cfg: RunConfig) -> float:
    """Max change of ``||k f(t) g(t)||`` along the raw (not renormalized) evolution."""
    k0 = operator_norm(data.kernel())
    drift, tc, cur = 0.0, 0.0, data
    f, g = data.f_hat, data.g_hat
    for t in sorted(set(times)):
        if t > tc:
            f, g = evolve_factors(cur, boundary.p_minus, boundary.q_plus, t, cfg.dt, tc, cfg.pad)
            cur = _Raw(data.k, f, g)
            tc = t
        kern = KernelOperator(f.grid, g.grid, data.k * np.outer(f.values, g.values))
        drift = max(drift, abs(operator_norm(kern) - k0))
    return drift


@dataclass(frozen=True)
class _Raw:
    """Rank-1 factors without the unit-norm check, for raw evolution."""
    k: float
    f_hat: ComplexField1D
    g_hat: ComplexField1D


def _check(name: str, value: float, tol: float) -> None:
    if value is not None and value > tol:
        print(f"warning: {name} = {value:.3e} exceeds tolerance {tol:.1e}", file=sys.stderr)


def _pipeline(cfg: RunConfig, data: Rank1Data, boundary: BoundaryData):
    """Snapshots at the requested times plus residual reports around each."""
    r = cfg.residual_dt
    centers = [_residual_center(t, r) for t in cfg.times]
    wanted = list(cfg.times) + [c + e * r for c in centers for e in (-1, 0, 1)]
    snaps = solve_cauchy(data, boundary, wanted, cfg.dt, cfg.quadrature, cfg.pad)
    by_t = {s.t: s for s in snaps}
    reports = [pde_residual(by_t[c - r], by_t[c], by_t[c + r], r) for c in centers]
    return [by_t[float(t)] for t in cfg.times], reports, by_t, centers


# -- commands -----------------------------------------------------------------

def cmd_gaussian_demo(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    grid = cfg.grid2d()
    exact = -math.log1p(-cfg.k**2)
    cons, linf, l2, diffs = [], [], [], {}
    data = gaussian_data(grid, cfg.k)
    pipe, _, _, _ = _pipeline(cfg, data, BoundaryData.zero())
    r = cfg.residual_dt
    for t, snap_pipe in zip(cfg.times, pipe):
        snap = gaussian_solution(grid, t, cfg.k, cfg.quadrature)
        write_field_2d(out / f"u_{_tag(t)}.csv", grid, snap.u.values)
        cons.append(_conservation_error(conserved_norm(snap.u), cfg.k))
        c = _residual_center(t, r)
        rep = pde_residual(*(gaussian_solution(grid, c + e * r, cfg.k, cfg.quadrature)
                             for e in (-1, 0, 1)), r)
        linf.append(rep.linf)
        l2.append(rep.l2)
        diffs[_tag(t)] = float(np.abs(snap.u.values - snap_pipe.u.values).max())
    drift = _norm_drift(data, BoundaryData.zero(), cfg.times, cfg)
    report = _report(cfg, max(cons), max(linf), max(l2), drift)
    write_json(out / "report.json", report)
    write_json(out / "comparison.json", {"max_abs_difference": diffs,
                                         "expected_norm": exact})
    _check("conservation_error", report["conservation_error"], cfg.tol_conservation)
    _check("residual_linf", report["residual_linf"], cfg.tol_residual)
    return EXIT_OK


def _write_snapshot(out: Path, snap: SolutionSnapshot, suffix: str = "") -> dict:
    names = {}
    for name, vals in (("u", snap.u.values), ("v1", snap.v1), ("v2", snap.v2)):
        fname = f"{name}_{_tag(snap.t)}{suffix}.csv"
        write_field_2d(out / fname, snap.grid, vals)
        names[name] = fname
    return names


def cmd_solve(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    data = build_data(cfg)
    boundary = build_boundary(cfg)
    snaps, reports, by_t, centers = _pipeline(cfg, data, boundary)
    entries = []
    for snap, c in zip(snaps, centers):
        files = _write_snapshot(out, snap)
        r = cfg.residual_dt
        center = _write_snapshot(out / "aux", by_t[c], "_center")
        us = []
        for e, label in ((-1, "prev"), (1, "next")):
            s = by_t[c + e * r]
            us.append(f"u_{_tag(c)}_{label}.csv")
            write_field_2d(out / "aux" / us[-1], s.grid, s.u.values)
        aux = {"center": c, "dt": r,
               "u": ["aux/" + us[0], "aux/" + center["u"], "aux/" + us[1]],
               "v1": "aux/" + center["v1"], "v2": "aux/" + center["v2"]}
        entries.append({"t": snap.t, "files": files, "residual": aux})
    cons = max(_conservation_error(conserved_norm(s.u), cfg.k) for s in snaps)
    drift = _norm_drift(data, boundary, cfg.times, cfg)
    report = _report(cfg, cons, max(r.linf for r in reports), max(r.l2 for r in reports), drift)
    write_json(out / "report.json", report)
    write_json(out / "manifest.json", {"k": cfg.k, "snapshots": entries})
    _check("conservation_error", cons, cfg.tol_conservation)
    _check("norm_drift", drift, cfg.tol_norm)
    return EXIT_OK


def cmd_reconstruct(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    if cfg.input:
        kern = read_kernel(cfg.input)
    else:
        kern = build_data(cfg).kernel()
    nrm = operator_norm(kern)
    if nrm >= 1:
        raise PreconditionError(
            f"scattering data must have operator norm < 1 to lie in the range of the "
            f"scattering map, got {nrm:.6g}")
    if cfg.method == "nystrom":
        u = nystrom_reconstruct(kern, cfg.quadrature)
    else:
        try:
            f, g = rank1_factors(kern)
        except DomainError as exc:
            raise PreconditionError(f"{exc}; use method = nystrom") from None
        data = Rank1Data.from_factors(ComplexField1D(kern.row_grid, f),
                                      ComplexField1D(kern.col_grid, g), nrm)
        u = reconstruct_rank1(data, cfg.quadrature)
    write_field_2d(out / "u.csv", u.grid, u.values)
    write_kernel(out / "kernel.csv", kern)
    report = _report(cfg, _conservation_error(conserved_norm(u), nrm), None, None, None, k=nrm)
    write_json(out / "report.json", report)
    return EXIT_OK


def cmd_forward(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    if cfg.input:
        u = read_field_2d(cfg.input)
    else:
        u = reconstruct_rank1(build_data(cfg), cfg.quadrature)
    kern = forward_scattering(u)
    write_kernel(out / "kernel.csv", kern)
    nrm = operator_norm(kern)
    report = _report(cfg, _conservation_error(conserved_norm(u), nrm), None, None, None, k=nrm)
    write_json(out / "report.json", report)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    if not cfg.input:
        raise ConfigError("verify needs input = <solve output directory>")
    src = Path(cfg.input)
    manifest = read_json(src / "manifest.json")
    k = float(manifest["k"])
    cons, linf, l2, times = [], [], [], []
    for entry in manifest["snapshots"]:
        times.append(entry["t"])
        u = read_field_2d(src / entry["files"]["u"])
        cons.append(_conservation_error(conserved_norm(u), k))
        res = entry["residual"]
        us = [read_field_2d(src / f) for f in res["u"]]
        v1 = read_field_2d(src / res["v1"]).values.real
        v2 = read_field_2d(src / res["v2"]).values.real
        c = res["center"]
        zero = np.zeros(u.grid.shape)
        snaps = [SolutionSnapshot(c - res["dt"], us[0], zero, zero),
                 SolutionSnapshot(c, us[1], v1, v2),
                 SolutionSnapshot(c + res["dt"], us[2], zero, zero)]
        rep = pde_residual(*snaps, res["dt"])
        linf.append(rep.linf)
        l2.append(rep.l2)
    grid = u.grid
    report = {
        "conservation_error": max(cons),
        "residual_linf": max(linf),
        "residual_l2": max(l2),
        "norm_drift": None,
        "k": k,
        "grid": {"nx": grid.gx.n, "ny": grid.gy.n,
                 "x": [grid.gx.x_min, grid.gx.x_max], "y": [grid.gy.x_min, grid.gy.x_max]},
        "times": times,
    }
    old = src / "report.json"
    if old.exists():
        report["norm_drift"] = read_json(old).get("norm_drift")
    out = Path(cfg.out)
    write_json(out / "report.json", report)
    _check("residual_linf", report["residual_linf"], cfg.tol_residual)
    return EXIT_OK


COMMANDS = {
    "gaussian-demo": cmd_gaussian_demo,
    "solve": cmd_solve,
    "forward": cmd_forward,
    "reconstruct": cmd_reconstruct,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="istnls", description="Inverse scattering solver for the (2+1) NLS system.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--k", type=str)
        p.add_argument("--grid", metavar="N", type=str)
        p.add_argument("--domain", metavar="MIN:MAX", type=str)
        p.add_argument("--t", metavar="LIST", type=str)
        p.add_argument("--dt", type=str)
        p.add_argument("--input", metavar="PATH", help="input file or directory")
        p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                       help="any other configuration key")
    return parser


_VALUE_FLAGS = ("--domain", "--k", "--t", "--dt", "--grid")


def _join_negative_values(argv: Sequence[str]) -> list[str]:
    # let "--domain -8:8" through: argparse would read "-8:8" as an option
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            if nxt is None:
                out.append(tok)
            else:
                out.append(f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_values(argv))
    overrides = []
    for item in args.set:
        if "=" not in item:
            print(f"error: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return EXIT_CONFIG
        overrides.append(tuple(item.split("=", 1)))
    for key in ("out", "k", "grid", "domain", "t", "dt", "input"):
        val = getattr(args, key)
        if val is not None:
            overrides.append((key, val))
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", EdgeDecayWarning)
            return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SingularityError as exc:
        print(f"singularity: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (PreconditionError, ISTError) as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
