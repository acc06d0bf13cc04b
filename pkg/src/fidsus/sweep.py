"""Parameter sweeps emitting versioned CSV rows."""

from __future__ import annotations

import csv
import io
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from functools import lru_cache
from pathlib import Path

from . import thermal
from .config import SweepConfig
from .errors import FidsusError
from .fidelity import SolverParams, susceptibility
from .freefermion import chi_f_u0
from .hamiltonian import ModelSpec, auto_boundary, build_hubbard

CSV_TAG = "# fidsus-csv v1"
COLUMNS = ("model", "L", "boundary", "lambda", "dlambda_or_param", "F", "chi_F", "chi_F_per_L",
           "route", "error_estimate", "wall_time", "status")


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


@lru_cache(maxsize=8)
def _hubbard_ops(L, boundary, t):
    spec = ModelSpec.half_filled(L, t=t, boundary=boundary)
    return (spec.boundary,) + build_hubbard(spec)


@lru_cache(maxsize=4)
def _ising_dos(Lx, Ly, J, kind, seed):
    if kind == "wang_landau":
        return thermal.wang_landau(Lx, Ly, J, seed=seed)
    return thermal.enumerate_dos(Lx, Ly, J)


def _row(cfg, L, boundary, lam, param, F, chi, route, err, wall, status="ok"):
    return {
        "model": cfg.model, "L": str(L), "boundary": boundary, "lambda": _num(lam),
        "dlambda_or_param": _num(param), "F": _num(F), "chi_F": _num(chi),
        "chi_F_per_L": "" if chi is None else _num(chi / L), "route": route,
        "error_estimate": _num(err), "wall_time": _num(wall) if cfg.timing else "",
        "status": status,
    }


def _hubbard_point(cfg: SweepConfig, L: int, lam: float) -> list[dict]:
    boundary, H0, HI = _hubbard_ops(L, cfg.boundary, cfg.t)
    params = SolverParams(tol=cfg.tol, max_iter=cfg.max_iter, seed=cfg.seed, method=cfg.method,
                          krylov_depth=cfg.krylov_depth)
    rows = []
    for route in cfg.effective_routes():
        variants = cfg.dlambda if route == "finite_difference" else (None,)
        for d in variants:
            t0 = time.perf_counter()
            try:
                res = susceptibility(H0, HI, lam, route, params, dlam=d or 1e-3, omega=cfg.omega)
            except (FidsusError, ValueError) as exc:
                rows.append(_row(cfg, L, boundary, lam, d, None, None, route, None,
                                 time.perf_counter() - t0, f"error: {type(exc).__name__}: {exc}"))
                continue
            param = {"finite_difference": d, "dynamic_omega0": cfg.omega,
                     "krylov_integral": res.params.get("depth")}.get(route)
            rows.append(_row(cfg, L, boundary, lam, param, res.fidelity, res.chi_f, route,
                             res.error_estimate, time.perf_counter() - t0))
    return rows


def _ising_point(cfg: SweepConfig, beta: float) -> list[dict]:
    dos = _ising_dos(cfg.Lx, cfg.Ly, cfg.J, cfg.dos, cfg.seed)
    N = cfg.Lx * cfg.Ly
    rows = []
    for route in cfg.effective_routes():
        for d in cfg.dlambda:
            t0 = time.perf_counter()
            try:
                if route.startswith("temperature"):
                    res = thermal.chi_f_temperature(dos, beta, d)
                    F = thermal.thermal_fidelity(dos, beta, d)
                else:
                    res = thermal.chi_f_field(dos, beta, cfg.h, d)
                    F = thermal.field_fidelity(dos, beta, cfg.h, d)
            except (FidsusError, ValueError) as exc:
                rows.append(_row(cfg, N, "periodic", beta, d, None, None, route, None,
                                 time.perf_counter() - t0, f"error: {type(exc).__name__}: {exc}"))
                continue
            if route.endswith("_fd"):
                chi, err = res.chi_f_fd, res.error_estimate
            else:
                chi, err = res.chi_f, abs(res.chi_f_fd - res.chi_f)
            rows.append(_row(cfg, N, "periodic", beta, d, F, chi, route, err,
                             time.perf_counter() - t0))
    return rows


def _freefermion_point(cfg: SweepConfig, L: int) -> list[dict]:
    t0 = time.perf_counter()
    boundary = auto_boundary(L) if cfg.boundary == "auto" else cfg.boundary
    try:
        chi = chi_f_u0(L, cfg.t, boundary)
    except ValueError as exc:
        return [_row(cfg, L, boundary, 0.0, None, None, None, "free_fermion", None,
                     time.perf_counter() - t0, f"error: {type(exc).__name__}: {exc}")]
    return [_row(cfg, L, boundary, 0.0, None, None, chi, "free_fermion", 0.0,
                 time.perf_counter() - t0)]


def _tasks(cfg: SweepConfig):
    if cfg.model == "hubbard":
        return [("hubbard", L, lam) for L in cfg.L for lam in cfg.grid_points()]
    if cfg.model == "ising2d":
        return [("ising2d", None, beta) for beta in cfg.grid_points()]
    return [("freefermion", L, None) for L in cfg.L]


def _run_task(cfg: SweepConfig, task) -> list[dict]:
    kind, L, lam = task
    if kind == "hubbard":
        return _hubbard_point(cfg, L, lam)
    if kind == "ising2d":
        return _ising_point(cfg, lam)
    return _freefermion_point(cfg, L)


def _run_chunk(args):
    cfg, task = args
    return _run_task(cfg, task)


def run_sweep(cfg: SweepConfig) -> list[dict]:
    """Evaluate every grid point; rows come back in grid order whatever the worker count."""
    cfg.validate()
    tasks = _tasks(cfg)
    if cfg.workers == 1 or len(tasks) == 1:
        chunks = [_run_task(cfg, t) for t in tasks]
    else:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=cfg.workers, mp_context=ctx) as pool:
            chunks = list(pool.map(_run_chunk, [(cfg, t) for t in tasks]))
    return [row for chunk in chunks for row in chunk]


def format_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(CSV_TAG + "\n")
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_csv(rows, path) -> None:
    Path(path).write_text(format_csv(rows), encoding="utf-8")


def read_csv(path) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CSV_TAG:
        raise ValueError(f"{path}: missing '{CSV_TAG}' header line")
    return list(csv.DictReader(lines[1:]))


def failed_rows(rows) -> list[dict]:
    return [r for r in rows if r["status"] != "ok"]


def with_overrides(cfg: SweepConfig, **kw) -> SweepConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None}).validate()
