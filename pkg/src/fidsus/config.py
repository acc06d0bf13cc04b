"""Sweep configuration: flat ``key = value`` files with ``#`` comments."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .fidelity import ROUTES as HUBBARD_ROUTES

MODEL_ROUTES = {
    "hubbard": HUBBARD_ROUTES,
    "ising2d": ("temperature", "temperature_fd", "field", "field_fd"),
    "freefermion": ("free_fermion",),
}
DEFAULT_ROUTES = {
    "hubbard": ("finite_difference",),
    "ising2d": ("temperature", "temperature_fd"),
    "freefermion": ("free_fermion",),
}


class ConfigError(ValueError):
    """Invalid or inconsistent sweep configuration."""


@dataclass(frozen=True)
class SweepConfig:
    model: str = "hubbard"
    L: tuple = ()
    Lx: int = 4
    Ly: int = 4
    boundary: str = "auto"
    t: float = 1.0
    J: float = 1.0
    h: float = 0.0
    grid: tuple = ()              # explicit grid, overrides grid_min/max/step
    grid_min: float | None = None
    grid_max: float | None = None
    grid_step: float | None = None
    dlambda: tuple = (1e-3,)
    routes: tuple = ()
    omega: float = 0.0
    tol: float = 1e-11
    max_iter: int = 4000
    krylov_depth: int = 100
    seed: int = 0
    method: str = "auto"
    dos: str = "exact"            # ising2d: exact | wang_landau
    timing: bool = False
    out: str | None = None
    workers: int = 1

    def grid_points(self) -> list[float]:
        if self.grid:
            return [float(x) for x in self.grid]
        if None in (self.grid_min, self.grid_max, self.grid_step):
            return []
        if self.grid_step <= 0:
            raise ConfigError(f"grid_step must be positive, got {self.grid_step}")
        if self.grid_max < self.grid_min:
            return []
        n = int(round((self.grid_max - self.grid_min) / self.grid_step))
        return [round(self.grid_min + i * self.grid_step, 12) for i in range(n + 1)]

    def effective_routes(self) -> tuple:
        return self.routes or DEFAULT_ROUTES[self.model]

    def validate(self) -> "SweepConfig":
        if self.model not in MODEL_ROUTES:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {sorted(MODEL_ROUTES)}")
        for r in self.effective_routes():
            if r not in MODEL_ROUTES[self.model]:
                raise ConfigError(f"route {r!r} is not valid for model {self.model!r}")
        if self.model in ("hubbard", "freefermion") and not self.L:
            raise ConfigError("L must be given for this model")
        if self.model != "freefermion" and not self.grid_points():
            raise ConfigError("parameter grid is empty")
        if not self.dlambda or any(d <= 0 for d in self.dlambda):
            raise ConfigError(f"dlambda values must be positive, got {self.dlambda}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.model == "ising2d":
            if self.dos not in ("exact", "wang_landau"):
                raise ConfigError(f"dos must be exact or wang_landau, got {self.dos!r}")
            if self.dos == "wang_landau" and any(r.startswith("field") for r in self.effective_routes()):
                raise ConfigError("field routes need the magnetization-resolved exact dos")
            if any(b <= 0 for b in self.grid_points()):
                raise ConfigError("beta grid must be positive")
        return self


def _as_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _as_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


_ALIASES = {"lambda_min": "grid_min", "lambda_max": "grid_max", "lambda_step": "grid_step",
            "u_min": "grid_min", "u_max": "grid_max", "u_step": "grid_step",
            "beta_min": "grid_min", "beta_max": "grid_max", "beta_step": "grid_step",
            "du": "dlambda", "dbeta": "dlambda", "delta": "dlambda", "route": "routes"}


def _convert(key: str, value: str):
    try:
        if key in ("L", "dlambda", "grid", "routes"):
            items = _as_list(value)
            if key == "L":
                return tuple(int(x) for x in items)
            if key == "routes":
                return tuple(items)
            return tuple(float(x) for x in items)
        if key in ("Lx", "Ly", "max_iter", "krylov_depth", "seed", "workers"):
            return int(value)
        if key in ("t", "J", "h", "grid_min", "grid_max", "grid_step", "omega", "tol"):
            return float(value)
        if key == "timing":
            return _as_bool(value)
        if key == "out":
            return value or None
        return value
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None


_FIELDS = {f.name for f in fields(SweepConfig)}
_FIELDS_LOWER = {name.lower(): name for name in _FIELDS}


def _canonical_key(key: str) -> str:
    k = key.strip()
    if k in _FIELDS:
        return k
    k = _ALIASES.get(k.lower(), k.lower())
    if k in _FIELDS:
        return k
    if k in _FIELDS_LOWER:
        return _FIELDS_LOWER[k]
    raise ConfigError(f"unknown config key {key!r}")


def parse_pairs(pairs) -> dict:
    """Convert ``(key, value)`` string pairs to typed SweepConfig fields."""
    out = {}
    for key, value in pairs:
        name = _canonical_key(key)
        out[name] = _convert(name, value.strip())
    return out


def parse_config_text(text: str) -> dict:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        pairs.append((key, value))
    return parse_pairs(pairs)


def load_config(path=None, overrides=None) -> SweepConfig:
    """Read a config file (optional) and apply ``overrides`` (a dict of typed values)."""
    values = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    if overrides:
        values.update(overrides)
    return replace(SweepConfig(), **values).validate()
