"""INI run configuration: parsing, fail-fast validation, problem building.

The flat-sectioned key-value format keeps sweep directories diff-friendly.
Recognized sections and keys:

  [run]          mode (stationary|unsteady|certify|sweep), seed
  [geometry]     L, K
  [grid]         nx, ny
  [permeability] kind (identity|layered|constant|csv), a11, a12, a22,
                 a22_base, a22_slope, csv
  [physics]      alpha
  [data]         phi (hydrostatic|barrier-lower|barrier-upper|two-reservoir),
                 k, h_left, h_right, eps0, initial (hydrostatic|
                 stationary-lower|stationary-upper|midpoint|csv), initial_csv,
                 M, project (bool)
  [penalty]      eps
  [time]         T, dt, reg
  [solver]       method (newton|picard), tol_newton
  [output]       dir, every_n_steps
"""

import configparser
import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import permeability as perm
from .errors import DamflowError, InvalidArgument
from .geometry import DamGeometry, build_grid, classify_boundary
from .penalty import PenaltyConfig, heaviside_eps
from .problem_data import (ProblemData, hydrostatic_head, hydrostatic_profile,
                           load_solution_csv, make_barrier_data, two_reservoir_head)

MODES = ("stationary", "unsteady", "certify", "sweep")


class ConfigError(DamflowError):
    """Unparseable or structurally invalid configuration."""


@dataclass
class RunConfig:
    mode: str
    seed: int
    raw: dict = dc_field(repr=False, default_factory=dict)
    path: str = ""

    def get(self, section, key, default=None):
        return self.raw.get(section, {}).get(key, default)

    def getfloat(self, section, key, default=None):
        v = self.get(section, key, default)
        return None if v is None else float(v)

    def getint(self, section, key, default=None):
        v = self.get(section, key, default)
        return None if v is None else int(v)

    def getbool(self, section, key, default=False):
        v = self.get(section, key)
        if v is None:
            return default
        return str(v).strip().lower() in ("1", "true", "yes", "on")


def load_config(path):
    """Parse an INI file into a RunConfig; raises ConfigError on any defect."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not read:
        raise ConfigError(f"config file not found: {path}")
    raw = {s: dict(parser.items(s)) for s in parser.sections()}
    mode = raw.get("run", {}).get("mode", "stationary").strip()
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")
    try:
        seed = int(raw.get("run", {}).get("seed", "0"))
    except ValueError as exc:
        raise ConfigError(f"run.seed must be an integer: {exc}") from exc
    return RunConfig(mode=mode, seed=seed, raw=raw, path=os.path.abspath(path))


@dataclass
class Problem:
    """Everything a pipeline needs, built and validated up front."""

    config: RunConfig
    geometry: DamGeometry
    grid: object
    field: object
    tags: object
    phi: object
    penalty: PenaltyConfig
    data: ProblemData
    assumption_report: object
    dt: float = 0.0
    n_steps: int = 0
    time_reg: float = 0.0
    method: str = "newton"
    tol_newton: float = 1e-9
    project: bool = True
    every_n_steps: int = 1


def build_field(cfg, geometry, grid):
    kind = (cfg.get("permeability", "kind", "identity") or "identity").strip().lower()
    if kind == "identity":
        return perm.identity_field(geometry)
    if kind == "layered":
        return perm.layered_field(a11=cfg.getfloat("permeability", "a11", 1.0),
                                  a22_base=cfg.getfloat("permeability", "a22_base", 1.0),
                                  a22_slope=cfg.getfloat("permeability", "a22_slope", 0.0),
                                  geometry=geometry)
    if kind == "constant":
        return perm.constant_anisotropic_field(a11=cfg.getfloat("permeability", "a11", 1.0),
                                               a12=cfg.getfloat("permeability", "a12", 0.0),
                                               a22=cfg.getfloat("permeability", "a22", 1.0),
                                               geometry=geometry)
    if kind == "csv":
        path = cfg.get("permeability", "csv")
        if not path:
            raise ConfigError("permeability.kind=csv requires permeability.csv")
        path = _resolve(path, cfg.path)
        if not os.path.exists(path):
            raise ConfigError(f"permeability CSV not found: {path}")
        return perm.load_field_csv(path, grid)
    raise ConfigError(f"unknown permeability kind {kind!r}")


def build_head(cfg, geometry):
    preset = (cfg.get("data", "phi", "hydrostatic") or "hydrostatic").strip().lower()
    if preset == "hydrostatic":
        k = cfg.getfloat("data", "k")
        if k is None:
            raise ConfigError("data.phi=hydrostatic requires data.k")
        return hydrostatic_head(k)
    eps0 = cfg.getfloat("data", "eps0")
    if preset in ("barrier-lower", "barrier-upper"):
        if eps0 is None:
            raise ConfigError(f"data.phi={preset} requires data.eps0")
        phi0, phi1 = make_barrier_data(eps0, geometry)
        return phi0 if preset == "barrier-lower" else phi1
    if preset == "two-reservoir":
        h_left = cfg.getfloat("data", "h_left")
        h_right = cfg.getfloat("data", "h_right")
        if h_left is None or h_right is None:
            raise ConfigError("data.phi=two-reservoir requires data.h_left and data.h_right")
        return two_reservoir_head(h_left, h_right, geometry)
    raise ConfigError(f"unknown boundary head preset {preset!r}")


def build_initial(cfg, grid, tags, field, pen):
    """Initial (u0, chi0) from the configured preset.

    Stationary-based presets solve the penalized barrier problems here, so
    validation catches their failures before the time loop starts.
    """
    preset = (cfg.get("data", "initial", "hydrostatic") or "hydrostatic").strip().lower()
    geometry = grid.geometry
    if preset == "hydrostatic":
        k = cfg.getfloat("data", "k")
        if k is None:
            raise ConfigError("data.initial=hydrostatic requires data.k")
        prof = hydrostatic_profile(k, grid)
        return prof.u, prof.chi
    if preset == "csv":
        path = cfg.get("data", "initial_csv")
        if not path:
            raise ConfigError("data.initial=csv requires data.initial_csv")
        path = _resolve(path, cfg.path)
        if not os.path.exists(path):
            raise ConfigError(f"initial CSV not found: {path}")
        sol = load_solution_csv(path, grid)
        return sol.u, sol.chi
    if preset in ("stationary-lower", "stationary-upper", "midpoint"):
        from .stationary import solve_stationary
        eps0 = cfg.getfloat("data", "eps0")
        if eps0 is None:
            raise ConfigError(f"data.initial={preset} requires data.eps0")
        phi0, phi1 = make_barrier_data(eps0, geometry)
        if preset == "stationary-lower":
            s = solve_stationary(phi0, field, grid, tags, pen)
            return s.v, s.chi
        if preset == "stationary-upper":
            s = solve_stationary(phi1, field, grid, tags, pen)
            return s.v, s.chi
        s0 = solve_stationary(phi0, field, grid, tags, pen)
        s1 = solve_stationary(phi1, field, grid, tags, pen)
        # midpoint of the order interval; chi need not equal H_eps(u) initially
        return 0.5 * (s0.v + s1.v), 0.5 * (s0.chi + s1.chi)
    raise ConfigError(f"unknown initial preset {preset!r}")


def build_problem(cfg):
    """Fail-fast construction of every object a pipeline touches."""
    from .permeability import validate_assumptions

    # configparser lowercases keys, so L/K arrive as l/k
    geometry = DamGeometry(L=cfg.getfloat("geometry", "l", 1.0),
                           K=cfg.getfloat("geometry", "k", 1.0))
    grid = build_grid(geometry, cfg.getint("grid", "nx", 16), cfg.getint("grid", "ny", 16))
    field = build_field(cfg, geometry, grid)
    report = validate_assumptions(field, grid)

    alpha = cfg.getfloat("physics", "alpha", 0.0)
    eps = cfg.getfloat("penalty", "eps", 1e-2)
    pen = PenaltyConfig(eps=eps, alpha=alpha)

    phi = build_head(cfg, geometry)
    tags = classify_boundary(grid, phi)
    u0, chi0 = build_initial(cfg, grid, tags, field, pen)

    T = cfg.getfloat("time", "t", 1.0)
    dt = cfg.getfloat("time", "dt", grid.h2)
    n_steps = int(round(T / dt))
    if n_steps >= 1 and abs(n_steps * dt - T) > 1e-12 * max(T, 1.0):
        raise ConfigError(f"time.T={T} is not an integer multiple of time.dt={dt}")

    eps0 = cfg.getfloat("data", "eps0", min(0.1, geometry.K / 4.0))
    data = ProblemData(alpha=alpha, T_final=T, eps0=eps0, phi=phi, u0=u0, chi0=chi0,
                       M=cfg.getfloat("data", "m", 0.0) or 0.0)

    method = (cfg.get("solver", "method", "newton") or "newton").strip().lower()
    if method not in ("newton", "picard"):
        raise ConfigError(f"unknown solver method {method!r}")

    return Problem(config=cfg, geometry=geometry, grid=grid, field=field, tags=tags,
                   phi=phi, penalty=pen, data=data, assumption_report=report,
                   dt=dt, n_steps=max(n_steps, 1),
                   time_reg=cfg.getfloat("time", "reg", 0.0),
                   method=method, tol_newton=cfg.getfloat("solver", "tol_newton", 1e-9),
                   project=cfg.getbool("data", "project", True),
                   every_n_steps=max(cfg.getint("output", "every_n_steps", 1), 1))


def output_dir(cfg, override=None):
    root = override or os.environ.get("DAMFLOW_OUT")
    configured = cfg.get("output", "dir", "out")
    if root:
        return os.path.join(root, os.path.basename(configured))
    return _resolve(configured, cfg.path)


def _resolve(path, config_path):
    if os.path.isabs(path):
        return path
    base = os.path.dirname(config_path) if config_path else "."
    return os.path.join(base, path)
