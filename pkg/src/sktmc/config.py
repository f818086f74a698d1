"""Run configuration: flat key=value files with sections.

Format (INI-style, parsed by configparser, no interpolation):

    [run]
    scenario = cross-diffusion      ; linear | growth | cross-diffusion | custom

    [model]
    d1 = 0.25                       ; base diffusion rates (> 0)
    d11 = 0.05                      ; cross-diffusion rates (>= 0)
    a1 = 0.5                        ; growth rates
    a11 = 0.25                      ; competition rates (>= 0)

    [grid]
    xmin = -8
    xmax = 8
    n = 161

    [initial]
    u1 = two-bumps(-1.5,1.5,0.8,3)  ; gaussian(c,w,mass) | constant(v) | two-bumps(c1,c2,w,mass)
    u2 = two-bumps(-1.5,1.5,0.8,3)

    [solver]
    npaths = 100000
    substeps = 5
    dt = 0.025
    T = 0.2
    picard_tol = 5e-3
    picard_max = 8
    seed = 20260809
    workers = 1
    mode = layered                  ; layered | picard

    [fd]
    cfl_safety = 0.8                ; dt_fd = cfl_safety * stability limit
    ; dt_fd = 0.01                  ; or give the step explicitly

    [verify]
    checks = weak_residual, martingale, flow_monotonicity, duality_pairing, compare_mc_fd
    compare_tolerance = 2e-2
    ...                             ; see scenarios.py for every knob

    [debug]
    flip_drift_correction = false   ; mutation switch for the martingale suite

A named scenario supplies defaults for every section; file keys override the
scenario, command-line flags override the file.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .mc import SolverConfig
from .model import GridSpec, SKTParameters, make_initial, validate_params
from .scenarios import SCENARIOS


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


_MODEL_KEYS = ("d1", "d2", "d11", "d12", "d21", "d22",
               "a1", "a2", "a11", "a12", "a21", "a22")
_KNOWN = {
    "run": {"scenario"},
    "model": set(_MODEL_KEYS),
    "grid": {"xmin", "xmax", "n"},
    "initial": {"u1", "u2"},
    "solver": {"npaths", "substeps", "dt", "t", "picard_tol", "picard_max",
               "seed", "workers", "mode"},
    "fd": {"cfl_safety", "dt_fd"},
    "verify": {"checks", "compare_tolerance", "weak_tolerance", "weak_h",
               "martingale_t", "martingale_substeps", "martingale_npaths", "martingale_centers",
               "martingale_widths", "martingale_start_span", "martingale_start_count",
               "duality_t", "duality_substeps", "duality_npaths",
               "duality_stride", "duality_h", "flow_t", "flow_substeps",
               "flow_npaths"},
    "debug": {"flip_drift_correction"},
}
_CHECK_NAMES = ("weak_residual", "martingale", "flow_monotonicity",
                "duality_pairing", "compare_mc_fd")


@dataclass
class RunConfig:
    """Parsed union of model, grid, solver, FD and verification settings."""

    scenario: str
    params: SKTParameters
    grid: GridSpec
    initial_u1: str
    initial_u2: str
    solver: SolverConfig
    mode: str
    fd_cfl_safety: float
    fd_dt: float | None
    checks: tuple[str, ...]
    verify: dict = field(default_factory=dict)
    flip_drift_correction: bool = False

    def initial_profiles(self):
        return make_initial(self.initial_u1), make_initial(self.initial_u2)


def _merge(scenario: dict, file_sections: dict) -> dict:
    # configparser lowercases keys; normalize scenario keys the same way
    merged = {sec: {k.lower(): v for k, v in vals.items()} for sec, vals in scenario.items()}
    for sec, vals in file_sections.items():
        merged.setdefault(sec, {}).update(vals)
    return merged


def _fget(sec: dict, key: str, default: float) -> float:
    try:
        return float(sec.get(key, default))
    except ValueError as exc:
        raise ConfigError(f"non-numeric value for {key}: {sec.get(key)!r}") from exc


def _iget(sec: dict, key: str, default: int) -> int:
    try:
        return int(sec.get(key, default))
    except ValueError as exc:
        raise ConfigError(f"non-integer value for {key}: {sec.get(key)!r}") from exc


def parse_config_text(text: str, overrides: dict | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    file_sections = {s: dict(cp.items(s)) for s in cp.sections()}
    for sec, vals in file_sections.items():
        if sec not in _KNOWN:
            raise ConfigError(f"unknown config section [{sec}]")
        for key in vals:
            if key not in _KNOWN[sec]:
                raise ConfigError(f"unknown key {key!r} in section [{sec}]")

    scenario = file_sections.get("run", {}).get("scenario", "custom")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; known: {', '.join(sorted(SCENARIOS))}")
    merged = _merge(SCENARIOS[scenario], file_sections)
    overrides = overrides or {}

    model = merged.get("model", {})
    missing = [k for k in ("d1", "d2") if k not in model]
    if missing:
        raise ConfigError(f"missing required model keys: {', '.join(missing)}")
    try:
        params = SKTParameters(**{k: float(model.get(k, 0.0)) for k in _MODEL_KEYS})
        validate_params(params)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    gsec = merged.get("grid", {})
    try:
        grid = GridSpec(xmin=_fget(gsec, "xmin", -8.0), xmax=_fget(gsec, "xmax", 8.0),
                        n=_iget(gsec, "n", 161))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    isec = merged.get("initial", {})
    u1_spec = isec.get("u1", "constant(0)")
    u2_spec = isec.get("u2", "constant(0)")
    for spec in (u1_spec, u2_spec):
        try:
            make_initial(spec)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    ssec = dict(merged.get("solver", {}))
    if "seed" in overrides and overrides["seed"] is not None:
        ssec["seed"] = str(overrides["seed"])
    if "workers" in overrides and overrides["workers"] is not None:
        ssec["workers"] = str(overrides["workers"])
    if "mode" in overrides and overrides["mode"] is not None:
        ssec["mode"] = str(overrides["mode"])
    mode = ssec.get("mode", "layered")
    if mode not in ("layered", "picard"):
        raise ConfigError(f"mode must be 'layered' or 'picard', got {mode!r}")
    try:
        solver = SolverConfig(
            npaths=_iget(ssec, "npaths", 10000),
            substeps=_iget(ssec, "substeps", 5),
            dt=_fget(ssec, "dt", 0.025),
            T=_fget(ssec, "t", 0.25),
            picard_tol=_fget(ssec, "picard_tol", 1e-3),
            picard_max=_iget(ssec, "picard_max", 8),
            master_seed=_iget(ssec, "seed", 0),
            workers=_iget(ssec, "workers", 1),
        )
        solver.layers  # validates T/dt integrality
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    fsec = merged.get("fd", {})
    fd_dt = _fget(fsec, "dt_fd", 0.0) if "dt_fd" in fsec else None
    fd_cfl_safety = _fget(fsec, "cfl_safety", 0.8)
    if not 0.0 < fd_cfl_safety <= 1.0:
        raise ConfigError(f"cfl_safety must lie in (0, 1], got {fd_cfl_safety}")

    vsec = dict(merged.get("verify", {}))
    raw_checks = vsec.pop("checks", "")
    checks = tuple(c for c in (s.strip() for s in raw_checks.split(",")) if c)
    for c in checks:
        if c not in _CHECK_NAMES:
            raise ConfigError(f"unknown check {c!r}; known: {', '.join(_CHECK_NAMES)}")

    dsec = merged.get("debug", {})
    flip = str(dsec.get("flip_drift_correction", "false")).strip().lower() in ("1", "true", "yes", "on")
    if overrides.get("flip_drift_correction"):
        flip = True

    return RunConfig(
        scenario=scenario,
        params=params,
        grid=grid,
        initial_u1=u1_spec,
        initial_u2=u2_spec,
        solver=solver,
        mode=mode,
        fd_cfl_safety=fd_cfl_safety,
        fd_dt=fd_dt,
        checks=checks,
        verify=vsec,
        flip_drift_correction=flip,
    )


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text(), overrides)


def config_echo(cfg: RunConfig) -> dict:
    """JSON-ready echo of the effective configuration."""
    return {
        "scenario": cfg.scenario,
        "model": {k: getattr(cfg.params, k) for k in _MODEL_KEYS},
        "grid": {"xmin": cfg.grid.xmin, "xmax": cfg.grid.xmax, "n": cfg.grid.n},
        "initial": {"u1": cfg.initial_u1, "u2": cfg.initial_u2},
        "solver": {
            "npaths": cfg.solver.npaths, "substeps": cfg.solver.substeps,
            "dt": cfg.solver.dt, "T": cfg.solver.T,
            "picard_tol": cfg.solver.picard_tol, "picard_max": cfg.solver.picard_max,
            "seed": cfg.solver.master_seed, "workers": cfg.solver.workers,
            "mode": cfg.mode,
        },
        "fd": {"cfl_safety": cfg.fd_cfl_safety, "dt_fd": cfg.fd_dt},
        "checks": list(cfg.checks),
        "flip_drift_correction": cfg.flip_drift_correction,
    }
