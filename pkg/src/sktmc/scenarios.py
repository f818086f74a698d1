"""Registered named scenarios: parameter bundles with calibrated tolerances.

Each scenario is a dict of config-file sections holding string values, the
same representation a config file parses to, so files and presets overlay
uniformly (file keys win over the preset, command-line flags win over both).
"""
from __future__ import annotations

_COMMON_VERIFY = {
    "checks": "weak_residual, martingale, flow_monotonicity, duality_pairing, compare_mc_fd",
    "weak_tolerance": "5e-4",
    "weak_h": "gaussian(0,1.5)",
    "martingale_t": "0.05",
    "martingale_substeps": "20",
    "martingale_npaths": "100000",
    "martingale_centers": "-2.3, 0.0, 2.3",
    "martingale_widths": "0.8, 1.0, 0.9",
    "martingale_start_span": "0.6",
    "martingale_start_count": "9",
    "duality_t": "0.05",
    "duality_substeps": "20",
    "duality_npaths": "20000",
    "duality_stride": "2",
    "duality_h": "gaussian(0,1.2)",
    "flow_t": "0.05",
    "flow_substeps": "25",
    "flow_npaths": "1000",
}

LINEAR = {
    "model": {"d1": "0.5", "d2": "1.0"},
    "grid": {"xmin": "-8", "xmax": "8", "n": "161"},
    "initial": {"u1": "gaussian(0,1,1)", "u2": "gaussian(0,1,1)"},
    "solver": {
        "npaths": "100000", "substeps": "5", "dt": "0.025", "T": "0.25",
        "picard_tol": "5e-3", "picard_max": "8", "seed": "20260809",
        "workers": "1", "mode": "layered",
    },
    "fd": {"cfl_safety": "0.8"},
    "verify": dict(_COMMON_VERIFY, compare_tolerance="5e-3",
                   martingale_centers="-1.0, 0.0, 1.0"),
}

GROWTH = {
    "model": {"d1": "0.5", "d2": "1.0", "a1": "1.0"},
    "grid": LINEAR["grid"],
    "initial": LINEAR["initial"],
    "solver": LINEAR["solver"],
    "fd": {"cfl_safety": "0.8"},
    "verify": dict(_COMMON_VERIFY, compare_tolerance="6e-3",
                   martingale_centers="-1.0, 0.0, 1.0"),
}

CROSS_DIFFUSION = {
    "model": {
        "d1": "0.25", "d2": "0.25",
        "d11": "0.05", "d12": "0.1", "d21": "0.1", "d22": "0.05",
        "a1": "0.5", "a2": "0.5",
        "a11": "0.25", "a12": "0.25", "a21": "0.25", "a22": "0.25",
    },
    "grid": {"xmin": "-8", "xmax": "8", "n": "161"},
    "initial": {"u1": "two-bumps(-1.5,1.5,0.8,3)", "u2": "two-bumps(-1.5,1.5,0.8,3)"},
    "solver": {
        "npaths": "100000", "substeps": "5", "dt": "0.025", "T": "0.2",
        "picard_tol": "5e-3", "picard_max": "8", "seed": "20260809",
        "workers": "1", "mode": "layered",
    },
    "fd": {"cfl_safety": "0.8"},
    "verify": dict(_COMMON_VERIFY, compare_tolerance="2e-2"),
}

SCENARIOS: dict[str, dict] = {
    "linear": LINEAR,
    "growth": GROWTH,
    "cross-diffusion": CROSS_DIFFUSION,
    "custom": {},
}
