"""Shipped experiment catalog, one config text per scenario.

Each entry is an ordinary config file; ``extinguish run --scenario NAME``
parses it exactly as ``--config`` would parse a file on disk.
"""
from __future__ import annotations

from .config import RunConfig, parse_config

__all__ = ["CATALOG", "scenario_names", "load_scenario"]

_EXTINCTION_1D = """
[run]
scenario = extinction_1d
output = runs/extinction_1d
[equation]
m = 0.5
a = 0,1
[grid]
dims = 1
n = 512
box_length = 40
[initial]
kind = gaussian
amplitude = 1
width = 1
[time]
scheme = strang
dt = 1e-3
t_end = 10
cadence = 10
[analysis]
check = extinction
ell = 1
"""

CATALOG = {
    # finite-time extinction, unforced
    "extinction_1d": _EXTINCTION_1D,
    "extinction_1d_h2": _EXTINCTION_1D.replace("extinction_1d", "extinction_1d_h2")
                                      .replace("ell = 1", "ell = 2"),
    "extinction_1d_be": _EXTINCTION_1D.replace("extinction_1d", "extinction_1d_be")
                                      .replace("scheme = strang", "scheme = backward_euler"),
    "extinction_2d": """
[run]
scenario = extinction_2d
output = runs/extinction_2d
[equation]
m = 0.5
a = 0,1
[grid]
dims = 2
n = 128
box_length = 40
[initial]
kind = gaussian
amplitude = 1
width = 1
[time]
dt = 1e-3
t_end = 10
cadence = 10
[analysis]
check = extinction
ell = 2
""",
    "extinction_3d": """
[run]
scenario = extinction_3d
output = runs/extinction_3d
[equation]
m = 0.5
a = 0,1
[grid]
dims = 3
n = 64
box_length = 20
[initial]
kind = gaussian
amplitude = 1
width = 1
[time]
dt = 1e-3
t_end = 10
cadence = 10
[analysis]
check = extinction
ell = 2
""",
    # forced case: source with the vanishing profile, extinction by T0
    "forced_1d": """
[run]
scenario = forced_1d
output = runs/forced_1d
[equation]
m = 0.5
a = 0,1
[grid]
dims = 1
n = 512
box_length = 40
[initial]
kind = gaussian
amplitude = 1e-6
width = 1
[source]
kind = vanishing_profile
amplitude = 1
width = 1
T0 = 1
eps_star = 1e-2
[time]
dt = 1e-3
t_end = 3
cadence = 10
[analysis]
check = forced
ell = 1
""",
    # decay in dimension four and five
    "decay_4d": """
[run]
scenario = decay_4d
output = runs/decay_4d
[equation]
m = 0.5
a = 0,1
[grid]
dims = 4
n = 16
box_length = 16
[initial]
kind = gaussian
amplitude = 1
width = 1.5
[time]
dt = 5e-3
t_end = 20
cadence = 4
[analysis]
check = decay_exponential
ell = 2
""",
    "decay_4d_h1": """
[run]
scenario = decay_4d_h1
output = runs/decay_4d_h1
[equation]
m = 0.5
a = 0,1
[grid]
dims = 4
n = 16
box_length = 16
[initial]
kind = gaussian
amplitude = 1
width = 1.5
[time]
dt = 5e-3
t_end = 20
cadence = 4
[analysis]
check = decay_power
ell = 1
""",
    "decay_5d": """
[run]
scenario = decay_5d
output = runs/decay_5d
[equation]
m = 0.5
a = 0,1
[grid]
dims = 5
n = 16
box_length = 16
[initial]
kind = gaussian
amplitude = 1
width = 1.5
[time]
dt = 5e-3
t_end = 20
cadence = 4
[analysis]
check = decay_power
ell = 2
""",
    # integrable source on [0, 1], long-time vanishing
    "weak_limit": """
[run]
scenario = weak_limit
output = runs/weak_limit
[equation]
m = 0.5
a = 0,1
[grid]
dims = 1
n = 512
box_length = 40
[initial]
kind = gaussian
amplitude = 1
width = 1
[source]
kind = separable
amplitude = 1
width = 1
T0 = 1
envelope = sine
[time]
dt = 1e-3
t_end = 50
cadence = 50
[analysis]
check = weak_limit
weak_threshold = 1e-6
""",
    # dependence on data: perturbed initial datum and source
    "contraction_1d": """
[run]
scenario = contraction_1d
output = runs/contraction_1d
seed = 3
[equation]
m = 0.5
a = -0.5,1
[grid]
dims = 1
n = 256
box_length = 40
[initial]
kind = gaussian
amplitude = 1
width = 1
[source]
kind = separable
amplitude = 0.5
width = 2
T0 = 1
envelope = linear
[time]
dt = 1e-3
t_end = 3
cadence = 10
[analysis]
check = contraction
perturbation = 1e-2
tolerance = 1e-8
""",
    "gradient_1d": """
[run]
scenario = gradient_1d
output = runs/gradient_1d
[equation]
m = 0.5
a = 1,2
[grid]
dims = 1
n = 512
box_length = 40
[initial]
kind = gaussian
amplitude = 1
width = 1
[time]
dt = 1e-3
t_end = 5
cadence = 10
[analysis]
check = gradient
tolerance = 1e-8
""",
    "ut_bound_1d": """
[run]
scenario = ut_bound_1d
output = runs/ut_bound_1d
[equation]
m = 0.5
a = -0.5,1
[grid]
dims = 1
n = 512
box_length = 40
[initial]
kind = gaussian
amplitude = 1
width = 1
[time]
dt = 1e-3
t_end = 5
cadence = 10
[analysis]
check = ut_bound
""",
    # laplacian switched off: pointwise extinction at exactly t = 2
    "zero_dispersion": """
[run]
scenario = zero_dispersion
output = runs/zero_dispersion
[equation]
m = 0.5
a = 0,1
[grid]
dims = 1
n = 16
box_length = 1
[initial]
kind = constant
amplitude = 1
[time]
dt = 1e-2
t_end = 3
dispersion = false
[analysis]
check = extinction
ell = 1
""",
}


def scenario_names() -> list:
    return sorted(CATALOG)


def load_scenario(name: str) -> RunConfig:
    if name not in CATALOG:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(scenario_names())}")
    return parse_config(CATALOG[name])
