"""Default run configuration shared by the library, service, and CLI."""
from __future__ import annotations

from .msd import ModelParams, State

DEFAULT_PARAMS = ModelParams(p=200.0, r=0.25, s=0.1)
DEFAULT_X0 = State(u=-0.01, v=0.01, b=1e-4)
DEFAULT_ELL = 0.1
DEFAULT_DT = 1e-3
DEFAULT_T_MAX = 50.0
DEFAULT_N_REALIZATIONS = 1000
DEFAULT_SEED = 0

# One-parameter sweep grids used by the experiment drivers.
V0_SWEEP = [round(0.005 * k, 10) for k in range(1, 19)]        # 0.005 .. 0.09
S_SWEEP = [round(0.05 + 0.025 * k, 10) for k in range(11)]      # 0.05 .. 0.30
R_SWEEP = [round(0.05 * k, 10) for k in range(1, 11)]           # 0.05 .. 0.50
P_SWEEP = [50.0 + 25.0 * k for k in range(15)]                  # 50 .. 400

SWEEP_GRIDS = {"v0": V0_SWEEP, "s": S_SWEEP, "r": R_SWEEP, "p": P_SWEEP}

# Worker-count environment variable (the only environment knob).
WORKERS_ENV_VAR = "RIONSET_WORKERS"
