"""Age-structured SIRS (humans) / SI (mosquitoes) malaria transmission model."""

__version__ = "0.1.0"

from .grid import Grid  # noqa: E402
from .params import ModelParams, constant_params, table1_params  # noqa: E402
from .solver import SystemState, Trajectory, discrete_pfe, initial_state, run, step  # noqa: E402

__all__ = [
    "Grid", "ModelParams", "SystemState", "Trajectory", "constant_params", "discrete_pfe",
    "initial_state", "run", "step", "table1_params", "__version__",
]
