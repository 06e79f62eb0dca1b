"""Elasto-perfectly-plastic oscillator under white noise: the eps-jump approximation.

Submodules
----------
model      parameters, states, regimes
noise      reproducible Brownian increments
sim        constrained and jumped trajectories, coupling diagnostics
gauss      Gaussian analytics of the elastic process
exit_prob  survival probability by PDE and Monte Carlo, boundary-flux terms
harness    experiment configuration and eps sweeps
cli        ``svi-epp`` command line
"""

from .model import OscillatorParams, Regime, State, validate_params

__all__ = ["OscillatorParams", "Regime", "State", "validate_params"]
__version__ = "0.1.0"
