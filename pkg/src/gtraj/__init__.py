"""Quantum-jump trajectories of Jordan-Wigner spin chains as fermionic Gaussian states."""
from .engine import ScheduleConfig, run_ensemble, run_trajectory, required_samples
from .gaussian import CovarianceState, ground_state, product_state
from .honeycomb import build_honeycomb, compile_honeycomb
from .models import ModelSpec, JumpTerm, build_subradiant, build_tfim, build_xx_loss, compile

__version__ = "0.1.0"
