"""Secure transceiver design for the K-user MIMO interference channel.

Modules
-------
numerics
    Hermitian eigen-decomposition, positive-definite solves, bisection.
model
    Scenario configuration, seeded channel sampling, SNR helpers.
mtmse
    Minimum total-MSE precoder/receiver design with power and
    eavesdropper-MSE constraints.
baseline_ia
    Leakage-minimising interference alignment (eavesdropper-oblivious).
metrics
    MSEs, rates, secrecy rates and a Monte Carlo MSE estimator.
harness
    Sweeps, traces, identity checks, result files and figure presets.
"""
from .model import ChannelSet, SystemConfig, sample_channels
from .mtmse import MTMSEOptions, run_mtmse
from .baseline_ia import ia_min_leakage

__version__ = "0.1.0"

__all__ = ["SystemConfig", "ChannelSet", "sample_channels", "MTMSEOptions",
           "run_mtmse", "ia_min_leakage"]
