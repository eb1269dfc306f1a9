"""Harris Hawks Optimization for joint AP/IRS beamforming in a MISO downlink."""

from .hho import HhoConfig, OptimizeResult, optimize
from .channel import ChannelSet, Geometry, LinkParams, realize_channels
from .problem import ProblemInstance, decode, fitness, fitness_batch, received_power, search_bounds
from .baselines import alternating_optimize, closed_form_optimum_m1, no_irs_snr, brute_force

__all__ = [
    "HhoConfig", "OptimizeResult", "optimize",
    "ChannelSet", "Geometry", "LinkParams", "realize_channels",
    "ProblemInstance", "decode", "fitness", "fitness_batch", "received_power", "search_bounds",
    "alternating_optimize", "closed_form_optimum_m1", "no_irs_snr", "brute_force",
]
