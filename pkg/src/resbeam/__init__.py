"""Simulator of a radio-frequency resonant beam link between two retro-directive arrays."""
from .baseline import RdbfsConfig, rdbfs_link
from .channel import ChannelParams, NoiseParams, build_channel_matrix
from .config import build_scenario, config_hash, validate_config
from .engine import EngineState, ResonanceReport, Scenario, run_to_convergence, step
from .errors import *  # noqa: F401,F403
from .geometry import AntennaPattern, ArrayLayout, CarrierSpec, build_planar_array
from .harvest import HarvestParams, solve_doubler
from .multiaccess import FdmaPlan, TdmaPlan, allocate_fdma, allocate_tdma
from .report import LinkReport, from_resonance

__version__ = "0.1.0"
