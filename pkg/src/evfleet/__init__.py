"""Discrete-event simulator of an electric-vehicle e-hailing market with
incentive-based charge scheduling."""

from .config import ScenarioConfig, load_config
from .network import Network, generate_grid, load_network
from .report import RunReport
from .simulator import Simulation, run

__version__ = "0.1.0"

__all__ = ["Network", "RunReport", "ScenarioConfig", "Simulation", "generate_grid", "load_config",
           "load_network", "run"]
