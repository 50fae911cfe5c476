from . import foothold, harness, nn, rl, sensors, sim, terrain

__version__ = "0.1.0"
