"""SNR distributions and outage of mmWave links between hovering UAVs."""

__version__ = "0.1.0"
