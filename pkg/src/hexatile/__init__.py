"""Random lozenge tilings of the hexagon with a 2-periodic weight."""

__version__ = "0.1.0"
