"""Diffractive focusing of square wavepackets across lattice and continuum models.

The package propagates square packets in a two-species linear cellular
automaton, a nearest-neighbour tight-binding chain and the free Schrödinger
equation, measures the focusing transition with a permanence probability and
computes discrete and continuous Wigner functions.
"""

from focuslab.errors import ConfigError, NumericalConsistencyError
from focuslab.fields import LatticeField, SpaceTimeGrid

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "NumericalConsistencyError",
    "LatticeField",
    "SpaceTimeGrid",
    "__version__",
]
