"""Monte Carlo wave-function simulation of the quantum linear Boltzmann equation."""

__version__ = "0.1.0"
