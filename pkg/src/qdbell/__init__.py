"""Simulation of Bell tests with photon pairs scattered by a waveguide-coupled emitter."""

__version__ = "0.1.0"
