"""Boundary-element solver for electromagnetic scattering by dielectric particles."""

__version__ = "0.1.0"
