"""Trajectory-length analysis of quantum relaxation: intrinsic vs ordinary
quantum Mpemba effects in a driven dissipative qubit and in U(1)-symmetric
brick-wall random circuits."""

__version__ = "0.1.0"
