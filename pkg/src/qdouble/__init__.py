"""Abelian quantum-double D(Z_d) lattice codes with hole-encoded qudits."""
from .paulis import PauliOperator, commutation_exponent, compose, fourier_conjugate, power

__all__ = ["PauliOperator", "commutation_exponent", "compose", "fourier_conjugate", "power"]
