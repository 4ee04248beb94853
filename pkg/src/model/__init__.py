"""Finite lattices: states, transfer matrices and Monte Carlo."""
