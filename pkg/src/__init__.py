"""
Six-vertex toolkit - finite lattices, free energies, surface tension and limit shapes
"""

__version__ = "0.1.0"
