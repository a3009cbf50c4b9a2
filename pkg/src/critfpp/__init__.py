"""Simulation laboratory for first-passage percolation on the square
lattice with critical edge weights (half the mass at weight zero).

Submodules:

* lattice      boxes, annuli, edges, duals
* weights      critical weight laws and the summability criterion
* field        counter-based sampled weight fields
* fpp          passage times and geodesics
* percolation  crossings, correlation length, open circuits
* invasion     invasion percolation and constrained geodesics
* fourarm      four-arm edge events and counts
* mc           Monte Carlo drivers (growth fits, CLT checks)
* cli          command-line entry point (`critfpp`)
"""

__version__ = "0.1.0"

from .kernels import BACKEND

__all__ = ["BACKEND", "__version__"]
