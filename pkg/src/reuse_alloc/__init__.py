"""Simulation and benchmarking toolkit for online allocation of reusable
resources: matching, budgeted allocation, and assortment under adversarial
arrivals, with fluid-guide policies, an LP benchmark, a brute-force
clairvoyant, and the single-unit availability calculus used to analyze them.
"""

from . import (assortment, benchmarks, distributions, engine, fluid, generators,
               model, policies, randproc, rng, simplex)

__all__ = [
    "assortment", "benchmarks", "distributions", "engine", "fluid",
    "generators", "model", "policies", "randproc", "rng", "simplex",
]

__version__ = "0.1.0"
