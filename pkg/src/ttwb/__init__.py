"""Workbench for relative train track maps of free group automorphisms:
strata classification, Nielsen path search, geometricity, geometric
models, and subgroup systems via folded graphs."""

from . import (cli, dynamics, errors, geometric_model, graphs, maps, nielsen,
               splitting, stallings, strata)

__all__ = ["cli", "dynamics", "errors", "geometric_model", "graphs", "maps",
           "nielsen", "splitting", "stallings", "strata"]

__version__ = "0.1.0"
