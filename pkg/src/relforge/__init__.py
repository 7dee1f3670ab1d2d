"""Relational-property graph datasets: a formula DSL, a grounder, a CDCL
solver, dataset generation, and scoring utilities."""

__version__ = "0.1.0"
