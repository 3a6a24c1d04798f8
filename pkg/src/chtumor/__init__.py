"""Finite-difference solver and experiments for a Cahn-Hilliard tumor-growth model
with nutrient, chemotaxis, active transport and Dirichlet data."""

__version__ = "0.1.0"
