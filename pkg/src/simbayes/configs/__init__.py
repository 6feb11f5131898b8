"""Shipped experiment configuration files (one per parameter set)."""
