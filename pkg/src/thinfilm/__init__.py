"""Perturbations of traveling-wave thin films near a moving contact line."""

__version__ = "0.1.0"
