"""Augmented operators, propagation, scoring and training."""
