"""Test package for augnet."""
