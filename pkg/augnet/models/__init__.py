"""Data models for graphs, configuration and reports."""
