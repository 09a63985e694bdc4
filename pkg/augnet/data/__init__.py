"""Graph ingestion, splitting and artifact persistence."""
