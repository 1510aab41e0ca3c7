"""CLI shell and HTTP service wiring the pipeline end to end."""
