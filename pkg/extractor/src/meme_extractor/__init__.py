"""Feature-extraction bridge: frozen pretrained encoders -> MEMF feature files."""

__version__ = "0.1.0"
