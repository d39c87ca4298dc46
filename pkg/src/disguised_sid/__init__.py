"""Speaker identification under voice disguise: features, backends, disguise effects and evaluation."""

__version__ = "0.1.0"
