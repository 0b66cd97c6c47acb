"""Non-revealing intention deception planning in MDPs."""

__version__ = "0.1.0"
