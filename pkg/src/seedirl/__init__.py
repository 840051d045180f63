"""Reward learning from a handful of seed-level demonstrations in
procedural gridworlds."""

__version__ = "0.1.0"
