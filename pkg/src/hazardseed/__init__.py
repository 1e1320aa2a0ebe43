"""Hazard-guided scenario seeding (build in progress)."""
__version__ = "0.1.0"
