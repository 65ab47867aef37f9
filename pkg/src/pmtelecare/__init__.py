"""Wrist pulse / thermal temperament assessment pipeline with a telecare
session service and simulator."""

__version__ = "0.1.0"
