"""Doomed-configuration analysis of safe Petri nets through unfoldings."""
__version__ = "0.1.0"
