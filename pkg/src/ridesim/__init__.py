"""Ridesim: a dynamic ridesharing dispatch engine.

Ridesim assigns ride requests to a fleet of vehicles as they arrive, using
contraction-hierarchy bucket searches to evaluate every pickup and dropoff
insertion, and simulates the resulting vehicle schedules.
"""

__version__ = "0.1.0"
