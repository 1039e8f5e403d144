"""Rotatable-antenna link simulator.

A vision-guided two-axis servo steers a directional antenna toward a moving
user; the simulator reports the received power against a fixed antenna.
"""

__version__ = "0.1.0"
