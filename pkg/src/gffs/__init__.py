"""Grid-forming frequency-shaping control for low-inertia power networks."""

__version__ = "0.1.0"
