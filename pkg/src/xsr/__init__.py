"""xsr: synthetic X-ray rendering plus a frequency-domain-loss
super-resolution workbench."""

__version__ = "0.1.0"
