"""Pseudo-acoustic sonar image synthesis by transformer style transfer."""

__version__ = "0.1.0"
