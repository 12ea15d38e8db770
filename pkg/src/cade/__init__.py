"""Continual-learning toolkit for audio anti-spoofing experiments."""

__version__ = "0.1.0"
