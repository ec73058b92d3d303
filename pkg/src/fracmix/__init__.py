"""Fractional cohomological equations and quantitative mixing on SL(2,R) models."""

__version__ = "0.1.0"
