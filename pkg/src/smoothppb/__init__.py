"""Smoothed pseudo-population bootstrap for finite population quantiles."""

__version__ = "0.1.0"
