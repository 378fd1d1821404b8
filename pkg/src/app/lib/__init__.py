"""Numerical core: distribution, likelihood fit, limits and run lengths, random streams, data files."""
