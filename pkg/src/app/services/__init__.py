"""Monte Carlo evaluation, FAR calibration and the command registry."""
