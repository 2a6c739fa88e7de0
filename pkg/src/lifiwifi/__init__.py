"""Achievable rates and joint power/probability optimisation for an
aggregated optical (LiFi) and RF (WiFi) link pair with discrete inputs."""

__version__ = "0.1.0"
