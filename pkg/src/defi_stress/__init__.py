"""Stress-testing engine and attack-cost calculator for overcollateralized
lending protocols."""

__version__ = "0.1.0"
