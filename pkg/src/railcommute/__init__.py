"""Morning-commute user equilibrium on a congested rail transit line."""

__version__ = "0.1.0"
