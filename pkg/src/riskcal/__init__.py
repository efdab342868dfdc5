"""Risk-controlling prediction sets."""

__version__ = "0.1.0"
