"""Figure rendering for qrc-sensor run directories."""

__version__ = "0.1.0"
