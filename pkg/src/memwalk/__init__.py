"""Memory-dependent discrete-time quantum and classical random walks."""

__version__ = "0.1.0"
