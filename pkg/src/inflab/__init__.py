"""Sequential majority and minority processes on graphs."""

__version__ = "0.1.0"
