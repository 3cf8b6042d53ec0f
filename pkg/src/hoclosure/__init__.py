"""Downward closures of tree languages from safe higher-order recursion schemes."""

__version__ = "0.1.0"
