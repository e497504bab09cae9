"""Constant-delay enumeration of first-order queries on bounded-degree structures."""

__version__ = "0.1.0"
FORMAT_VERSION = 1
