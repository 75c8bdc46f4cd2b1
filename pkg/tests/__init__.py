"""Python module."""
