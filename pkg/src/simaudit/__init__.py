"""Tools for auditing embedding spaces against expert similarity annotations."""

__version__ = "0.1.0"
