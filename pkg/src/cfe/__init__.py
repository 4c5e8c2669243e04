"""Coagulation-fragmentation truncation solver and verification toolkit."""
__version__ = "0.1.0"
