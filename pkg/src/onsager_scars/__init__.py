"""Disordered clock chains with exact quantum many-body scars built from the Onsager algebra."""

__version__ = "0.1.0"
