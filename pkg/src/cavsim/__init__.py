"""Driven two-level atom in a multi-port cavity: full and reduced models."""
from .integrate import BACKEND

__version__ = "0.1.0"
