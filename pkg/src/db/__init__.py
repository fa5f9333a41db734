"""Database module initialization."""
from .schema import Database

__all__ = ['Database']
