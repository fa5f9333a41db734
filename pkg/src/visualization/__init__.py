"""Visualization module initialization."""
from .charts import ChartGenerator

__all__ = ['ChartGenerator']
