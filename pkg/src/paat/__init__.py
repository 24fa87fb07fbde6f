"""Partition-based label attention (PAAT) for multi-label document coding."""

from ._accel import backend
from .model import PaatConfig, PaatModel

__all__ = ["PaatConfig", "PaatModel", "backend"]
__version__ = "0.1.0"
