"""CLI界面模块"""

from .interface import RichInterface

__all__ = ['RichInterface']
