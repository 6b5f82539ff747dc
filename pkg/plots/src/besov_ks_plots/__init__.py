"""Offline figure rendering for besov-ks rate reports."""

from .render import FigureSpec, render

__version__ = "0.1.0"

__all__ = ["FigureSpec", "render"]
