"""Freehand sketch recognition from tapped CNN features and a linear SVM."""

__version__ = "0.1.0"
