"""Code-quality analysis for Jupyter notebooks: style, unused variables, deprecated APIs."""

__version__ = "0.1.0"
