"""Grid-characteristic solvers for Kirchhoff-Love shells and 3D elastic plates."""

__version__ = "0.1.0"
