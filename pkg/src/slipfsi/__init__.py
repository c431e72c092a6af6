"""slipfsi: fluid / Koiter-shell interaction with Navier slip on a deforming cylinder.

Core library (geometry, bases, transforms, forms, time stepping, coupling)
plus a FastAPI service wrapper and a thin command-line client.
"""

__version__ = "0.1.0"
