"""irmlab: a deterministic simulation lab for DeFi interest rate models.

Implements a utilization-error PID interest rate strategy on 18-digit
fixed-point arithmetic, the three contemporary baseline models it is
compared against, seeded market scenarios, a trace-recording engine, and
a CLI that reproduces the comparison figures.
"""

from .numerics import FIXED, REFERENCE, Dec, get_backend

__version__ = "0.1.0"

__all__ = ["Dec", "FIXED", "REFERENCE", "get_backend", "__version__"]
