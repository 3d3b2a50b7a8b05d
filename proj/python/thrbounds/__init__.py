"""Partition-based bounds on the treatment harm rate.

Thin wrapper over the C++ core; results come back as plain dicts with the
same layout as the command-line tool's JSON output.
"""

from ._core import (
    ThrError,
    bounds_from_cells,
    estimate,
    generate,
    isotonic,
    load_csv,
    population,
    sample_cell_sizes,
    simulate,
)

__all__ = [
    "ThrError",
    "bounds_from_cells",
    "estimate",
    "generate",
    "isotonic",
    "load_csv",
    "population",
    "sample_cell_sizes",
    "simulate",
]
__version__ = "0.1.0"
