"""Kernel backend selection.

Imports the compiled kernels when available and falls back to the pure
Python implementations otherwise.  Set CRITFPP_PURE_PYTHON=1 to force
the fallback (useful for demonstrating and benchmarking the pair; the
two backends are output-identical by contract).
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("CRITFPP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykernels

BACKEND: str = _impl.BACKEND
dijkstra_grid = _impl.dijkstra_grid
invade_grid = _impl.invade_grid
crossing_connected = _impl.crossing_connected
flood_cells = _impl.flood_cells
