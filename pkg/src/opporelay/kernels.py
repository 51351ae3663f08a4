"""Backend selection for the hot kernels.

The compiled extension is used when it imports; ``OPPORELAY_PURE=1`` forces
the numpy fallback. ``BACKEND`` names whichever was picked.
"""

import os

from . import _kernels_py

if os.environ.get("OPPORELAY_PURE", "").strip() not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

phase1_prefix_bits = _impl.phase1_prefix_bits
phase2_prefix_bits = _impl.phase2_prefix_bits
genie_full = _impl.genie_full
genie_grouped = _impl.genie_grouped

__all__ = [
    "BACKEND",
    "phase1_prefix_bits",
    "phase2_prefix_bits",
    "genie_full",
    "genie_grouped",
]
