"""Kernel selection: compiled extension when available, pure numpy otherwise.

Set ``BEAMCAST_PURE=1`` to force the pure implementation (used by the parity
tests and the benchmark).
"""

import os

from . import _pure

if os.environ.get("BEAMCAST_PURE"):
    impl = _pure
else:
    try:
        from . import _core as impl  # type: ignore[no-redef]
    except ImportError:
        impl = _pure

HAVE_COMPILED = impl.IMPLEMENTATION == "compiled"
IMPLEMENTATION = impl.IMPLEMENTATION

kkt_power = impl.kkt_power
candidate_gain_matrix = impl.candidate_gain_matrix
sum_rate_for = impl.sum_rate_for
argmax_assignment = impl.argmax_assignment
MU_FLOOR = impl.MU_FLOOR
