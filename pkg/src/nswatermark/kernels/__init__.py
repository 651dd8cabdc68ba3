"""Hot numeric kernels.

Two interchangeable implementations live here: ``_numba`` (loops compiled with
``numba.njit``) and ``_numpy`` (vectorised numpy).  The numba path is used when
numba imports cleanly; set ``NSWATERMARK_BACKEND=numpy`` to force the fallback.
Both expose the same functions and must return identical results up to
floating-point rounding.
"""

import os

_requested = os.environ.get("NSWATERMARK_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"NSWATERMARK_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numba":
    try:
        from . import _numba as _impl
    except ImportError:  # pragma: no cover - numba missing
        from . import _numpy as _impl
else:
    from . import _numpy as _impl

BACKEND = _impl.__name__.rsplit("._", 1)[-1]

transmit = _impl.transmit
keyed_uniforms = _impl.keyed_uniforms
simulate_batch = _impl.simulate_batch
decode_one = _impl.decode_one
decode_batch = _impl.decode_batch
bp_decode = _impl.bp_decode
bp_batch = _impl.bp_batch
chem_scan = _impl.chem_scan
cross_scan = _impl.cross_scan
pair_heteroduplex = _impl.pair_heteroduplex

# decoder status codes shared by both backends
OK = 0
BOUNDARY_LOST = 1
ZERO_MASS = 2
TOO_MANY_N = 3

# boundary modes
CONTEXT = 0
UNIFORM = 1
POINT = 2

# chemistry rule codes, in evaluation order
RULE_NAMES = ("pass", "gc", "homopolymer", "hairpin", "self_dimer", "adapter")


def load(name: str):
    """Import one backend explicitly (used by tests and the benchmark)."""
    if name == "numba":
        from . import _numba as mod
    elif name == "numpy":
        from . import _numpy as mod
    else:
        raise ValueError(name)
    return mod
