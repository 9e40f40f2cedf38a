"""Import-time selection between the compiled extension and the numpy fallback.

MOYAL_BACKEND=python forces the fallback, MOYAL_BACKEND=cython requires the
extension, anything else ("auto", unset) prefers the extension when it built.
Both backends expose the same three callables and agree to floating-point
round-off; `benchmarks/bench_backends.py` compares their throughput.
"""

from __future__ import annotations

import os

from . import _purepy

try:
    from . import _fastcore
except ImportError:
    _fastcore = None

_requested = os.environ.get("MOYAL_BACKEND", "auto").lower()
if _requested not in ("auto", "cython", "python"):
    raise RuntimeError(f"MOYAL_BACKEND must be auto, cython or python, got {_requested!r}")
if _requested == "cython" and _fastcore is None:
    raise RuntimeError("MOYAL_BACKEND=cython but the compiled extension is not available")

_active = _purepy if (_requested == "python" or _fastcore is None) else _fastcore

displacement_matrix = _active.displacement_matrix
displacement_batch = _active.displacement_batch
star_phase_quadrature = _active.star_phase_quadrature


def backend_name() -> str:
    """Name of the active hot-kernel backend ("cython" or "python")."""
    return "cython" if _active is _fastcore else "python"


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _fastcore is not None else ("python",)


def get_backend(name: str):
    """Explicit backend module lookup, used by the benchmark harness."""
    if name == "python":
        return _purepy
    if name == "cython":
        if _fastcore is None:
            raise RuntimeError("compiled extension not available")
        return _fastcore
    raise ValueError(f"unknown backend {name!r}")
