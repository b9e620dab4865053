"""Hot-loop kernels: per-stage calibration sweep and batch path replay.

Two interchangeable backends produce bit-identical results:

* ``_fastpath`` — compiled Cython extension (built at install time);
* ``reference`` — pure NumPy fallback, always available.

The compiled backend is preferred when importable. Set the environment
variable ``SEQAUDIT_KERNEL=py`` (or ``fast``) to force a choice;
``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

from . import reference

_choice = os.environ.get("SEQAUDIT_KERNEL", "").strip().lower()

fastpath = None
if _choice != "py":
    try:
        from . import _fastpath as fastpath  # type: ignore[no-redef]
    except ImportError:
        fastpath = None
        if _choice == "fast":
            raise ImportError(
                "SEQAUDIT_KERNEL=fast but the compiled kernel is not built; "
                "install with the Cython extension or unset SEQAUDIT_KERNEL"
            )

_active = fastpath if fastpath is not None else reference

BACKEND: str = "fastpath" if fastpath is not None else "reference"

mc_boundary_sweep = _active.mc_boundary_sweep
first_exit = _active.first_exit

__all__ = ["mc_boundary_sweep", "first_exit", "BACKEND", "reference", "fastpath"]
