"""Backend selection: compiled extension when available, pure fallback otherwise.

Set LATMET_PURE=1 to force the pure backend (used by the parity tests and the
benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("LATMET_PURE") == "1":
    from . import _core_py as impl
else:
    try:
        from . import _core as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _core_py as impl

from . import _core_py as pure_impl

BACKEND = impl.BACKEND

build_energy_table = impl.build_energy_table
detailed_balance_max_err = impl.detailed_balance_max_err
stability_sweep = impl.stability_sweep
phi_sweep = impl.phi_sweep
count_crossing_edges = impl.count_crossing_edges
kmc_run = impl.kmc_run
