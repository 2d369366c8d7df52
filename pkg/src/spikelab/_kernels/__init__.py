"""Kernel backend selection.

The compiled extension (`_core`, built from _core.pyx) is preferred; the
numpy reference (`_ref`) is the fallback and the parity oracle.  Set
SPIKELAB_PURE_PYTHON=1 to force the fallback (used by the benchmark and to
reproduce results without a compiler).
"""

from __future__ import annotations

import os

if os.environ.get("SPIKELAB_PURE_PYTHON", "0") == "1":
    from . import _ref as backend
else:
    try:
        from . import _core as backend  # type: ignore[attr-defined]
    except ImportError:
        from . import _ref as backend

HAVE_COMPILED: bool = bool(getattr(backend, "HAVE_COMPILED", False))
BACKEND_NAME: str = "compiled" if HAVE_COMPILED else "numpy"

radial_apply = backend.radial_apply
radial_dirichlet = backend.radial_dirichlet
axi_apply = backend.axi_apply
axi_dirichlet = backend.axi_dirichlet
wdot = backend.wdot
wdot4 = backend.wdot4
shoot_classify = backend.shoot_classify
shoot_trace = backend.shoot_trace

if HAVE_COMPILED:
    from . import _ref as _np_backend

    def wsum_pow(w, u, q):
        # integer-exponent sums are loop-fused in the extension; generic
        # exponents are faster through numpy's vectorized pow
        if q == 2.0 or q == 4.0:
            return backend.wsum_pow(w, u, q)
        return _np_backend.wsum_pow(w, u, q)
else:
    wsum_pow = backend.wsum_pow
