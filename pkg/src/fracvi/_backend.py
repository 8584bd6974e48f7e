"""Backend selection for the hot pointwise kernels.

FRACVI_BACKEND=numpy forces the pure-numpy path; FRACVI_BACKEND=numba
requires numba; the default (auto) uses numba when importable.  Only the
pointwise inner loops are jitted -- the Fourier multiplier core is numpy
(np.fft has no numba counterpart) and FFT cost dominates it anyway.
"""

import os

_choice = os.environ.get("FRACVI_BACKEND", "auto").lower()

if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(f"FRACVI_BACKEND must be auto|numba|numpy, got {_choice!r}")

HAVE_NUMBA = False
if _choice in ("auto", "numba"):
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise
USE_NUMBA = HAVE_NUMBA and _choice != "numpy"


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
