"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Backend selection: environment variable EMBEM_BACKEND=numba (default) or
numpy.  Both backends produce the same quadrature sums; tests compare them to
floating-point roundoff on small meshes.
"""

import os

from . import numpy_backend


def _select():
    choice = os.environ.get("EMBEM_BACKEND", "numba").lower()
    if choice == "numpy":
        return numpy_backend, "numpy"
    if choice != "numba":
        raise ValueError(f"EMBEM_BACKEND must be 'numba' or 'numpy', got {choice!r}")
    from . import numba_backend

    return numba_backend, "numba"


_backend, backend_name = _select()

pair_kernels_chunk = _backend.pair_kernels_chunk
potentials_of_density = _backend.potentials_of_density
