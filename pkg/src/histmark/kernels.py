"""Inner-loop kernels, compiled when available.

The Cython extension ``histmark._ckernels`` is used if it imports; otherwise
the numpy/pure-Python twins in ``histmark._pykernels`` are. Set
``HISTMARK_PURE_PYTHON=1`` to force the fallback.
"""

import os

from histmark import _pykernels

BACKEND = "python"
if os.environ.get("HISTMARK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from histmark import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

transfer = _impl.transfer
cluster_labels = _impl.cluster_labels
