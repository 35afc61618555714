"""Select the eigenvalue kernel at import: compiled core or pure-numpy fallback.

Set MIMOFB_PURE=1 to force the fallback (used by the parity tests and the
backend benchmark).
"""

from __future__ import annotations

import os

_FORCE_PURE = os.environ.get("MIMOFB_PURE", "") not in ("", "0")

if not _FORCE_PURE:
    try:
        from . import _mckernel as _impl

        HAVE_COMPILED = True
    except ImportError:
        from . import _kernel_py as _impl

        HAVE_COMPILED = False
else:
    from . import _kernel_py as _impl

    HAVE_COMPILED = False

BACKEND = _impl.BACKEND_NAME
eig_batch = _impl.eig_batch
eig_gram = _impl.eig_gram
