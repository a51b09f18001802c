"""Pick the compiled kernels when importable, else the pure-Python ones.

Set ``SENSOGRAPH_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

python_kernels = _kernels_py
compiled_kernels = None

if not os.environ.get("SENSOGRAPH_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_kernels
    except ImportError:
        compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "cython" if compiled_kernels is not None else "python"
