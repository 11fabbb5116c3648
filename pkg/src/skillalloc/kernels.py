"""Select the assignment kernel at import time.

The Cython build is used when it was compiled; otherwise, or when
``SKILLALLOC_PURE_PYTHON=1`` is set, the pure-Python twin is used.
"""

import os

from . import _assign_py

python_solve_min = _assign_py.solve_min

try:
    from ._assign_ext import solve_min as compiled_solve_min
except ImportError:  # extension not built
    compiled_solve_min = None

if compiled_solve_min is not None and os.environ.get("SKILLALLOC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    solve_min = compiled_solve_min
    BACKEND = "cython"
else:
    solve_min = python_solve_min
    BACKEND = "python"
