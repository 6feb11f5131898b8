"""Test-session environment: pin BLAS to one thread.

The kernels operate on small matrices where OpenBLAS threading costs
more than it saves, and the acceptance head-to-head parallelizes at the
process level; the env var is inherited by joblib workers.
"""

import os

os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

try:
    from threadpoolctl import threadpool_limits

    _BLAS_LIMIT = threadpool_limits(1, "blas")  # held for the session
except Exception:
    _BLAS_LIMIT = None
