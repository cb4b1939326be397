"""Test-session setup.

The workload is thousands of tiny matrix products; multithreaded BLAS
loses ~4x to thread coordination on them, so pin the pools to one thread
before numpy loads.
"""

import os
import sys

for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")

sys.path.insert(0, os.path.dirname(__file__))
