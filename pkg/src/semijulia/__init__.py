"""Two-generator polynomial semigroups: Julia sets, parameter loci, random dynamics."""
import os

# Prefer OpenMP to TBB: an old system TBB otherwise triggers a fallback warning.
os.environ.setdefault("NUMBA_THREADING_LAYER_PRIORITY", "omp tbb workqueue")

__version__ = "0.1.0"
