"""Decoy-state key rates for memory-assisted and memoryless MDI key distribution.

The modules build on one another:

* :mod:`maqkd.params` holds system, memory and intensity parameters.
* :mod:`maqkd.loading` computes memory-loading probabilities and errors.
* :mod:`maqkd.asymptotic` gives infinite-key rates.
* :mod:`maqkd.counts` turns parameters into expected or sampled counts.
* :mod:`maqkd.finite_key` turns counts into finite-key bounds.
* :mod:`maqkd.optimizer` searches intensities.
* :mod:`maqkd.sweep` and :mod:`maqkd.cli` drive distance sweeps.
* :mod:`maqkd.oracle` holds Monte-Carlo cross-checks.
"""

from .asymptotic import ma_asymptotic, mdi_asymptotic
from .finite_key import estimate_key, ma_finite, mdi_finite
from .optimizer import Objective, OptimizationConfig, optimize_rate
from .params import IntensitySet, MemoryParams, SystemParams, builtin_memory

__all__ = [
    "IntensitySet",
    "MemoryParams",
    "Objective",
    "OptimizationConfig",
    "SystemParams",
    "builtin_memory",
    "estimate_key",
    "ma_asymptotic",
    "ma_finite",
    "mdi_asymptotic",
    "mdi_finite",
    "optimize_rate",
]

__version__ = "0.1.0"
