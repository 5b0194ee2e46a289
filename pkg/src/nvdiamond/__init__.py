"""Spin-resonance modelling of NV and P1 centres in diamond.

Submodules: ``spin_algebra``, ``hamiltonians``, ``spectra``, ``odmr_synth``,
``fitting``, ``dynamics``, ``cavity``, plus ``config`` and ``cli`` for the
command-line tool.
"""

from .hamiltonians import C13Params, FieldConfig, NvParams, P1Params, SystemParams
from .spectra import SweepGrid, lines_over_sweep

__version__ = "0.1.0"
