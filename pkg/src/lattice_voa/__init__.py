"""Exact computations for holomorphic lattice vertex algebras.

Lattices and shells (lattice_core), q-series and characters (qseries),
genus-g representation numbers (genus_theta), an exact Fock-space model with
trace functions (fock_voa), and a command line (cli).
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import CapExceededError, DegenerateFormError, LatticeError, TruncationError
from .lattice_core import Lattice, build_named_lattice, enumerate_by_norm, load_lattice
from .qseries import QSeries, graded_dims, slope_bound, sturm_equal, theta_genus1
from .genus_theta import GramTarget, RepTable, rep_table, representation_number, schottky_difference_report

__all__ = [
    "CapExceededError",
    "DegenerateFormError",
    "GramTarget",
    "Lattice",
    "LatticeError",
    "QSeries",
    "RepTable",
    "TruncationError",
    "__version__",
    "build_named_lattice",
    "enumerate_by_norm",
    "graded_dims",
    "load_lattice",
    "rep_table",
    "representation_number",
    "schottky_difference_report",
    "slope_bound",
    "sturm_equal",
    "theta_genus1",
]
