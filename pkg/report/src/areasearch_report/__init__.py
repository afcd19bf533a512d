"""Offline report rendering for area-search simulation outputs.

A strict reader: consumes the simulator's documented CSV/JSON/snapshot files
via their manifest and renders trajectory, convergence-envelope, step-timing
and scalability figures. No physics is recomputed here.
"""

from .figures import FIGURE_NAMES, ReportSpec, render
from .readers import ReportDataError, assert_envelopes_bound_runs

__version__ = "0.1.0"
