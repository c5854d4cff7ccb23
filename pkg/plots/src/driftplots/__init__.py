"""Offline figures from driftlab's curve CSVs.

The plotting layer consumes the simulator's documented file formats and
nothing else: it never imports the simulator and never recomputes an
estimate.  Two figure kinds are provided, each with a console script:

* ``driftplot-direction`` — one exceedance curve per block height H with
  its confidence band shaded.
* ``driftplot-decay`` — log-log decay of the exceedance at a probe
  threshold across heights, with a least-squares slope annotation.

Rendering is timestamp-free by default, so re-plotting the same CSV yields
byte-identical images.
"""

from .csvio import DIRECTION_COLUMNS, CurvePoint, SchemaError, read_direction_csv
from .figures import DecayFit, plot_decay_fit, plot_direction_curves, save_figure

__all__ = [
    "DIRECTION_COLUMNS",
    "CurvePoint",
    "DecayFit",
    "SchemaError",
    "plot_decay_fit",
    "plot_direction_curves",
    "read_direction_csv",
    "save_figure",
]
