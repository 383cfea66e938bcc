"""Figure regeneration for cipsac result CSVs."""

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, heatmap_peaks, render

__version__ = "0.1.0"
