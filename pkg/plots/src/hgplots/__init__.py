"""Plot rendering for hgpart benchmark aggregates."""

from .render import PlotSpec, load_series, main, render

__all__ = ["PlotSpec", "load_series", "main", "render"]
