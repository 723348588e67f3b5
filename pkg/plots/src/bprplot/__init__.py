"""Figure rendering for bprsim sweep outputs."""

from .render import PANELS, PlotSpec, load_series, preset_spec, render

__all__ = ["PANELS", "PlotSpec", "load_series", "preset_spec", "render"]
