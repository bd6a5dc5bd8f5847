"""Figure rendering for torsim CSV artifacts."""

from .render import COLORS, KINDS, PlotSpec, RenderError, render
