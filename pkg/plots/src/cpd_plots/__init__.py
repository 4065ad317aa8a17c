from .render import (
    CurveSet,
    MethodCurve,
    PlotDataError,
    build_figure,
    load_curves,
    render_curves,
)

__all__ = [
    "CurveSet",
    "MethodCurve",
    "PlotDataError",
    "build_figure",
    "load_curves",
    "render_curves",
]
