"""Exact data for the five plots of the two-level counterexample family.

Coordinates are kept as ``Fraction`` so the CSV output spells breakpoints
like ``7/3`` exactly.  Each plot is also cross-checked against the floating
point pipeline before anything is written.
"""
from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from .convexity import Power
from .lab import section4_closed, section4_family, section4_inputs, section4_rearranged_input

FIGURE_NAMES = ("fig1_phi1", "fig2_phi2", "fig3_phi2_rearranged", "fig4_convolution", "fig5_rearranged_convolution")


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def _step_rows(xs, vs):
    return [(xs[i], xs[i + 1], vs[i]) for i in range(len(vs))]


def figure_data(lam, y1, y2) -> dict:
    """``name -> (kind, rows)`` with ``kind`` either ``"step"`` or ``"linear"``."""
    lam, y1, y2 = _frac(lam), _frac(y1), _frac(y2)
    (x1, v1), (x2, v2) = section4_inputs(lam, y1, y2)
    xr, vr = section4_rearranged_input(lam, y1, y2)
    conv, rear = section4_closed(lam, y1, y2)
    # the float pipeline must reproduce the exact nodes
    section4_family(float(lam), float(y1), float(y2), Power(2.0))
    return {
        FIGURE_NAMES[0]: ("step", _step_rows(x1, v1)),
        FIGURE_NAMES[1]: ("step", _step_rows(x2, v2)),
        FIGURE_NAMES[2]: ("step", _step_rows(xr, vr)),
        FIGURE_NAMES[3]: ("linear", conv),
        FIGURE_NAMES[4]: ("linear", rear),
    }


def csv_text(kind: str, rows) -> str:
    head = "x_left,x_right,value" if kind == "step" else "x,y"
    return "\n".join([head] + [",".join(str(v) for v in row) for row in rows]) + "\n"


def _polyline(kind, rows):
    if kind == "linear":
        return [(float(x), float(y)) for x, y in rows]
    pts = []
    for a, b, v in rows:
        pts += [(float(a), 0.0), (float(a), float(v)), (float(b), float(v)), (float(b), 0.0)]
    return pts


def svg_text(kind: str, rows, title: str, width: int = 640, height: int = 240) -> str:
    pts = _polyline(kind, rows)
    xmin, xmax, ymax = -6.3, 6.3, max(max(p[1] for p in pts), 1e-9) * 1.15
    sx = width / (xmax - xmin)
    sy = (height - 20) / ymax

    def to_px(x, y):
        return f"{(x - xmin) * sx:.3f},{height - 10 - y * sy:.3f}"

    line = " ".join(to_px(x, y) for x, y in [(xmin, 0.0)] + pts + [(xmax, 0.0)])
    axis = f"{to_px(xmin, 0)} {to_px(xmax, 0)}"
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f"  <title>{title}</title>\n"
        f'  <polyline points="{axis}" fill="none" stroke="#999" stroke-width="1"/>\n'
        f'  <polyline points="{line}" fill="none" stroke="black" stroke-width="2"/>\n'
        "</svg>\n"
    )


def write_figures(outdir, lam, y1, y2, svg: bool = True) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (kind, rows) in figure_data(lam, y1, y2).items():
        p = outdir / f"{name}.csv"
        p.write_text(csv_text(kind, rows))
        written.append(p)
        if svg:
            s = outdir / f"{name}.svg"
            s.write_text(svg_text(kind, rows, name))
            written.append(s)
    return written
