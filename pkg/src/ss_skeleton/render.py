"""SVG and CSV emission for covering certificates.

The SVG is display-only: exact coordinates are rendered as 64-bit floats.
The CSV keeps exact rational vertex coordinates as strings.
"""

from __future__ import annotations

import csv
import io
from fractions import Fraction
from xml.sax.saxutils import escape

from .covering import CoveringCertificate, covering_float_layout

_PALETTE = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#ff9da7"]
_MAX_SVG_SIMPLICES = 20_000


def certificate_csv(cert: CoveringCertificate) -> str:
    """One row per simplex vertex: ``leaf,simplex,vertex,x,y`` in local log_r units."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["leaf", "N", "simplex", "vertex", "x", "y"])
    for lf in cert.leaves:
        N = lf.N
        for si, simplex in enumerate(lf.simplices.tolist()):
            for vi, (x, y) in enumerate(simplex):
                w.writerow([lf.id, N, si, vi, str(Fraction(x, N)), str(Fraction(y, N))])
    return buf.getvalue()


def certificate_svg(cert: CoveringCertificate, *, size: int = 480, margin: int = 40) -> str:
    """Leaves placed in root log_r coordinates with their triangles; overlaps show as blended fill."""
    layout = covering_float_layout(cert)
    boxes = []
    for item in layout:
        reg = item["leaf"].region
        w, hl, hr = float(reg.width), float(reg.h_left), float(reg.h_right)
        boxes.append((item, w, hl, hr))
    xmax = max([item["dx"] + w for item, w, _, _ in boxes] + [1e-9])
    ymax = max([item["dy"] + max(hl, hr) for item, _, hl, hr in boxes] + [1e-9])
    scale = (size - 2 * margin) / max(xmax, ymax)

    def px(x: float, y: float) -> str:
        # u grows towards the boundary; draw it growing right and down
        return f"{margin + x * scale:.3f},{margin + y * scale:.3f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 30}" '
        f'viewBox="0 0 {size} {size + 30}">',
        "<!-- display-only rendering; exact coordinates live in the certificate -->",
        f'<text x="{margin}" y="{size + 18}" font-family="monospace" font-size="12">'
        f"{escape(_caption(cert))}</text>",
    ]
    budget = _MAX_SVG_SIMPLICES
    for k, (item, w, hl, hr) in enumerate(boxes):
        lf, dx, dy = item["leaf"], item["dx"], item["dy"]
        color = _PALETTE[k % len(_PALETTE)]
        outline = [px(dx, dy), px(dx + w, dy), px(dx + w, dy + hr), px(dx, dy + hl)]
        out.append(
            f'<g id="{escape(lf.id)}"><polygon points="{" ".join(outline)}" '
            f'fill="{color}" fill-opacity="0.25" stroke="{color}" stroke-width="2"/>'
        )
        if lf.simplices.shape[1] == 3 and lf.simplices.shape[0] <= budget:
            budget -= lf.simplices.shape[0]
            N = lf.N
            for tri in lf.simplices.tolist():
                pts = " ".join(px(dx + x / N, dy + y / N) for x, y in tri)
                out.append(f'<polygon points="{pts}" fill="none" stroke="{color}" stroke-width="0.5"/>')
        elif lf.simplices.shape[1] == 2:
            N = lf.N
            for (x0, y0), (x1, y1) in lf.simplices.tolist():
                a, b = px(dx + x0 / N, dy + y0 / N).split(","), px(dx + x1 / N, dy + y1 / N).split(",")
                out.append(
                    f'<line x1="{a[0]}" y1="{a[1]}" x2="{b[0]}" y2="{b[1]}" stroke="{color}" stroke-width="3"/>'
                )
        out.append(f'<text x="{px(dx, dy).split(",")[0]}" y="{float(px(dx, dy).split(",")[1]) - 4:.3f}" '
                   f'font-family="monospace" font-size="10" fill="{color}">{escape(lf.id)}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _caption(cert: CoveringCertificate) -> str:
    verdict = cert.verdict
    state = "unverified" if verdict is None else ("valid" if verdict.valid else "invalid")
    return f"{len(cert.leaves)} leaves, {cert.triangle_count} triangles, {state}"
