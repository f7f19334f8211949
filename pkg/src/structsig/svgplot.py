"""Minimal SVG line plots with shaded bands."""
import numpy as np

_COLORS = ["#1f4e79", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e", "#5d6d7e"]


def line_plot(path, x, lines, title="", width=800, height=360):
    """
    lines : list of dicts with keys y, label and optional lower/upper for a
    band.  NaN values break the polyline.
    """
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(l["y"], float) for l in lines]
    ys += [np.asarray(l[k], float) for l in lines for k in ("lower", "upper") if k in l]
    lo = min(np.nanmin(y) for y in ys)
    hi = max(np.nanmax(y) for y in ys)
    if hi == lo:
        hi, lo = hi + 1, lo - 1
    pad = 40

    def px(v):
        return pad + (v - x.min()) / max(x.max() - x.min(), 1e-12) * (width - 2 * pad)

    def py(v):
        return height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{pad}" y="20" font-size="14">{title}</text>']
    for i, l in enumerate(lines):
        col = _COLORS[i % len(_COLORS)]
        if "lower" in l and "upper" in l:
            lw, up = np.asarray(l["lower"], float), np.asarray(l["upper"], float)
            ok = ~(np.isnan(lw) | np.isnan(up))
            pts = [(px(a), py(b)) for a, b in zip(x[ok], up[ok])]
            pts += [(px(a), py(b)) for a, b in zip(x[ok][::-1], lw[ok][::-1])]
            if pts:
                s = " ".join(f"{a:.1f},{b:.1f}" for a, b in pts)
                out.append(f'<polygon points="{s}" fill="{col}" fill-opacity="0.2" stroke="none"/>')
        y = np.asarray(l["y"], float)
        seg = []
        for a, b in zip(x, y):
            if np.isnan(b):
                if len(seg) > 1:
                    out.append(_polyline(seg, col))
                seg = []
            else:
                seg.append((px(a), py(b)))
        if len(seg) > 1:
            out.append(_polyline(seg, col))
        out.append(f'<text x="{width - pad - 150}" y="{20 + 16 * i}" font-size="12" '
                   f'fill="{col}">{l.get("label", "")}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def _polyline(seg, col):
    s = " ".join(f"{a:.1f},{b:.1f}" for a, b in seg)
    return f'<polyline points="{s}" fill="none" stroke="{col}" stroke-width="1.2"/>'
