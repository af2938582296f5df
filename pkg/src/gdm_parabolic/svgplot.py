"""Log-log convergence plot written directly as SVG text."""

import numpy as np

from .experiments import read_csv

__all__ = ['emit_plot', 'REFERENCE_SLOPES']

REFERENCE_SLOPES = (0.5, 1.0, 2.0)
_COLORS = {'E1': '#1f77b4', 'E2': '#d62728', 'riesz_gap': '#2ca02c',
           'zeta_T': '#9467bd', 'delta_T': '#8c564b'}
W, H, PAD = 640, 480, 70


def _ticks(lo, hi):
    return [10.0 ** e for e in range(int(np.floor(lo)), int(np.ceil(hi)) + 1)]


def emit_plot(csv_path, svg_path, series=('E1', 'E2')):
    """Plot the error columns ``series`` against h with dashed reference
    slopes 1/2, 1 and 2 anchored at the coarsest point of the first series."""
    data = read_csv(csv_path, ('h',) + tuple(series))
    h = data['h']
    ys = {s: data[s] for s in series}
    for s, y in ys.items():
        if y.size == 0 or np.any(y <= 0) or np.any(h <= 0):
            raise ValueError('series %s is empty or not positive' % s)
    lx = np.log10(h)
    lys = {s: np.log10(y) for s, y in ys.items()}
    x0, x1 = lx.min() - 0.1, lx.max() + 0.1
    allv = np.concatenate(list(lys.values()))
    y0, y1 = allv.min() - 0.3, allv.max() + 0.3

    def px(x):
        return PAD + (x - x0) / (x1 - x0) * (W - 2 * PAD)

    def py(y):
        return H - PAD - (y - y0) / (y1 - y0) * (H - 2 * PAD)

    out = ['<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
           'font-family="sans-serif" font-size="12">' % (W, H),
           '<rect width="100%" height="100%" fill="white"/>',
           '<rect x="%d" y="%d" width="%d" height="%d" fill="none" stroke="black"/>'
           % (PAD, PAD, W - 2 * PAD, H - 2 * PAD)]
    for e in _ticks(x0, x1):
        x = np.log10(e)
        if x0 <= x <= x1:
            out.append('<text x="%.1f" y="%d" text-anchor="middle">%g</text>' % (px(x), H - PAD + 18, e))
    for e in _ticks(y0, y1):
        y = np.log10(e)
        if y0 <= y <= y1:
            out.append('<text x="%d" y="%.1f" text-anchor="end">%.0e</text>' % (PAD - 6, py(y) + 4, e))
    out.append('<text x="%d" y="%d" text-anchor="middle">h</text>' % (W // 2, H - 20))
    out.append('<text x="20" y="%d" transform="rotate(-90 20 %d)" text-anchor="middle">error</text>'
               % (H // 2, H // 2))

    ax, ay = lx.max(), lys[series[0]][np.argmax(lx)]
    for i, s in enumerate(REFERENCE_SLOPES):
        ya, yb = ay, ay + s * (lx.min() - ax)
        out.append('<polyline class="reference" data-slope="%g" points="%.1f,%.1f %.1f,%.1f" '
                   'stroke="gray" stroke-dasharray="6,4" fill="none"/>'
                   % (s, px(ax), py(ya), px(lx.min()), py(yb)))
        out.append('<text x="%.1f" y="%.1f" fill="gray">slope %g</text>'
                   % (px(lx.min()) + 4, py(yb) + 4, s))
    for j, (s, ly) in enumerate(lys.items()):
        c = _COLORS.get(s, '#333333')
        pts = ' '.join('%.1f,%.1f' % (px(a), py(b)) for a, b in zip(lx, ly))
        out.append('<polyline class="series" data-name="%s" points="%s" stroke="%s" '
                   'stroke-width="2" fill="none"/>' % (s, pts, c))
        for a, b in zip(lx, ly):
            out.append('<circle cx="%.1f" cy="%.1f" r="3" fill="%s"/>' % (px(a), py(b), c))
        out.append('<text x="%d" y="%d" fill="%s">%s</text>' % (W - PAD - 60, PAD + 18 * (j + 1), c, s))
    out.append('</svg>')
    with open(svg_path, 'w') as fh:
        fh.write('\n'.join(out) + '\n')
    return svg_path
