"""Render a template over a g x g cell grid as an SVG sketch.

Each cell owns `alphabet` consecutive bits; bit index = cell*alphabet +
pattern, cells in row-major order.  The canonical 18-pattern alphabet on
the unit cell, in fixed enumeration order 0..17:

    0..3   the four sides: top, right, bottom, left
    4..5   the two diagonals: TL-BR, TR-BL
    6..13  corner to the midpoint of each non-touching side:
           TL-mr, TL-mb, TR-ml, TR-mb, BR-mt, BR-ml, BL-mt, BL-mr
    14..17 midpoint diamond: mt-mr, mr-mb, mb-ml, ml-mt

(corner-to-adjacent-midpoint strokes are omitted: they coincide with
half-sides and would duplicate patterns 0..3).
"""

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = ["CANONICAL_ALPHABET", "render_sketch_svg"]

_TL, _TR, _BR, _BL = (0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)
_MT, _MR, _MB, _ML = (0.5, 0.0), (1.0, 0.5), (0.5, 1.0), (0.0, 0.5)

CANONICAL_ALPHABET = (
    (_TL, _TR), (_TR, _BR), (_BR, _BL), (_BL, _TL),
    (_TL, _BR), (_TR, _BL),
    (_TL, _MR), (_TL, _MB), (_TR, _ML), (_TR, _MB),
    (_BR, _MT), (_BR, _ML), (_BL, _MT), (_BL, _MR),
    (_MT, _MR), (_MR, _MB), (_MB, _ML), (_ML, _MT),
)

_CELL = 40  # pixels per cell side
_MARGIN = 10


def _fmt(x):
    return f"{x:g}"


def render_sketch_svg(template, grid, alphabet, path):
    """Write the sketch SVG for a binary template; returns the path.

    The template length must equal grid*grid*alphabet, and only the
    canonical 18-pattern alphabet is available.
    """
    bits = np.asarray(template).ravel()
    if alphabet != len(CANONICAL_ALPHABET):
        raise ParameterError(
            f"only the canonical {len(CANONICAL_ALPHABET)}-pattern alphabet "
            f"is available, got {alphabet}")
    if bits.size != grid * grid * alphabet:
        raise DimensionError(
            f"template has {bits.size} bits, expected "
            f"{grid}*{grid}*{alphabet} = {grid * grid * alphabet}")

    side = grid * _CELL + 2 * _MARGIN
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="0 0 {side} {side}">',
        f'<rect width="{side}" height="{side}" fill="white"/>',
    ]
    for i in range(grid + 1):
        pos = _MARGIN + i * _CELL
        parts.append(
            f'<line class="grid" x1="{_MARGIN}" y1="{pos}" '
            f'x2="{_MARGIN + grid * _CELL}" y2="{pos}" '
            f'stroke="#cccccc" stroke-width="1"/>')
        parts.append(
            f'<line class="grid" x1="{pos}" y1="{_MARGIN}" '
            f'x2="{pos}" y2="{_MARGIN + grid * _CELL}" '
            f'stroke="#cccccc" stroke-width="1"/>')
    for pos in np.flatnonzero(bits):
        cell, pattern = divmod(int(pos), alphabet)
        row, col = divmod(cell, grid)
        x0 = _MARGIN + col * _CELL
        y0 = _MARGIN + row * _CELL
        (ax, ay), (bx, by) = CANONICAL_ALPHABET[pattern]
        parts.append(
            f'<line class="seg" '
            f'x1="{_fmt(x0 + ax * _CELL)}" y1="{_fmt(y0 + ay * _CELL)}" '
            f'x2="{_fmt(x0 + bx * _CELL)}" y2="{_fmt(y0 + by * _CELL)}" '
            f'stroke="black" stroke-width="2" stroke-linecap="round"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(parts) + "\n")
    return path
