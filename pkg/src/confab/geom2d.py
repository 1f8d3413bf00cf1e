"""Small 2D polygon helpers used by layout synthesis and raster planning.

Polygons are lists of (x, y) vertices in mm, implicitly closed, outer
boundaries counterclockwise. All routines are deterministic and allocation
light; nothing here depends on the rest of the package.
"""

from __future__ import annotations

import math


def polygon_area(poly):
    """Signed shoelace area (positive for counterclockwise winding)."""
    a = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        a += x0 * y1 - x1 * y0
    return 0.5 * a


def bbox(points):
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return min(xs), min(ys), max(xs), max(ys)


def polyline_length(points):
    return sum(
        math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(points, points[1:])
    )


def resample_polyline(points, max_step):
    """Insert vertices so no segment exceeds max_step; keeps originals."""
    out = [tuple(points[0])]
    for a, b in zip(points, points[1:]):
        d = math.hypot(b[0] - a[0], b[1] - a[1])
        n = max(1, int(math.ceil(d / max_step - 1e-12)))
        for k in range(1, n + 1):
            t = k / n
            out.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
    return out


def resample_polygon(poly, max_step):
    """Resample a closed polygon; the closing edge is densified too."""
    closed = list(poly) + [poly[0]]
    return resample_polyline(closed, max_step)[:-1]


def _segments_properly_intersect(p1, p2, p3, p4):
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(v) < 1e-12:
            return 0
        return 1 if v > 0 else -1

    o1 = orient(p1, p2, p3)
    o2 = orient(p1, p2, p4)
    o3 = orient(p3, p4, p1)
    o4 = orient(p3, p4, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def polygon_is_simple(poly):
    """Brute-force segment-pair test: no two non-adjacent edges cross."""
    n = len(poly)
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue  # adjacent through the closing vertex
            if _segments_properly_intersect(*edges[i], *edges[j]):
                return False
    return True


def point_in_polygon(pt, poly, tol=1e-9):
    """Even-odd test; points on the boundary count as inside."""
    x, y = pt
    n = len(poly)
    inside = False
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        # boundary check
        if _point_on_segment(pt, (x0, y0), (x1, y1), tol):
            return True
        if (y0 > y) != (y1 > y):
            xi = x0 + (y - y0) / (y1 - y0) * (x1 - x0)
            if x < xi:
                inside = not inside
    return inside


def _point_on_segment(p, a, b, tol):
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    if L2 == 0:
        return math.hypot(px - ax, py - ay) <= tol
    t = ((px - ax) * dx + (py - ay) * dy) / L2
    t = min(1.0, max(0.0, t))
    cx, cy = ax + t * dx, ay + t * dy
    return math.hypot(px - cx, py - cy) <= tol


def point_on_polygon_boundary(pt, poly, tol=1e-6):
    n = len(poly)
    return any(
        _point_on_segment(pt, poly[i], poly[(i + 1) % n], tol) for i in range(n)
    )


def polygon_contains_polygon(outer, inner, tol=1e-9):
    return all(point_in_polygon(p, outer, tol) for p in inner)


def scanline_intervals(poly, y):
    """x-intervals of the polygon interior on the horizontal line at y.

    Even-odd crossing rule with half-open vertex handling so rows through a
    vertex are counted once. Returns a sorted list of (x_enter, x_exit).
    """
    xs = []
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            xs.append(x0 + (y - y0) / (y1 - y0) * (x1 - x0))
    xs.sort()
    return [(xs[i], xs[i + 1]) for i in range(0, len(xs) - 1, 2)]


def rotate_point(pt, cos_t, sin_t):
    return (pt[0] * cos_t - pt[1] * sin_t, pt[0] * sin_t + pt[1] * cos_t)


def raster_rows(poly, spacing, angle=0.0):
    """Boustrophedon raster passes for a polygon at the given row spacing.

    Rows run along the direction `angle` (radians, measured from +x). The
    first row sits spacing/2 inside the rotated bounding box and rows
    alternate direction. Returns a list of passes, each a list of
    ((x0, y0), (x1, y1)) interval endpoints in the original frame.
    """
    c, s = math.cos(angle), math.sin(angle)
    # rotate polygon by -angle so rows are horizontal
    rot = [rotate_point(p, c, -s) for p in poly]
    ymin = min(p[1] for p in rot)
    ymax = max(p[1] for p in rot)
    passes = []
    j = 0
    flip = False
    while True:
        y = ymin + spacing / 2.0 + j * spacing
        if y > ymax - spacing / 2.0 + 1e-9:
            break
        spans = scanline_intervals(rot, y)
        row = []
        for xa, xb in spans:
            if xb - xa < 1e-9:
                continue
            a = rotate_point((xa, y), c, s)
            b = rotate_point((xb, y), c, s)
            row.append((a, b) if not flip else (b, a))
        if row:
            passes.append(list(reversed(row)) if flip else row)
        j += 1
        flip = not flip
    return passes
