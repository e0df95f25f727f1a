"""Compiled per-pixel loops for the silhouette rasterizer.

Pixel (row r, col c) samples the point (c + 0.5, r + 0.5).  Loops run in
row-major order with a fixed segment order so results are reproducible.
"""

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def signed_distance(verts, segs, width, height):
    """Signed distance to the outline, closest segment and its parameter.

    Inside means nonzero winding over the directed segments.  Returns
    ``(d, inside, closest, tpar)`` with ``d > 0`` inside and ``d < 0``
    outside.  ``closest`` is -1 only when there are no segments.
    """
    d = np.empty((height, width))
    inside = np.zeros((height, width), dtype=np.bool_)
    closest = np.full((height, width), -1, dtype=np.int64)
    tpar = np.zeros((height, width))
    nseg = segs.shape[0]
    sax = np.empty(nseg)
    say = np.empty(nseg)
    sbx = np.empty(nseg)
    sby = np.empty(nseg)
    sinv = np.zeros(nseg)
    for s in range(nseg):
        sax[s] = verts[segs[s, 0], 0]
        say[s] = verts[segs[s, 0], 1]
        sbx[s] = verts[segs[s, 1], 0]
        sby[s] = verts[segs[s, 1], 1]
        l2 = (sbx[s] - sax[s]) ** 2 + (sby[s] - say[s]) ** 2
        if l2 > 0.0:
            sinv[s] = 1.0 / l2
    for r in range(height):
        py = r + 0.5
        for c in range(width):
            px = c + 0.5
            wn = 0
            best = 1e300
            bi = -1
            bt = 0.0
            for s in range(nseg):
                ax = sax[s]
                ay = say[s]
                by = sby[s]
                ex = sbx[s] - ax
                ey = by - ay
                wx = px - ax
                wy = py - ay
                if ay <= py:
                    if by > py and ex * wy - wx * ey > 0.0:
                        wn += 1
                elif by <= py and ex * wy - wx * ey < 0.0:
                    wn -= 1
                t = (wx * ex + wy * ey) * sinv[s]
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                qx = wx - t * ex
                qy = wy - t * ey
                dd = qx * qx + qy * qy
                if dd < best:
                    best = dd
                    bi = s
                    bt = t
            dist = np.sqrt(best)
            if wn != 0:
                d[r, c] = dist
                inside[r, c] = True
            else:
                d[r, c] = -dist
            closest[r, c] = bi
            tpar[r, c] = bt
    return d, inside, closest, tpar


@njit(cache=True)
def distance_gradient_accumulate(verts, segs, d, closest, tpar, weight, nverts):
    """Sum ``weight[p] * dd_p/dvertex`` over all pixels.

    ``weight`` is dLoss/dd per pixel.  For the closest segment (a, b) with
    clamped parameter t and unit vector n from the closest point to the
    pixel, d(dist)/da = -(1 - t) n and d(dist)/db = -t n.  The signed
    distance flips the sign outside.
    """
    grad = np.zeros((nverts, 2))
    height, width = d.shape
    for r in range(height):
        py = r + 0.5
        for c in range(width):
            w = weight[r, c]
            s = closest[r, c]
            if w == 0.0 or s < 0:
                continue
            ia = segs[s, 0]
            ib = segs[s, 1]
            ax = verts[ia, 0]
            ay = verts[ia, 1]
            bx = verts[ib, 0]
            by = verts[ib, 1]
            if ax == bx and ay == by:
                continue
            t = tpar[r, c]
            nx = (c + 0.5) - (ax + t * (bx - ax))
            ny = py - (ay + t * (by - ay))
            dist = np.sqrt(nx * nx + ny * ny)
            if dist == 0.0:
                continue
            sign = 1.0 if d[r, c] > 0.0 else -1.0
            k = -w * sign / dist
            grad[ia, 0] += k * (1.0 - t) * nx
            grad[ia, 1] += k * (1.0 - t) * ny
            grad[ib, 0] += k * t * nx
            grad[ib, 1] += k * t * ny
    return grad
