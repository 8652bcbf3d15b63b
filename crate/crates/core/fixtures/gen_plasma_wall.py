"""Regenerates plasma_wall.msh: a Delaunay triangulation of [1,2]x[0,1]
with an elliptic plasma region (tag 1) inside a wall region (tag 2).

Boundary tags: 1 bottom, 2 right, 3 top, 4 left.
"""
import numpy as np
from scipy.spatial import Delaunay

rng = np.random.default_rng(7)
rc, zc, a, b = 1.5, 0.5, 0.3, 0.35
h = 1.0 / 20

pts = []
s = np.linspace(0.0, 1.0, 21)
for t in s[:-1]:
    pts += [(1.0 + t, 0.0), (2.0, t), (2.0 - t, 1.0), (1.0, 1.0 - t)]
for k, frac in enumerate([1.0, 0.8, 0.6, 0.4, 0.2]):
    n = max(6, int(round(48 * frac)))
    off = 0.5 * k
    for i in range(n):
        th = 2 * np.pi * (i + off) / n
        pts.append((rc + frac * a * np.cos(th), zc + frac * b * np.sin(th)))
pts.append((rc, zc))
for r in np.arange(1.0 + h, 2.0 - h / 2, h):
    for z in np.arange(h, 1.0 - h / 2, h):
        rr, zz = r + 0.25 * h * rng.uniform(-1, 1), z + 0.25 * h * rng.uniform(-1, 1)
        rho = np.hypot((rr - rc) / a, (zz - zc) / b)
        if rho > 1.12:
            pts.append((rr, zz))
pts = np.array(pts)
tri = Delaunay(pts)
cells = []
for c in tri.simplices:
    p = pts[c]
    area = 0.5 * ((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[2, 0] - p[0, 0]) * (p[1, 1] - p[0, 1]))
    if abs(area) < 1e-12:
        continue
    if area < 0:
        c = c[[0, 2, 1]]
    cells.append(c)


def tag_of(p, q):
    m = 0.5 * (p + q)
    if abs(m[1]) < 1e-12:
        return 1
    if abs(m[0] - 2.0) < 1e-12:
        return 2
    if abs(m[1] - 1.0) < 1e-12:
        return 3
    return 4


edges = {}
for c in cells:
    for i in range(3):
        e = tuple(sorted((c[i], c[(i + 1) % 3])))
        edges[e] = edges.get(e, 0) + 1
bnd = [e for e, n in edges.items() if n == 1]

lines = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$Nodes", str(len(pts))]
for i, p in enumerate(pts):
    lines.append(f"{i + 1} {float(p[0])!r} {float(p[1])!r} 0")
lines += ["$EndNodes", "$Elements", str(len(bnd) + len(cells))]
k = 1
for e in sorted(bnd):
    t = tag_of(pts[e[0]], pts[e[1]])
    lines.append(f"{k} 1 2 {t} {t} {e[0] + 1} {e[1] + 1}")
    k += 1
for c in cells:
    m = pts[c].mean(axis=0)
    t = 1 if np.hypot((m[0] - rc) / a, (m[1] - zc) / b) < 1.0 else 2
    lines.append(f"{k} 2 2 {t} {t} {c[0] + 1} {c[1] + 1} {c[2] + 1}")
    k += 1
lines.append("$EndElements")
open("plasma_wall.msh", "w").write("\n".join(lines) + "\n")
print(len(pts), "nodes", len(cells), "cells", len(bnd), "boundary edges")
