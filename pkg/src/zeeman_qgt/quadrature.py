"""Radial and polar quadrature rules.

Singular-looking integrands (a Dirac node at the origin, curvature
concentrated on the mass scale) are handled with composite Gauss-Legendre
on geometrically shrinking panels toward r = 0, so no scale has to be
known in advance.
"""

from __future__ import annotations

import numpy as np

GL_ORDER = 8


def gauss_legendre_panels(edges, order: int = GL_ORDER):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, float)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def radial_rule(r_max: float, nr: int, log_radial: bool = True, floor: float = 1e-8, order: int = GL_ORDER):
    """Nodes/weights for the integral over r in [0, r_max] (no r Jacobian included).

    With ``log_radial`` the panel edges are r_max * q**j down to ``floor * r_max``,
    plus one panel [0, floor * r_max]; otherwise panels are uniform.
    """
    panels = max(1, nr // order)
    if log_radial and panels > 1:
        inner = r_max * np.geomspace(floor, 1.0, panels)
        edges = np.concatenate([[0.0], inner])
    else:
        edges = np.linspace(0.0, r_max, panels + 1)
    return gauss_legendre_panels(edges, order)


def disk_rule(radius: float, ntheta: int, panels: int = 48, ratio: float = 0.5, order: int = GL_ORDER):
    """Polar rule on a disk: radial geometric GL panels times a periodic trapezoid.

    Returns offsets (N, 2) from the centre and area weights (N,).
    """
    edges = np.concatenate([[0.0], radius * ratio ** np.arange(panels, -1, -1)])
    r, wr = gauss_legendre_panels(edges, order)
    theta = 2 * np.pi * np.arange(ntheta) / ntheta
    R, TH = np.meshgrid(r, theta, indexing="ij")
    W = (wr * r)[:, None] * np.full(ntheta, 2 * np.pi / ntheta)[None, :]
    pts = np.stack([R * np.cos(TH), R * np.sin(TH)], axis=-1)
    return pts.reshape(-1, 2), W.ravel()


def fan_rule(vertices, center, panels: int = 48, ratio: float = 0.5, order: int = GL_ORDER, seg_order: int = 16):
    """Area rule for a polygon star-shaped w.r.t. ``center``, via a triangle fan."""
    vertices = np.asarray(vertices, float)
    c = np.asarray(center, float)
    edges = np.concatenate([[0.0], ratio ** np.arange(panels, -1, -1)])
    t, wt = gauss_legendre_panels(edges, order)
    s, ws = np.polynomial.legendre.leggauss(seg_order)
    s, ws = 0.5 * (s + 1), 0.5 * ws
    pts, wts = [], []
    for a, b in zip(vertices, np.roll(vertices, -1, axis=0)):
        q = a[None, :] + s[:, None] * (b - a)[None, :]
        rel, edge = q - c, b - a
        jac = rel[:, 0] * edge[1] - rel[:, 1] * edge[0]
        p = c + t[:, None, None] * (q - c)[None, :, :]
        pts.append(p.reshape(-1, 2))
        wts.append((wt[:, None] * t[:, None] * (ws * jac)[None, :]).ravel())
    return np.concatenate(pts), np.concatenate(wts)
