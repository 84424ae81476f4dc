"""Planar geometry of the handover analysis.

All radii are horizontal projections: the receiving range, the equal-mean-RSS
radius map between link types, the cross-type exclusion radii, the post-move
serving distance, and the area of the post-move disk not covered by the
pre-move disk (the region whose PPP null probability gives the no-handover
probability).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .model import AntennaModel, ChannelParams, DirectionalAntenna, LinkType

__all__ = [
    "DiskPair",
    "receiving_radius",
    "equal_power_radius",
    "exclusion_radius",
    "displaced_distance",
    "lens_complement_area",
]


@dataclass(frozen=True)
class DiskPair:
    """Disk A of radius x at the pre-move point, disk B of radius y at the
    post-move point, centers separated by the horizontal displacement v."""

    x: float
    y: float
    v: float

    def __post_init__(self):
        if self.x < 0 or self.y < 0 or self.v < 0:
            raise GeometryError(f"radii and separation must be nonnegative: {self}")


def receiving_radius(z, h_b: float, antenna: AntennaModel):
    """Horizontal radius of the antenna footprint at altitude z.

    (z - h_b) * tan(beamwidth/2) for the directional cone; the truncation
    radius for the omni model, independent of altitude.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z <= h_b):
        raise GeometryError(f"altitude {z} not above GBS height {h_b}")
    if isinstance(antenna, DirectionalAntenna):
        out = (z - h_b) * np.tan(np.radians(antenna.beamwidth_deg / 2.0))
        return float(out) if out.ndim == 0 else out
    out = np.broadcast_to(antenna.r_max, z.shape).astype(float)
    return float(antenna.r_max) if z.ndim == 0 else out.copy()


def equal_power_radius(serving: LinkType, target: LinkType, x, h_bar: float,
                       ch: ChannelParams):
    """Horizontal radius at which a target-type GBS matches the mean RSS of a
    serving-type GBS at horizontal distance x.

    Identity for same-type pairs. For cross-type pairs solves
    eta_t*(d^2+h^2)^(-a_t/2) = eta_s*(x^2+h^2)^(-a_s/2) for d, clamped to 0
    when no real solution exists (the matching point would be underground).
    """
    x = np.asarray(x, dtype=float)
    if serving is target:
        return float(x) if x.ndim == 0 else x.copy()
    a_s, a_t = ch.alpha(serving), ch.alpha(target)
    e_s, e_t = ch.eta(serving), ch.eta(target)
    h2 = h_bar * h_bar
    radicand = (e_t / e_s) ** (2.0 / a_t) * (x * x + h2) ** (a_s / a_t) - h2
    out = np.sqrt(np.maximum(radicand, 0.0))
    return float(out) if out.ndim == 0 else out


def exclusion_radius(serving: LinkType, r0, h_bar: float, ch: ChannelParams):
    """Minimum distance of the nearest opposite-type GBS given the serving one.

    Under strongest-average-RSS association, a serving-type GBS at r0 implies
    no opposite-type GBS closer than the equal-mean-RSS radius.
    """
    return equal_power_radius(serving, serving.other, r0, h_bar, ch)


def displaced_distance(r0, v_h, theta):
    """Distance to the original serving GBS after moving v_h at angle theta."""
    r0 = np.asarray(r0, dtype=float)
    v_h = np.asarray(v_h, dtype=float)
    out = np.sqrt(r0 * r0 + v_h * v_h + 2.0 * r0 * v_h * np.cos(theta))
    return float(out) if out.ndim == 0 else out


def _lens_intersection_area(x, y, v):
    """Area of the intersection of two overlapping disks (partial case only)."""
    # inverse-cosine arguments can drift to 1+1e-16 on branch boundaries
    ax = np.clip((v * v + x * x - y * y) / (2.0 * v * x), -1.0, 1.0)
    ay = np.clip((v * v + y * y - x * x) / (2.0 * v * y), -1.0, 1.0)
    heron = (x + y - v) * (v + x - y) * (v - x + y) * (v + x + y)
    return (x * x * np.arccos(ax) + y * y * np.arccos(ay)
            - 0.5 * np.sqrt(np.maximum(heron, 0.0)))


def lens_complement_area(p: DiskPair | None = None, *, x=None, y=None, v=None):
    """Area of disk B not covered by disk A, |B| - |A and B|.

    Branches: B inside A -> 0; disjoint -> pi*y^2; A inside B ->
    pi*(y^2 - x^2); otherwise the circular-lens closed form. Accepts either
    a DiskPair or broadcastable arrays via keywords.
    """
    if p is not None:
        x, y, v = p.x, p.y, p.v
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0 and np.ndim(v) == 0
    x, y, v = np.broadcast_arrays(np.atleast_1d(np.asarray(x, dtype=float)),
                                  np.atleast_1d(np.asarray(y, dtype=float)),
                                  np.atleast_1d(np.asarray(v, dtype=float)))

    area_b = np.pi * y * y
    b_inside_a = v + y <= x
    disjoint = v >= x + y
    a_inside_b = v + x <= y

    out = np.empty(x.shape, dtype=float)
    out[b_inside_a] = 0.0
    rest = ~b_inside_a
    out[rest & disjoint] = area_b[rest & disjoint]
    contain = rest & ~disjoint & a_inside_b
    out[contain] = np.pi * (y[contain] ** 2 - x[contain] ** 2)

    partial = rest & ~disjoint & ~a_inside_b
    if np.any(partial):
        xp, yp, vp = x[partial], y[partial], v[partial]
        out[partial] = np.pi * yp * yp - _lens_intersection_area(xp, yp, vp)

    out = np.clip(out, 0.0, area_b)
    return float(out[0]) if scalar else out
