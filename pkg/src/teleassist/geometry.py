"""2D polyline primitives shared by the road model, path editing, and tracking.

Coordinates are meters in a fixed world frame, angles are degrees unless a
name says otherwise.
"""

import math

import numpy as np


class DegenerateGeometryError(ValueError):
    """Raised for coincident points, empty polylines, or invalid spacings."""


class Polyline:
    """Ordered 2D points with a cached arc-length parameter per point.

    For a polyline built from raw points, ``cumulative_s`` is the running
    chord length. Resampling carries positions measured along the source
    line instead, so the original parameterization survives corner cuts.
    """

    __slots__ = ("points", "cumulative_s")

    def __init__(self, points, s=None):
        pts = np.array(points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise DegenerateGeometryError("polyline needs at least two 2D points")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg <= 0.0):
            raise DegenerateGeometryError("consecutive polyline points coincide")
        if s is None:
            s = np.concatenate(([0.0], np.cumsum(seg)))
        else:
            s = np.array(s, dtype=float)
            if s.shape != (pts.shape[0],) or s[0] != 0.0 or np.any(np.diff(s) <= 0.0):
                raise DegenerateGeometryError("arc positions must start at 0 and increase")
        pts.setflags(write=False)
        s.setflags(write=False)
        self.points = pts
        self.cumulative_s = s

    def __len__(self):
        return self.points.shape[0]

    @property
    def length(self) -> float:
        return float(self.cumulative_s[-1])

    def point_at(self, s: float) -> np.ndarray:
        """Point at arc position s, clamped to the ends (exact endpoints)."""
        cum = self.cumulative_s
        if s <= 0.0:
            return self.points[0].copy()
        if s >= cum[-1]:
            return self.points[-1].copy()
        i = int(np.searchsorted(cum, s, side="right")) - 1
        i = min(i, len(self) - 2)
        t = (s - cum[i]) / (cum[i + 1] - cum[i])
        return self.points[i] + t * (self.points[i + 1] - self.points[i])

    def tangent_at(self, s: float) -> np.ndarray:
        """Unit tangent of the segment containing arc position s."""
        cum = self.cumulative_s
        i = int(np.searchsorted(cum, min(max(s, 0.0), cum[-1]), side="right")) - 1
        i = min(max(i, 0), len(self) - 2)
        d = self.points[i + 1] - self.points[i]
        return d / np.linalg.norm(d)

    def nearest(self, p) -> tuple[float, np.ndarray, float]:
        """Closest point on the polyline to p.

        Returns (arc position, foot point, distance). Ties resolve to the
        lowest segment index, so the result is deterministic.
        """
        p = np.asarray(p, dtype=float)
        a = self.points[:-1]
        ab = self.points[1:] - a
        denom = np.einsum("ij,ij->i", ab, ab)
        t = np.clip(np.einsum("ij,ij->i", p - a, ab) / denom, 0.0, 1.0)
        feet = a + t[:, None] * ab
        d2 = np.einsum("ij,ij->i", feet - p, feet - p)
        i = int(np.argmin(d2))
        s = self.cumulative_s[i] + t[i] * (self.cumulative_s[i + 1] - self.cumulative_s[i])
        return float(s), feet[i], float(math.sqrt(d2[i]))


def interior_angle(a, b, c) -> float:
    """Interior angle at b of the triangle a-b-c, in degrees within [0, 180].

    180 means collinear continuation, 0 an exact reversal. Symmetric in the
    outer arguments by construction.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    u = a - b
    v = c - b
    nu = math.hypot(u[0], u[1])
    nv = math.hypot(v[0], v[1])
    if nu == 0.0 or nv == 0.0:
        raise DegenerateGeometryError("interior angle needs three distinct points")
    cos = (u[0] * v[0] + u[1] * v[1]) / (nu * nv)
    return math.degrees(math.acos(min(1.0, max(-1.0, cos))))


def resample_equidistant(line: Polyline, spacing: float) -> Polyline:
    """Resample a polyline at equal arc-length steps measured along the source.

    Output points sit on the input line at arc positions 0, spacing,
    2*spacing, ...; the final input point is always kept, so the last step
    may be shorter. ``cumulative_s`` of the result holds those source arc
    positions, which keeps the total recorded arc length equal to the input
    length even where chords cut corners.
    """
    if spacing <= 0.0:
        raise DegenerateGeometryError("spacing must be positive")
    total = line.length
    n = int(math.floor(total / spacing + 1e-9))
    targets = [i * spacing for i in range(n + 1)]
    if total - targets[-1] > 1e-9:
        targets.append(total)
    elif len(targets) == 1:
        targets.append(total)
    else:
        targets[-1] = total
    pts = [line.point_at(s) for s in targets]
    return Polyline(np.array(pts), s=np.array(targets))


def transform_to_world(local_points, origin, heading: float) -> np.ndarray:
    """Rigid transform of pose-local points into the world frame."""
    local = np.asarray(local_points, dtype=float)
    c, s = math.cos(heading), math.sin(heading)
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.asarray(origin, dtype=float)


def mirror_y(points) -> np.ndarray:
    """Reflect points about the road axis (y = 0). Exact for IEEE floats."""
    p = np.array(points, dtype=float)
    p[..., 1] = -p[..., 1]
    return p
