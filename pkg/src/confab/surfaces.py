"""Parametric substrate surfaces: plane, cylindrical shell, spherical cap, biquadratic patch.

Every surface maps the unit square (u, v) to 3D points in mm and exposes a full
differential frame (point, outward normal, tangents, first fundamental form).
Offsets along the normal produce the conformal shell stack used by the
multi-axis planner.

Parametrizations:
  plane(width, length):      p = (u*width, v*length, z0)
  cylinder(R, arc, length):  axis along y; theta = arc*(u-1/2) from the crown;
                             p = (R*sin(theta), v*length, R*cos(theta))
  sphere_cap(R, cap_angle):  height field over the inscribed square of the cap
                             rim circle, x = s*(2u-1), y = s*(2v-1),
                             s = R*sin(cap_angle)/sqrt(2), z = sqrt(R^2-x^2-y^2)
  biquadratic(grid):         tensor-product quadratic Bezier on a 3x3 grid
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CurvatureViolation, DomainError, InvariantViolation

# 5-point Gauss-Legendre nodes/weights on [0, 1]
_GAUSS5 = (
    (0.04691007703066800, 0.11846344252809454),
    (0.23076534494715845, 0.23931433524968324),
    (0.5, 0.28444444444444444),
    (0.76923465505284155, 0.23931433524968324),
    (0.95308992296933200, 0.11846344252809454),
)


@dataclass(frozen=True)
class SurfaceFrame:
    point: np.ndarray  # mm
    normal: np.ndarray  # unit, outward
    du: np.ndarray  # dp/du, mm per unit parameter
    dv: np.ndarray  # dp/dv
    metric: tuple  # (E, F, G), mm^2


class Surface:
    """Base class; subclasses implement _eval returning (point, du, dv)."""

    kind = "abstract"

    def __init__(self, thickness=1.5):
        if thickness <= 0:
            raise InvariantViolation("surface thickness must be > 0")
        self.thickness = thickness

    def _eval(self, u, v):
        raise NotImplementedError

    def evaluate(self, u, v) -> SurfaceFrame:
        if not (-1e-12 <= u <= 1 + 1e-12 and -1e-12 <= v <= 1 + 1e-12):
            raise DomainError(f"(u, v) = ({u:.6g}, {v:.6g}) outside the unit square")
        u = min(1.0, max(0.0, u))
        v = min(1.0, max(0.0, v))
        p, du, dv = self._eval(u, v)
        nx = du[1] * dv[2] - du[2] * dv[1]
        ny = du[2] * dv[0] - du[0] * dv[2]
        nz = du[0] * dv[1] - du[1] * dv[0]
        nn = math.sqrt(nx * nx + ny * ny + nz * nz)
        if nn == 0:
            raise DomainError(f"degenerate frame at ({u:.6g}, {v:.6g})")
        E = du[0] * du[0] + du[1] * du[1] + du[2] * du[2]
        F = du[0] * dv[0] + du[1] * dv[1] + du[2] * dv[2]
        G = dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]
        return SurfaceFrame(
            point=np.asarray(p, dtype=float),
            normal=np.array((nx / nn, ny / nn, nz / nn)),
            du=np.asarray(du, dtype=float),
            dv=np.asarray(dv, dtype=float),
            metric=(E, F, G),
        )

    def min_curvature_radius(self):
        """Smallest principal radius of curvature over the surface (inf for flat)."""
        return math.inf

    def _check_offset(self, distance):
        r = self.min_curvature_radius()
        if distance < 0 and -distance >= r:
            raise CurvatureViolation(
                f"offset {-distance:.3f} mm meets or exceeds the minimum curvature "
                f"radius {r:.3f} mm; shells would self-intersect"
            )

    def offset(self, distance):
        """Surface displaced by `distance` along the outward normal.

        Exact concentric surfaces for the analytic kinds; first-order
        (finite-difference normal derivatives) for biquadratic patches.
        """
        self._check_offset(distance)
        return _NumericOffset(self, distance)


class Plane(Surface):
    kind = "plane"

    def __init__(self, width, length, z0=0.0, thickness=1.5):
        super().__init__(thickness)
        if width <= 0 or length <= 0:
            raise InvariantViolation("plane extents must be > 0")
        self.width = width
        self.length = length
        self.z0 = z0

    def _eval(self, u, v):
        p = (u * self.width, v * self.length, self.z0)
        du = (self.width, 0.0, 0.0)
        dv = (0.0, self.length, 0.0)
        return p, du, dv

    def offset(self, distance):
        return Plane(self.width, self.length, self.z0 + distance, self.thickness)


class Cylinder(Surface):
    kind = "cylinder"

    def __init__(self, radius, arc_angle, length, thickness=1.5):
        super().__init__(thickness)
        if radius <= 0:
            raise InvariantViolation("cylinder radius must be > 0")
        if not 0 < arc_angle <= math.pi:
            raise InvariantViolation("arc_angle must lie in (0, pi]")
        if length <= 0:
            raise InvariantViolation("cylinder length must be > 0")
        self.radius = radius
        self.arc_angle = arc_angle
        self.length = length

    def _eval(self, u, v):
        th = self.arc_angle * (u - 0.5)
        r = self.radius
        st, ct = math.sin(th), math.cos(th)
        p = (r * st, v * self.length, r * ct)
        du = (r * self.arc_angle * ct, 0.0, -r * self.arc_angle * st)
        dv = (0.0, self.length, 0.0)
        return p, du, dv

    def min_curvature_radius(self):
        return self.radius

    def offset(self, distance):
        self._check_offset(distance)
        return Cylinder(self.radius + distance, self.arc_angle, self.length, self.thickness)


class SphereCap(Surface):
    kind = "sphere_cap"

    def __init__(self, radius, cap_angle, thickness=1.5):
        super().__init__(thickness)
        if radius <= 0:
            raise InvariantViolation("sphere radius must be > 0")
        if not 0 < cap_angle <= math.pi / 2:
            raise InvariantViolation("cap_angle must lie in (0, pi/2]")
        self.radius = radius
        self.cap_angle = cap_angle
        # half-extent of the inscribed square of the rim circle
        self.half_extent = radius * math.sin(cap_angle) / math.sqrt(2)

    def _eval(self, u, v):
        a = self.half_extent
        x = a * (2 * u - 1)
        y = a * (2 * v - 1)
        z2 = self.radius ** 2 - x * x - y * y
        z = math.sqrt(z2)
        p = (x, y, z)
        du = (2 * a, 0.0, -2 * a * x / z)
        dv = (0.0, 2 * a, -2 * a * y / z)
        return p, du, dv

    def min_curvature_radius(self):
        return self.radius

    def offset(self, distance):
        self._check_offset(distance)
        return SphereCap(self.radius + distance, self.cap_angle, self.thickness)


class Biquadratic(Surface):
    kind = "biquadratic"

    def __init__(self, grid, thickness=1.5):
        super().__init__(thickness)
        g = np.asarray(grid, dtype=float)
        if g.shape != (3, 3, 3):
            raise InvariantViolation("biquadratic grid must be 3x3 control points in 3D")
        for i in range(3):
            for j in range(3):
                for di, dj in ((0, 1), (1, 0)):
                    ii, jj = i + di, j + dj
                    if ii < 3 and jj < 3 and np.linalg.norm(g[i, j] - g[ii, jj]) < 1e-9:
                        raise InvariantViolation("adjacent control points coincide")
        self.grid = g

    @staticmethod
    def _bern(t):
        return np.array([(1 - t) ** 2, 2 * t * (1 - t), t * t])

    @staticmethod
    def _dbern(t):
        return np.array([2 * t - 2, 2 - 4 * t, 2 * t])

    def _eval(self, u, v):
        bu, bv = self._bern(u), self._bern(v)
        dbu, dbv = self._dbern(u), self._dbern(v)
        p = np.einsum("i,j,ijk->k", bu, bv, self.grid)
        du = np.einsum("i,j,ijk->k", dbu, bv, self.grid)
        dv = np.einsum("i,j,ijk->k", bu, dbv, self.grid)
        return p, du, dv

    def min_curvature_radius(self, samples=9):
        """Numeric bound from second differences on a sample grid."""
        r_min = math.inf
        eps = 1e-4
        for i in range(samples):
            for j in range(samples):
                u = (i + 0.5) / samples
                v = (j + 0.5) / samples
                f0 = self.evaluate(u, v)
                for (du_, dv_) in ((eps, 0.0), (0.0, eps)):
                    if not (0 <= u + du_ <= 1 and 0 <= v + dv_ <= 1):
                        continue
                    if not (0 <= u - du_ <= 1 and 0 <= v - dv_ <= 1):
                        continue
                    pp = self.evaluate(u + du_, v + dv_)
                    pm = self.evaluate(u - du_, v - dv_)
                    d2 = (pp.point - 2 * f0.point + pm.point) / (eps * eps)
                    t = f0.du if du_ else f0.dv
                    speed2 = float(t @ t)
                    kappa = abs(float(d2 @ f0.normal)) / speed2 if speed2 > 0 else 0.0
                    if kappa > 1e-12:
                        r_min = min(r_min, 1.0 / kappa)
        return r_min


class _NumericOffset(Surface):
    """Offset evaluator: point + normal*distance, tangents re-derived.

    Tangents include the normal-derivative correction estimated by central
    differences; used for biquadratic patches where no closed form exists.
    """

    def __init__(self, base, distance):
        super().__init__(base.thickness)
        self.kind = base.kind + "_offset"
        self.base = base
        self.distance = distance

    def _normal(self, u, v):
        return self.base.evaluate(u, v).normal

    def _eval(self, u, v):
        f = self.base.evaluate(u, v)
        p = f.point + self.distance * f.normal
        eps = 1e-6
        um, up = max(0.0, u - eps), min(1.0, u + eps)
        vm, vp = max(0.0, v - eps), min(1.0, v + eps)
        dndu = (self._normal(up, v) - self._normal(um, v)) / (up - um)
        dndv = (self._normal(u, vp) - self._normal(u, vm)) / (vp - vm)
        du = f.du + self.distance * dndu
        dv = f.dv + self.distance * dndv
        return p, du, dv

    def min_curvature_radius(self):
        r = self.base.min_curvature_radius()
        if math.isinf(r):
            return r
        return r + self.distance if self.distance > 0 else r - abs(self.distance)


def offset_shells(surface: Surface, layer_height, count, direction=1):
    """Conformal shell stack: count offsets spaced layer_height along the normal.

    direction +1 offsets outward (along the normal), -1 inward. Inward offsets
    against the curvature raise CurvatureViolation before any shell would
    self-intersect. count*layer_height must not exceed the substrate thickness.
    """
    if layer_height <= 0:
        raise InvariantViolation("layer_height must be > 0")
    if count < 1:
        raise InvariantViolation("count must be >= 1")
    if count * layer_height > surface.thickness + 1e-9:
        raise InvariantViolation(
            f"{count} shells x {layer_height} mm exceed thickness {surface.thickness} mm"
        )
    if direction not in (1, -1):
        raise InvariantViolation("direction must be +1 (outward) or -1 (inward)")
    max_off = count * layer_height
    if direction < 0:
        r = surface.min_curvature_radius()
        if max_off >= r:
            raise CurvatureViolation(
                f"inward offset {max_off:.3f} mm meets or exceeds the minimum "
                f"curvature radius {r:.3f} mm"
            )
    return [surface.offset(direction * (i + 1) * layer_height) for i in range(count)]


def surface_arc_length(surface: Surface, path):
    """Length of a (u, v) polyline on the surface, mm.

    Per segment: integral of sqrt(E u'^2 + 2F u'v' + G v'^2) with fixed
    5-point Gauss quadrature. Deterministic; error negligible at planner
    segment lengths.
    """
    total = 0.0
    for (u0, v0), (u1, v1) in zip(path, path[1:]):
        du_, dv_ = u1 - u0, v1 - v0
        seg = 0.0
        for t, w in _GAUSS5:
            fr = surface.evaluate(u0 + t * du_, v0 + t * dv_)
            E, F, G = fr.metric
            seg += w * math.sqrt(max(0.0, E * du_ * du_ + 2 * F * du_ * dv_ + G * dv_ * dv_))
        total += seg
    return total


def make_surface(kind, thickness=1.5, **kw) -> Surface:
    """Factory used by the job-config loader."""
    if kind == "plane":
        return Plane(kw["width"], kw["length"], kw.get("z0", 0.0), thickness)
    if kind == "cylinder":
        return Cylinder(kw["radius"], kw["arc_angle"], kw["length"], thickness)
    if kind == "sphere_cap":
        return SphereCap(kw["radius"], kw["cap_angle"], thickness)
    if kind == "biquadratic":
        return Biquadratic(kw["grid"], thickness)
    raise InvariantViolation(f"unknown surface kind '{kind}'")
