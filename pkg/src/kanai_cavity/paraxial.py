"""ABCD ray-matrix algebra for the lens-in-a-plane-cavity geometry.

The resonator is a thin lens of focal length ``f`` placed between two flat
mirrors, at distance ``l1`` from the left mirror and ``l2`` from the right
one.  The round-trip reference plane is the left mirror; the corresponding
ray matrix has equal diagonal elements (``a = d``), and the cavity is stable
when ``|a| <= 1``, in which case ``theta = arccos(a)`` is the rotation angle
the transverse ray state advances by per round trip.

All lengths are expressed in units of ``f`` by default (``f = 1``); a
geometry can carry a physical focal length instead, in which case ``b`` has
length units and ``c`` inverse-length units.
"""

import math

import numpy as np
from scipy import ndimage

from .errors import ContractViolationError, ValidationError

#: |a - d| tolerance accepted when classifying a matrix as canonical.
CANONICAL_TOL = 1e-9
#: Half-width of the band around |a| = 1 classified as marginal.
MARGINAL_TOL = 1e-12


class AbcdMatrix:
    """2x2 real unimodular ray-transfer matrix [[a, b], [c, d]]."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d):
        self.a = float(a)
        self.b = float(b)
        self.c = float(c)
        self.d = float(d)

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_array(cls, m):
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise ValidationError("ray matrix must be 2x2")
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def as_array(self):
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def compose(self, other):
        """Matrix product self @ other (other acts first on the ray)."""
        return AbcdMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def __matmul__(self, other):
        return self.compose(other)

    def apply(self, x, xp):
        """Map a ray state (x, x'); vectorized over arrays."""
        return self.a * x + self.b * xp, self.c * x + self.d * xp

    def is_canonical(self, tol=CANONICAL_TOL):
        """True when a = d within ``tol`` (flat-end-mirror round trip)."""
        return abs(self.a - self.d) <= tol

    def __repr__(self):
        return "AbcdMatrix(a=%r, b=%r, c=%r, d=%r)" % (self.a, self.b, self.c, self.d)


def elementary(kind, value=None):
    """Elementary paraxial element matrix.

    ``kind`` is one of ``"propagation"`` (value = distance d >= 0),
    ``"thin_lens"`` (value = focal length f != 0), or ``"flat_mirror"``
    (no value; identity in the transverse plane).
    """
    if kind == "propagation":
        if value is None or value < 0.0:
            raise ValidationError("propagation distance must be >= 0")
        return AbcdMatrix(1.0, float(value), 0.0, 1.0)
    if kind == "thin_lens":
        if value is None or value == 0.0:
            raise ValidationError("thin lens requires a nonzero focal length")
        return AbcdMatrix(1.0, 0.0, -1.0 / float(value), 1.0)
    if kind == "flat_mirror":
        return AbcdMatrix.identity()
    raise ValidationError("unknown elementary element %r" % (kind,))


def propagation(d):
    """Free propagation over distance ``d``."""
    return elementary("propagation", d)


def thin_lens(f):
    """Thin lens of focal length ``f``."""
    return elementary("thin_lens", f)


def flat_mirror():
    """Flat mirror (identity on the transverse state)."""
    return elementary("flat_mirror")


class ResonatorGeometry:
    """Lens-in-a-plane-cavity geometry: arm lengths l1, l2 and focal length f.

    ``l1`` is measured from the left (reference) mirror to the lens and
    ``l2`` from the lens to the right mirror.  ``s1 = l1/f`` and ``s2 = l2/f``
    are the scaled arm lengths used by the closed-form matrix elements.
    """

    __slots__ = ("l1", "l2", "f")

    def __init__(self, l1, l2, f=1.0):
        l1, l2, f = float(l1), float(l2), float(f)
        if not (math.isfinite(l1) and math.isfinite(l2) and math.isfinite(f)):
            raise ValidationError("geometry lengths must be finite")
        if f <= 0.0:
            raise ValidationError("focal length must be > 0, got %r" % f)
        if l1 < 0.0 or l2 < 0.0:
            raise ValidationError("arm lengths must be >= 0")
        self.l1 = l1
        self.l2 = l2
        self.f = f

    @property
    def s1(self):
        return self.l1 / self.f

    @property
    def s2(self):
        return self.l2 / self.f

    def with_positions(self, l1, l2):
        """Same focal length, new arm lengths."""
        return ResonatorGeometry(l1, l2, self.f)

    def scaled(self, f_new):
        """Same shape (s1, s2) expressed with a different focal length."""
        ratio = float(f_new) / self.f
        return ResonatorGeometry(self.l1 * ratio, self.l2 * ratio, f_new)

    def __repr__(self):
        return "ResonatorGeometry(l1=%r, l2=%r, f=%r)" % (self.l1, self.l2, self.f)


def half_trip_matrix(geom):
    """One-way pass left mirror -> lens -> right mirror: P(l2) Lens P(l1)."""
    return propagation(geom.l2) @ thin_lens(geom.f) @ propagation(geom.l1)


def _reverse_half_trip_matrix(geom):
    """One-way pass right mirror -> lens -> left mirror: P(l1) Lens P(l2)."""
    return propagation(geom.l1) @ thin_lens(geom.f) @ propagation(geom.l2)


def round_trip_matrix(geom, plane="left_mirror"):
    """Round-trip ray matrix referenced at a flat end mirror.

    For the left mirror the trip is P(l1) Lens P(l2) . P(l2) Lens P(l1)
    (rightmost factor acts first); for the right mirror the two half trips
    compose in the opposite order.  Both choices give a canonical matrix
    (a = d) with the same trace.
    """
    forward = half_trip_matrix(geom)
    backward = _reverse_half_trip_matrix(geom)
    if plane == "left_mirror":
        return backward @ forward
    if plane == "right_mirror":
        return forward @ backward
    raise ValidationError("unknown reference plane %r" % (plane,))


def round_trip_elements(s1, s2):
    """Closed-form (a, b, c) of the left-mirror round trip, in units of f.

    With h = s1 + s2 - s1*s2 (the scaled half-trip b element):
    a = d = 1 - 2h, b = 2 (1 - s1) h, c = -2 (1 - s2).
    Vectorized over s1, s2.
    """
    h = s1 + s2 - s1 * s2
    a = 1.0 - 2.0 * h
    b = 2.0 * (1.0 - s1) * h
    c = -2.0 * (1.0 - s2)
    return a, b, c


def right_mirror_elements(s1, s2):
    """Closed-form (a, b, c) of the right-mirror round trip, in units of f."""
    h = s1 + s2 - s1 * s2
    a = 1.0 - 2.0 * h
    b = 2.0 * (1.0 - s2) * h
    c = -2.0 * (1.0 - s1)
    return a, b, c


class StabilityInfo:
    """Stability classification of a canonical round-trip matrix.

    ``stable`` is |a| <= 1; ``marginal`` flags the boundary |a| = 1 where
    sin(theta) = 0 and the rotation-angle formulas degenerate.  ``theta`` is
    arccos(a) in [0, pi] for stable matrices and NaN otherwise.
    """

    __slots__ = ("stable", "marginal", "theta", "a")

    def __init__(self, stable, marginal, theta, a):
        self.stable = stable
        self.marginal = marginal
        self.theta = theta
        self.a = a

    def __repr__(self):
        return "StabilityInfo(stable=%r, marginal=%r, theta=%r, a=%r)" % (
            self.stable, self.marginal, self.theta, self.a)


def stability(m, tol=CANONICAL_TOL):
    """Classify a canonical (a = d) ray matrix.

    Raises :class:`ContractViolationError` when the matrix is not canonical.
    """
    if not m.is_canonical(tol):
        raise ContractViolationError(
            "stability classification needs a canonical matrix (a = d); "
            "got a=%r, d=%r" % (m.a, m.d))
    a = m.a
    stable = abs(a) <= 1.0
    marginal = abs(abs(a) - 1.0) <= MARGINAL_TOL
    theta = math.acos(min(1.0, max(-1.0, a))) if stable else math.nan
    return StabilityInfo(stable, marginal, theta, a)


class StabilityMap:
    """Raster of the stability classification over the (l1/f, l2/f) plane."""

    def __init__(self, l1_values, l2_values, a_values, stable, theta):
        self.l1_values = l1_values
        self.l2_values = l2_values
        self.a_values = a_values
        self.stable = stable
        self.theta = theta

    def count_stable_domains(self):
        """Number of 4-connected components of the strictly stable set.

        Strict interior |a| < 1 is used so that isolated marginal points on
        the |a| = 1 boundary cannot bridge two domains.
        """
        interior = np.abs(self.a_values) < 1.0
        structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
        _, count = ndimage.label(interior, structure=structure)
        return count

    def rows(self):
        """Yield (l1/f, l2/f, stable, theta) rows, l1 outer, l2 inner."""
        for i, s1 in enumerate(self.l1_values):
            for j, s2 in enumerate(self.l2_values):
                yield (s1, s2, int(self.stable[i, j]), self.theta[i, j])


def stability_map(l1_range=(0.0, 4.0), l2_range=(0.0, 4.0), resolution=400):
    """Evaluate the stability raster on a resolution x resolution grid.

    The first index runs over l1/f, the second over l2/f.  The stable set of
    this geometry consists of exactly two connected domains.
    """
    resolution = int(resolution)
    if resolution < 1:
        raise ValidationError("resolution must be >= 1")
    lo1, hi1 = map(float, l1_range)
    lo2, hi2 = map(float, l2_range)
    if not (hi1 > lo1 and hi2 > lo2) and resolution > 1:
        raise ValidationError("raster ranges must be nonempty intervals")
    l1_values = np.linspace(lo1, hi1, resolution)
    l2_values = np.linspace(lo2, hi2, resolution)
    s1 = l1_values[:, None]
    s2 = l2_values[None, :]
    a, _, _ = round_trip_elements(s1, s2)
    stable = np.abs(a) <= 1.0
    theta = np.where(stable, np.arccos(np.clip(a, -1.0, 1.0)), np.nan)
    return StabilityMap(l1_values, l2_values, a, stable, theta)
