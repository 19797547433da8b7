"""Planar predicates used by shaded-area routing.

All side tests go through the implicit line form ``a*x + b*y + c = 0`` so
that every decision in the router and the cache is made by the same
arithmetic.  Boundary handling is closed: a point on a line satisfies both
the "same side" and the "opposite side" variants of a condition.
"""

from __future__ import annotations

import enum
import math
from typing import TYPE_CHECKING, NamedTuple

from .errors import DegenerateLine, DegenerateSector

if TYPE_CHECKING:
    from .cache import ShadedEntry

EPS_GEOM = 1e-9
EPS_ANGLE = 1e-6


class _XY(NamedTuple):
    x: float
    y: float


class Point(_XY):
    """Planar location in meters."""

    __slots__ = ()

    def __new__(cls, x, y):
        x = float(x)
        y = float(y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite coordinate ({x}, {y})")
        return super().__new__(cls, x, y)

    def __repr__(self):
        return f"Point({self.x!r}, {self.y!r})"


class LineCoeffs(NamedTuple):
    a: float
    b: float
    c: float


class SideRelation(enum.Enum):
    SAME = "same"
    OPPOSITE = "opposite"
    BOUNDARY = "boundary"


class MergeCase(enum.Enum):
    DISJOINT = "disjoint"
    SAME_LM_NEW_COVERS_OLD = "same_lm_new_covers_old"
    SAME_LM_OLD_COVERS_NEW = "same_lm_old_covers_new"
    DIFF_LM_NEW_COVERS_OLD = "diff_lm_new_covers_old"
    DIFF_LM_OLD_COVERS_NEW = "diff_lm_old_covers_new"
    DIFF_LM_STRADDLE_KEEP_OLD = "diff_lm_straddle_keep_old"
    DIFF_LM_STRADDLE_SPLIT = "diff_lm_straddle_split"


def distance(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def line_through(a: Point, b: Point) -> LineCoeffs:
    """Line through ``a`` and ``b``, oriented from ``a`` to ``b``.

    >>> line_through(Point(1, 1), Point(3, 2))
    LineCoeffs(a=1.0, b=-2.0, c=1.0)
    """
    if distance(a, b) <= EPS_GEOM:
        raise DegenerateLine(f"coincident points {a} and {b}")
    return LineCoeffs(b[1] - a[1], -(b[0] - a[0]), b[0] * a[1] - a[0] * b[1])


def side_value(line: LineCoeffs, q) -> float:
    return line.a * q[0] + line.b * q[1] + line.c


def relate_sides(line: LineCoeffs, q1, q2) -> SideRelation:
    v1 = side_value(line, q1)
    v2 = side_value(line, q2)
    if abs(v1) <= EPS_GEOM or abs(v2) <= EPS_GEOM:
        return SideRelation.BOUNDARY
    if v1 * v2 < -EPS_GEOM * EPS_GEOM:
        return SideRelation.OPPOSITE
    return SideRelation.SAME


def sector_angle(s: Point, p: Point, b: Point) -> float:
    """Unsigned angle between rays ``s->p`` and ``s->b`` in [0, pi]."""
    ux, uy = p[0] - s[0], p[1] - s[1]
    vx, vy = b[0] - s[0], b[1] - s[1]
    return abs(math.atan2(ux * vy - uy * vx, ux * vx + uy * vy))


def check_sector(s: Point, p: Point, b: Point) -> None:
    """Raise :class:`DegenerateSector` unless ``<s, p, b>`` spans a usable sector."""
    if distance(s, p) <= EPS_GEOM or distance(s, b) <= EPS_GEOM or distance(p, b) <= EPS_GEOM:
        raise DegenerateSector("sector points are not pairwise distinct")
    if abs(side_value(line_through(s, b), p)) <= EPS_GEOM:
        raise DegenerateSector("source, local minimum and landmark are collinear")
    if sector_angle(s, p, b) >= math.pi - EPS_ANGLE:
        raise DegenerateSector("sector is not narrower than a half-plane")


def in_shaded_area(s: Point, p: Point, b: Point, d) -> bool:
    """True when ``d`` lies in the area shaded from ``s`` by local minimum ``p``
    and landmark ``b``.

    The three closed conditions are: ``d`` is not separated from ``p`` by line
    SB, not separated from ``b`` by line SP, and not on the same side of line
    BP as ``s``.
    """
    if distance(s, p) <= EPS_GEOM or distance(s, b) <= EPS_GEOM or distance(p, b) <= EPS_GEOM:
        raise DegenerateSector("sector points are not pairwise distinct")
    sb = line_through(s, b)
    if abs(side_value(sb, p)) <= EPS_GEOM:
        raise DegenerateSector("source, local minimum and landmark are collinear")
    if relate_sides(sb, d, p) is SideRelation.OPPOSITE:
        return False
    if relate_sides(line_through(s, p), d, b) is SideRelation.OPPOSITE:
        return False
    return relate_sides(line_through(b, p), d, s) is not SideRelation.SAME


def in_cone(s: Point, p: Point, b: Point, q) -> bool:
    """True when ray ``s->q`` lies in the closed angular sector spanned by
    rays ``s->p`` and ``s->b`` (the narrower one)."""
    if relate_sides(line_through(s, b), q, p) is SideRelation.OPPOSITE:
        return False
    return relate_sides(line_through(s, p), q, b) is not SideRelation.OPPOSITE


def in_open_cone(s: Point, p: Point, b: Point, q) -> bool:
    """Like :func:`in_cone` but excludes the two bounding rays."""
    if relate_sides(line_through(s, b), q, p) is not SideRelation.SAME:
        return False
    return relate_sides(line_through(s, p), q, b) is SideRelation.SAME


def classify_overlap(s: Point, old: ShadedEntry, new: ShadedEntry) -> MergeCase:
    """Decide how ``new`` combines with ``old`` in the cache of source ``s``.

    Containment is judged on the angular sectors about ``s`` using closed
    side tests.  When both containments hold (identical sectors) the old
    entry wins.  Sectors that only share a bounding ray are disjoint.
    """
    for e in (old, new):
        check_sector(s, e.p, e.b)

    if old.b == new.b:
        if in_cone(s, old.p, old.b, new.p):
            return MergeCase.SAME_LM_OLD_COVERS_NEW
        if in_cone(s, new.p, new.b, old.p):
            return MergeCase.SAME_LM_NEW_COVERS_OLD
        return MergeCase.DISJOINT

    b_in_old = in_cone(s, old.p, old.b, new.b)
    p_in_old = in_cone(s, old.p, old.b, new.p)
    if b_in_old and p_in_old:
        return MergeCase.DIFF_LM_OLD_COVERS_NEW
    ob_in_new = in_cone(s, new.p, new.b, old.b)
    op_in_new = in_cone(s, new.p, new.b, old.p)
    if ob_in_new and op_in_new:
        return MergeCase.DIFF_LM_NEW_COVERS_OLD
    if not (
        in_open_cone(s, old.p, old.b, new.b)
        or in_open_cone(s, old.p, old.b, new.p)
        or in_open_cone(s, new.p, new.b, old.b)
        or in_open_cone(s, new.p, new.b, old.p)
    ):
        return MergeCase.DISJOINT
    if p_in_old and (ob_in_new or op_in_new):
        # new landmark sticks out of the old sector
        return MergeCase.DIFF_LM_STRADDLE_KEEP_OLD
    if b_in_old:
        if op_in_new:
            return MergeCase.DIFF_LM_STRADDLE_SPLIT
        if ob_in_new:
            return MergeCase.DIFF_LM_STRADDLE_KEEP_OLD
    return MergeCase.DISJOINT
