"""Static node fields: generation, unit-disk adjacency and Gabriel planarization.

Fields are sampled with numpy's PCG64 generator seeded from the 64-bit
``GenConfig.seed``.  Whole fields are redrawn until the unit-disk graph is
connected, so a given configuration always produces the same topology.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import ConfigError, GenerationFailed, UnknownNode
from .geometry import Point

# candidate batch factor when sampling around holes
_OVERSAMPLE = 1.5


@dataclass(frozen=True)
class DiscHole:
    center: Point
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ConfigError("holes.r", "disc radius must be positive")

    def contains(self, x, y):
        """Strict interior test; works elementwise on numpy arrays."""
        dx = x - self.center.x
        dy = y - self.center.y
        return dx * dx + dy * dy < self.r * self.r

    def to_json(self):
        return {"type": "disc", "center": [self.center.x, self.center.y], "r": self.r}


@dataclass(frozen=True)
class PolygonHole:
    vertices: tuple

    def __post_init__(self):
        vs = self.vertices
        if len(vs) < 3:
            raise ConfigError("holes.vertices", "polygon needs at least 3 vertices")
        signs = set()
        n = len(vs)
        for i in range(n):
            a, b, c = vs[i], vs[(i + 1) % n], vs[(i + 2) % n]
            cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x)
            if cross == 0:
                raise ConfigError("holes.vertices", "polygon has collinear consecutive vertices")
            signs.add(cross > 0)
        # convex turns plus a total winding of one turn rule out self-intersection
        winding = 0.0
        for i in range(n):
            a, b, c = vs[i], vs[(i + 1) % n], vs[(i + 2) % n]
            t1 = math.atan2(b.y - a.y, b.x - a.x)
            t2 = math.atan2(c.y - b.y, c.x - b.x)
            winding += (t2 - t1 + math.pi) % (2 * math.pi) - math.pi
        if len(signs) != 1 or abs(abs(winding) - 2 * math.pi) > 1e-6:
            raise ConfigError("holes.vertices", "polygon must be simple and convex")

    @property
    def _ccw(self):
        a, b, c = self.vertices[:3]
        return (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x) > 0

    def contains(self, x, y):
        vs = self.vertices
        sign = 1.0 if self._ccw else -1.0
        inside = True
        for i in range(len(vs)):
            a, b = vs[i], vs[(i + 1) % len(vs)]
            cross = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x)
            inside = inside & (sign * cross > 0)
        return inside

    def to_json(self):
        return {"type": "polygon", "vertices": [[v.x, v.y] for v in self.vertices]}


def hole_from_json(doc):
    kind = doc.get("type")
    if kind == "disc":
        try:
            cx, cy = doc["center"]
            return DiscHole(Point(cx, cy), float(doc["r"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("holes", f"bad disc hole: {exc}") from None
    if kind == "polygon":
        try:
            verts = tuple(Point(x, y) for x, y in doc["vertices"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("holes", f"bad polygon hole: {exc}") from None
        return PolygonHole(verts)
    raise ConfigError("holes.type", f"unknown hole type {kind!r}")


@dataclass(frozen=True)
class GenConfig:
    area_w: float = 400.0
    area_h: float = 400.0
    n_nodes: int = 150
    radius: float = 40.0
    holes: tuple = ()
    seed: int = 0
    max_rejects: int = 100_000

    def __post_init__(self):
        for name in ("area_w", "area_h", "radius"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(name, "must be a positive number")
        if not isinstance(self.n_nodes, int) or self.n_nodes < 2:
            raise ConfigError("n_nodes", "must be an integer >= 2")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if not isinstance(self.max_rejects, int) or self.max_rejects < 1:
            raise ConfigError("max_rejects", "must be an integer >= 1")

    @classmethod
    def from_json(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("config", "expected a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        kw = dict(doc)
        kw["holes"] = tuple(hole_from_json(h) for h in doc.get("holes", []))
        return cls(**kw)

    def to_json(self):
        return {
            "area_w": self.area_w,
            "area_h": self.area_h,
            "n_nodes": self.n_nodes,
            "radius": self.radius,
            "holes": [h.to_json() for h in self.holes],
            "seed": self.seed,
            "max_rejects": self.max_rejects,
        }


@dataclass(frozen=True, eq=False)
class Topology:
    """Immutable node field with unit-disk and Gabriel adjacency.

    Adjacency lists are tuples sorted by node id.
    """

    positions: tuple
    radius: float
    udg_adj: tuple
    planar_adj: tuple
    holes: tuple = ()
    area: tuple | None = field(default=None)

    def __len__(self):
        return len(self.positions)

    @property
    def n(self):
        return len(self.positions)

    def edges(self, planar=False):
        adj = self.planar_adj if planar else self.udg_adj
        return [(u, v) for u, nbrs in enumerate(adj) for v in nbrs if u < v]

    def to_json(self):
        return {
            "radius": self.radius,
            "nodes": [{"id": i, "x": p.x, "y": p.y} for i, p in enumerate(self.positions)],
            "holes": [h.to_json() for h in self.holes],
        }

    def same_as(self, other):
        return (
            self.positions == other.positions
            and self.radius == other.radius
            and self.udg_adj == other.udg_adj
            and self.planar_adj == other.planar_adj
        )


def _udg_lists(xs, ys, radius):
    dx = xs[:, None] - xs[None, :]
    dy = ys[:, None] - ys[None, :]
    m = dx * dx + dy * dy <= radius * radius
    np.fill_diagonal(m, False)
    return m


def build_topology(points, radius, holes=(), area=None, planarize=True):
    """Assemble a :class:`Topology` from explicit node locations."""
    pts = tuple(p if isinstance(p, Point) else Point(*p) for p in points)
    if not radius > 0:
        raise ConfigError("radius", "must be positive")
    if pts:
        m = _udg_lists(np.array([p.x for p in pts]), np.array([p.y for p in pts]), float(radius))
        adj = tuple(tuple(int(v) for v in np.flatnonzero(row)) for row in m)
    else:
        adj = ()
    t = Topology(positions=pts, radius=float(radius), udg_adj=adj, planar_adj=adj,
                 holes=tuple(holes), area=area)
    return planarize_gabriel(t) if planarize else t


def planarize_gabriel(t: Topology) -> Topology:
    """Keep edge (u, v) unless some w lies strictly inside the disc on diameter uv."""
    pos = t.positions
    keep = [[] for _ in pos]
    for u, nbrs in enumerate(t.udg_adj):
        ux, uy = pos[u]
        for v in nbrs:
            if v <= u:
                continue
            vx, vy = pos[v]
            ok = True
            for w in nbrs:
                if w == v:
                    continue
                wx, wy = pos[w]
                # w strictly inside the diameter disc iff angle uwv is obtuse
                if (ux - wx) * (vx - wx) + (uy - wy) * (vy - wy) < 0:
                    ok = False
                    break
            if ok:
                keep[u].append(v)
                keep[v].append(u)
    planar = tuple(tuple(sorted(k)) for k in keep)
    return replace(t, planar_adj=planar)


def is_connected(t: Topology) -> bool:
    if t.n <= 1:
        return True
    seen = [False] * t.n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for v in t.udg_adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == t.n


def neighbors(t: Topology, u: int, planar: bool = False) -> list:
    if not (isinstance(u, (int, np.integer)) and 0 <= u < t.n):
        raise UnknownNode(f"unknown node {u!r}")
    adj = t.planar_adj if planar else t.udg_adj
    return list(adj[u])


def _sample_field(rng, cfg):
    n = cfg.n_nodes
    xs = np.empty(0)
    ys = np.empty(0)
    while len(xs) < n:
        k = max(int((n - len(xs)) * _OVERSAMPLE), 16)
        cx = rng.uniform(0.0, cfg.area_w, k)
        cy = rng.uniform(0.0, cfg.area_h, k)
        ok = np.ones(k, dtype=bool)
        for h in cfg.holes:
            ok &= ~h.contains(cx, cy)
        xs = np.concatenate([xs, cx[ok]])
        ys = np.concatenate([ys, cy[ok]])
    return xs[:n], ys[:n]


def generate(cfg: GenConfig) -> Topology:
    """Draw ``cfg.n_nodes`` points outside the holes until the field is connected.

    Raises :class:`GenerationFailed` after ``cfg.max_rejects`` disconnected
    draws.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    for _ in range(cfg.max_rejects):
        xs, ys = _sample_field(rng, cfg)
        m = _udg_lists(xs, ys, cfg.radius)
        if not m.any(axis=1).all():
            continue
        ncomp, _ = connected_components(m, directed=False)
        if ncomp != 1:
            continue
        pts = [Point(x, y) for x, y in zip(xs.tolist(), ys.tolist())]
        return build_topology(pts, cfg.radius, cfg.holes, area=(cfg.area_w, cfg.area_h))
    raise GenerationFailed(
        f"no connected field after {cfg.max_rejects} draws (seed {cfg.seed})", seed=cfg.seed
    )


def topology_from_json(doc) -> Topology:
    """Load and validate a topology document ``{radius, nodes, holes}``."""
    if not isinstance(doc, dict):
        raise ConfigError("topology", "expected a JSON object")
    try:
        radius = float(doc["radius"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("radius", "missing or not a number") from None
    if not (math.isfinite(radius) and radius > 0):
        raise ConfigError("radius", "must be a positive number")
    nodes = doc.get("nodes")
    if not isinstance(nodes, list):
        raise ConfigError("nodes", "expected a list")
    by_id = {}
    for rec in nodes:
        try:
            nid = rec["id"]
            p = Point(rec["x"], rec["y"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("nodes", f"bad node record {rec!r}: {exc}") from None
        if not isinstance(nid, int) or nid < 0 or nid in by_id:
            raise ConfigError("nodes.id", f"ids must be unique non-negative integers, got {nid!r}")
        by_id[nid] = p
    if sorted(by_id) != list(range(len(by_id))):
        raise ConfigError("nodes.id", "ids must be dense 0..N-1")
    holes = tuple(hole_from_json(h) for h in doc.get("holes", []))
    pts = [by_id[i] for i in range(len(by_id))]
    for i, p in enumerate(pts):
        for h in holes:
            if h.contains(p.x, p.y):
                raise ConfigError("nodes", f"node {i} lies inside a hole")
    return build_topology(pts, radius, holes)


def load_topology(path) -> Topology:
    with open(path) as fh:
        return topology_from_json(json.load(fh))


def save_topology(t: Topology, path) -> None:
    with open(path, "w") as fh:
        json.dump(t.to_json(), fh, indent=1)
        fh.write("\n")
