"""Per-hop forwarding engines.

Greedy forwarding uses the full unit-disk neighborhood; perimeter (face)
forwarding runs on the Gabriel subgraph with the right-hand rule, as in
GPSR.  The ITGR engine adds an intermediate-target list that is filled from
the forwarding node's shaded-area cache, and the GLR baseline keeps one
landmark per exact destination.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import PerimeterLoop
from .geometry import EPS_GEOM, Point, distance

TWO_PI = 2.0 * math.pi


class ForwardMode(enum.Enum):
    GREEDY = "greedy"
    PERIMETER = "perimeter"


class Status(enum.Enum):
    FORWARD = "forward"
    DELIVERED = "delivered"
    DROPPED = "dropped"
    UNDELIVERABLE = "undeliverable"


@dataclass
class PerimeterState:
    entry_point: Point
    face_point: Point
    first_edge: tuple | None = None
    prev_hop: int | None = None


@dataclass
class Packet:
    src: int
    dst: int
    ttl: int
    mode: ForwardMode = ForwardMode.GREEDY
    itgr_list: list = field(default_factory=list)
    local_min: Point | None = None
    peri: PerimeterState | None = None
    trace: list = field(default_factory=list)
    reached: set = field(default_factory=set)
    used_itgr_list: bool = False

    @property
    def target(self):
        return self.itgr_list[0] if self.itgr_list else self.dst


@dataclass(frozen=True)
class LandmarkMsg:
    to_src: int
    local_min: Point
    landmark: Point
    landmark_id: int
    target: int
    dst: int


@dataclass(frozen=True)
class ForwardAction:
    status: Status
    next_hop: int | None = None
    mode: ForwardMode | None = None


@dataclass(frozen=True)
class ProcessResult:
    status: Status
    next_hop: int | None = None
    mode: ForwardMode | None = None
    message: LandmarkMsg | None = None


def greedy_next_hop(t, u, target):
    """Closest unit-disk neighbor strictly nearer to ``target`` than ``u``, or None."""
    pos = t.positions
    tx, ty = target
    best = None
    best_d = math.hypot(pos[u][0] - tx, pos[u][1] - ty) - EPS_GEOM
    for v in t.udg_adj[u]:
        d = math.hypot(pos[v][0] - tx, pos[v][1] - ty)
        if d < best_d:
            best, best_d = v, d
    return best


def has_closer_neighbor(t, u, target):
    return greedy_next_hop(t, u, target) is not None


def _bearing(a, b):
    return math.atan2(b[1] - a[1], b[0] - a[0])


def right_hand_neighbor(t, u, ref):
    """First planar neighbor counterclockwise about ``u`` from the ray ``u->ref``.

    A neighbor lying exactly on the reference ray comes last, so the
    previous hop is only returned when it is the sole neighbor.
    """
    pos = t.positions
    base = _bearing(pos[u], ref)
    best, best_a = None, None
    for v in t.planar_adj[u]:
        a = (_bearing(pos[u], pos[v]) - base) % TWO_PI
        if a <= 1e-12:
            a = TWO_PI
        if best_a is None or a < best_a:
            best, best_a = v, a
    return best


def _segment_crossing(p1, p2, q1, q2):
    """Intersection point of closed segments p1p2 and q1q2, or None."""
    rx, ry = p2[0] - p1[0], p2[1] - p1[1]
    sx, sy = q2[0] - q1[0], q2[1] - q1[1]
    denom = rx * sy - ry * sx
    if abs(denom) <= EPS_GEOM:
        return None
    qpx, qpy = q1[0] - p1[0], q1[1] - p1[1]
    tp = (qpx * sy - qpy * sx) / denom
    tq = (qpx * ry - qpy * rx) / denom
    tol = 1e-12
    if -tol <= tp <= 1 + tol and -tol <= tq <= 1 + tol:
        return (p1[0] + tp * rx, p1[1] + tp * ry)
    return None


def perimeter_next_hop(t, u, pkt):
    """GPSR face-routing step at ``u`` toward the packet target.

    Raises :class:`PerimeterLoop` when the packet would traverse the first
    edge of its current face a second time.
    """
    ps = pkt.peri
    pos = t.positions
    tgt = pos[pkt.target]
    ref = tgt if ps.prev_hop is None else pos[ps.prev_hop]
    nxt = right_hand_neighbor(t, u, ref)
    if nxt is None:
        raise PerimeterLoop(f"node {u} has no planar neighbors")
    changed = ps.first_edge is None
    face_d = distance(ps.face_point, tgt)
    for _ in range(len(t.planar_adj[u])):
        x = _segment_crossing(pos[u], pos[nxt], ps.entry_point, tgt)
        if x is None:
            break
        d = distance(x, tgt)
        if d >= face_d - EPS_GEOM:
            break
        ps.face_point = Point(*x)
        face_d = d
        nxt = right_hand_neighbor(t, u, pos[nxt])
        changed = True
    if changed:
        ps.first_edge = (u, nxt)
    elif ps.first_edge == (u, nxt):
        raise PerimeterLoop(f"face tour returned to edge {ps.first_edge}")
    ps.prev_hop = u
    return nxt


def _enter_greedy(pkt):
    pkt.mode = ForwardMode.GREEDY
    pkt.peri = None


def _forward(t, u, pkt):
    """Greedy toward the current target, falling back to perimeter mode."""
    tgt_pos = t.positions[pkt.target]
    _enter_greedy(pkt)
    nxt = greedy_next_hop(t, u, tgt_pos)
    if nxt is not None:
        return ForwardAction(Status.FORWARD, nxt, ForwardMode.GREEDY)
    here = t.positions[u]
    pkt.local_min = here
    pkt.mode = ForwardMode.PERIMETER
    pkt.peri = PerimeterState(entry_point=here, face_point=here)
    try:
        nxt = perimeter_next_hop(t, u, pkt)
    except PerimeterLoop:
        return ForwardAction(Status.UNDELIVERABLE)
    return ForwardAction(Status.FORWARD, nxt, ForwardMode.PERIMETER)


def _prepend_chain(pkt, chain):
    if chain:
        pkt.itgr_list[:0] = chain


def _chain_exclusions(pkt):
    return pkt.reached | set(pkt.itgr_list) | {pkt.dst}


def itgr_send(t, u, pkt, cache) -> ForwardAction:
    """Send step run by the source and by every node forwarding in greedy mode."""
    if pkt.ttl <= 0:
        return ForwardAction(Status.DROPPED)
    if cache is not None and len(cache):
        target = pkt.target
        chain = cache.lookup_chain(t.positions[target], target, exclude=_chain_exclusions(pkt))
        _prepend_chain(pkt, chain)
    return _forward(t, u, pkt)


def gpsr_send(t, u, pkt) -> ForwardAction:
    return itgr_send(t, u, pkt, None)


def glr_send(t, u, pkt, glr_cache) -> ForwardAction:
    """GPSR plus an exact-destination landmark applied at the source only."""
    if pkt.ttl <= 0:
        return ForwardAction(Status.DROPPED)
    if glr_cache and u == pkt.src and len(pkt.trace) <= 1 and not pkt.itgr_list:
        lm = glr_cache.get((pkt.src, pkt.dst))
        if lm is not None and lm != u:
            pkt.itgr_list.append(lm)
    return _forward(t, u, pkt)


def _process(t, u, pkt, send):
    if u == pkt.dst:
        return ProcessResult(Status.DELIVERED)
    if pkt.ttl <= 0:
        return ProcessResult(Status.DROPPED)
    if pkt.itgr_list and pkt.itgr_list[0] == u:
        pkt.itgr_list.pop(0)
        pkt.reached.add(u)
        return _result(send(t, u, pkt))
    if pkt.mode is ForwardMode.GREEDY:
        return _result(send(t, u, pkt))
    target = pkt.target
    tgt_pos = t.positions[target]
    here = t.positions[u]
    if distance(here, tgt_pos) < distance(pkt.local_min, tgt_pos) - EPS_GEOM:
        msg = None
        if has_closer_neighbor(t, u, tgt_pos):
            msg = LandmarkMsg(pkt.src, pkt.local_min, here, u, target, pkt.dst)
        return _result(send(t, u, pkt), msg)
    try:
        nxt = perimeter_next_hop(t, u, pkt)
    except PerimeterLoop:
        return ProcessResult(Status.UNDELIVERABLE)
    return ProcessResult(Status.FORWARD, nxt, ForwardMode.PERIMETER)


def _result(action, msg=None):
    return ProcessResult(action.status, action.next_hop, action.mode, msg)


def itgr_process(t, u, pkt, cache) -> ProcessResult:
    """Receive step: deliver, pop a reached intermediate target, or keep forwarding."""
    return _process(t, u, pkt, lambda t_, u_, p_: itgr_send(t_, u_, p_, cache))


def gpsr_process(t, u, pkt) -> ProcessResult:
    return _process(t, u, pkt, lambda t_, u_, p_: itgr_send(t_, u_, p_, None))


def glr_process(t, u, pkt, glr_cache) -> ProcessResult:
    return _process(t, u, pkt, lambda t_, u_, p_: glr_send(t_, u_, p_, glr_cache))


def greedy_step(t, u, pkt) -> ProcessResult:
    """Plain greedy forwarding: a local minimum ends the packet."""
    if u == pkt.dst:
        return ProcessResult(Status.DELIVERED)
    if pkt.ttl <= 0:
        return ProcessResult(Status.DROPPED)
    nxt = greedy_next_hop(t, u, t.positions[pkt.dst])
    if nxt is None:
        return ProcessResult(Status.UNDELIVERABLE)
    return ProcessResult(Status.FORWARD, nxt, ForwardMode.GREEDY)


def deliver_landmark_msg(msg, caches) -> None:
    """Hand a landmark notification to the source's cache (out of band)."""
    caches[msg.to_src].insert_with_merge(msg.local_min, msg.landmark, msg.landmark_id)


def deliver_glr_msg(msg, glr_cache) -> None:
    """GLR learns only from detours on the leg aimed at the final destination."""
    if msg.target == msg.dst:
        glr_cache[(msg.to_src, msg.dst)] = msg.landmark_id
