"""Per-node store of shaded areas learned from detours.

Each entry ``<p, b>`` pairs the location of a local minimum with a landmark
node; together with the owner's location they span a sector of
destinations that are better reached through the landmark.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import DegenerateSector
from .geometry import MergeCase, Point, check_sector, classify_overlap, distance, in_cone, in_shaded_area

DEFAULT_CAP = 64
MAX_CHAIN = 8

_OLD_COVERS = (MergeCase.SAME_LM_OLD_COVERS_NEW, MergeCase.DIFF_LM_OLD_COVERS_NEW)
_NEW_COVERS = (MergeCase.SAME_LM_NEW_COVERS_OLD, MergeCase.DIFF_LM_NEW_COVERS_OLD)


@dataclass(frozen=True)
class ShadedEntry:
    p: Point
    b: Point
    b_node: int


@dataclass
class _Slot:
    entry: ShadedEntry
    last_hit: int


class Cache:
    """Shaded-area entries owned by one node.

    ``version`` increases whenever the entry set changes; callers use it to
    detect that further sends cannot behave differently.
    """

    def __init__(self, owner, owner_loc, cap=DEFAULT_CAP):
        self.owner = owner
        self.owner_loc = Point(*owner_loc)
        self.cap = cap
        self._slots: list[_Slot] = []
        self._clock = 0
        self.version = 0
        self.rejected = 0

    def __len__(self):
        return len(self._slots)

    @property
    def entries(self):
        return [s.entry for s in self._slots]

    def _tick(self):
        self._clock += 1
        return self._clock

    def _covering(self, q):
        s = self.owner_loc
        return [slot for slot in self._slots if in_shaded_area(s, slot.entry.p, slot.entry.b, q)]

    def coverage_contains(self, q) -> bool:
        s = self.owner_loc
        return any(in_shaded_area(s, e.p, e.b, q) for e in self.entries)

    def lookup_chain(self, target, target_id, exclude=()) -> list:
        """Landmarks to visit before ``target``, outermost first.

        Entries whose landmark is the current target, or appears in
        ``exclude``, do not count as covering it.  Resolution stops at an
        uncovered point, a repeated landmark, or after ``MAX_CHAIN`` steps.
        """
        chain = []
        seen = {target_id}
        current, current_id = target, target_id
        for _ in range(MAX_CHAIN):
            hits = [
                slot for slot in self._covering(current)
                if slot.entry.b_node != current_id and slot.entry.b_node not in exclude
            ]
            if not hits:
                break
            best = min(hits, key=lambda sl: (distance(self.owner_loc, sl.entry.b), sl.entry.b_node))
            if best.entry.b_node in seen:
                break
            best.last_hit = self._tick()
            seen.add(best.entry.b_node)
            chain.append(best.entry.b_node)
            current, current_id = best.entry.b, best.entry.b_node
        chain.reverse()
        return chain

    def insert_with_merge(self, p, b, b_node) -> None:
        entry = ShadedEntry(Point(*p), Point(*b), int(b_node))
        try:
            check_sector(self.owner_loc, entry.p, entry.b)
        except DegenerateSector:
            self.rejected += 1
            return
        before = self.entries
        self._merge(entry, depth=0)
        if self.entries != before:
            self.version += 1

    def _merge(self, new, depth):
        """Apply the merge cases in priority order over all entries.

        Covering relations are resolved first (new discarded, or covered
        entries dropped); only then does the first straddling entry reshape
        the sectors.  Synthesized entries re-enter once; deeper ones only
        pass the covering checks.
        """
        s = self.owner_loc
        cases = [classify_overlap(s, sl.entry, new) for sl in self._slots]
        if any(c in _OLD_COVERS for c in cases):
            return
        keep = [(sl, c) for sl, c in zip(self._slots, cases) if c not in _NEW_COVERS]
        self._slots = [sl for sl, _ in keep]
        if depth < 2:
            for sl, case in keep:
                old = sl.entry
                if case is MergeCase.DIFF_LM_STRADDLE_KEEP_OLD:
                    self._spawn(_outside_slice(s, old, new), depth)
                    return
                if case is MergeCase.DIFF_LM_STRADDLE_SPLIT:
                    self._slots.remove(sl)
                    self._spawn(ShadedEntry(new.b, old.b, old.b_node), depth)
                    self._spawn(new, depth)
                    return
        self._append(new)

    def _spawn(self, entry, depth):
        try:
            check_sector(self.owner_loc, entry.p, entry.b)
        except DegenerateSector:
            self.rejected += 1
            return
        self._merge(entry, depth + 1)

    def _append(self, entry):
        if any(sl.entry == entry for sl in self._slots):
            return
        if len(self._slots) >= self.cap:
            victim = min(range(len(self._slots)), key=lambda k: self._slots[k].last_hit)
            del self._slots[victim]
        self._slots.append(_Slot(entry, self._tick()))

    def to_json(self):
        return {
            "owner": self.owner,
            "entries": [
                {"p": [e.p.x, e.p.y], "b": [e.b.x, e.b.y], "b_node": e.b_node} for e in self.entries
            ],
        }

    def dumps(self):
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, doc, owner_loc, cap=DEFAULT_CAP):
        c = cls(doc["owner"], owner_loc, cap)
        for rec in doc["entries"]:
            c._append(ShadedEntry(Point(*rec["p"]), Point(*rec["b"]), int(rec["b_node"])))
        return c


def _outside_slice(s, old, new):
    """Part of ``new``'s sector outside ``old``, as an entry with a real landmark.

    The slice is bounded by the old ray that ``new`` crosses and by the
    endpoint of ``new`` that lies outside ``old``.
    """
    crossed_b = in_cone(s, new.p, new.b, old.b)
    if not in_cone(s, old.p, old.b, new.b):
        # landmark of new is outside old: slice is <crossed ray, new.b>
        return ShadedEntry(old.b if crossed_b else old.p, new.b, new.b_node)
    # new.b inside old and new.p beyond old.b
    return ShadedEntry(new.p, old.b, old.b_node)


class CacheStore:
    """Lazily created caches keyed by owner node id."""

    def __init__(self, positions, cap=DEFAULT_CAP):
        self._positions = positions
        self.cap = cap
        self._caches: dict[int, Cache] = {}

    def get(self, owner):
        return self._caches.get(owner)

    def __getitem__(self, owner):
        c = self._caches.get(owner)
        if c is None:
            c = self._caches[owner] = Cache(owner, self._positions[owner], self.cap)
        return c

    def __iter__(self):
        return iter(self._caches.values())

    def nodes_with_entries(self):
        return sum(1 for c in self._caches.values() if len(c))

    def total_entries(self):
        return sum(len(c) for c in self._caches.values())

    def version(self, owner):
        c = self._caches.get(owner)
        return c.version if c is not None else 0
