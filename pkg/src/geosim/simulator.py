"""Experiment driver: route workloads under each protocol and aggregate metrics.

Seeds for trials are derived from the master seed with numpy's
``SeedSequence``: ``SeedSequence(master_seed, spawn_key=(n_nodes, trial, k))``
where ``k = 0`` seeds topology generation and ``k = 1`` the pair sampling.
The first 64-bit word of ``generate_state`` is used as the seed.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import routing
from .cache import DEFAULT_CAP, CacheStore
from .errors import ConfigError, GenerationFailed
from .geometry import distance
from .routing import ForwardMode, Packet, Status
from .topology import GenConfig, Topology, generate, hole_from_json


class Protocol(enum.Enum):
    GREEDY = "greedy"
    GPSR = "gpsr"
    ITGR = "itgr"
    GLR = "glr"

    @classmethod
    def parse(cls, name):
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ConfigError("protocols", f"unknown protocol {name!r}") from None


PROTOCOL_ORDER = [Protocol.GREEDY, Protocol.GPSR, Protocol.ITGR, Protocol.GLR]


@dataclass(frozen=True)
class PathRecord:
    src: int
    dst: int
    protocol: Protocol
    status: Status
    hops: int
    length: float
    used_itgr_list: bool
    trace: tuple
    modes: tuple = ()

    @property
    def delivered(self):
        return self.status is Status.DELIVERED

    @property
    def type2(self):
        return self.used_itgr_list


class ProtocolState:
    """Mutable learning state for one protocol on one topology."""

    def __init__(self, topology, protocol, ttl=None, cap=DEFAULT_CAP):
        self.topology = topology
        self.protocol = Protocol(protocol)
        self.ttl = ttl if ttl is not None else 4 * topology.n
        self.caches = CacheStore(topology.positions, cap)
        self.glr = {}
        self.messages = 0

    def fingerprint(self, src, dst):
        """Learning state that a send from ``src`` can change.

        Landmark notifications only ever reach the packet's source, so this
        is all a repeated send of the same pair could observe differently.
        """
        if self.protocol is Protocol.ITGR:
            return self.caches.version(src)
        if self.protocol is Protocol.GLR:
            return self.glr.get((src, dst))
        return None

    def total_entries(self):
        if self.protocol is Protocol.GLR:
            return len(self.glr)
        return self.caches.total_entries()

    def nodes_with_entries(self):
        if self.protocol is Protocol.GLR:
            return len({src for src, _ in self.glr})
        return self.caches.nodes_with_entries()


def _send(state, u, pkt):
    t = state.topology
    p = state.protocol
    if p is Protocol.ITGR:
        return routing.itgr_send(t, u, pkt, state.caches.get(u))
    if p is Protocol.GLR:
        return routing.glr_send(t, u, pkt, state.glr)
    if p is Protocol.GPSR:
        return routing.gpsr_send(t, u, pkt)
    return routing.greedy_step(t, u, pkt)


def _receive(state, u, pkt):
    t = state.topology
    p = state.protocol
    if p is Protocol.ITGR:
        return routing.itgr_process(t, u, pkt, state.caches.get(u))
    if p is Protocol.GLR:
        return routing.glr_process(t, u, pkt, state.glr)
    if p is Protocol.GPSR:
        return routing.gpsr_process(t, u, pkt)
    return routing.greedy_step(t, u, pkt)


def route_once(t: Topology, protocol, src: int, dst: int, state: ProtocolState | None = None) -> PathRecord:
    """Route one packet from ``src`` to ``dst`` and apply any learned landmarks."""
    protocol = Protocol(protocol)
    if state is None:
        state = ProtocolState(t, protocol)
    pos = t.positions
    pkt = Packet(src=src, dst=dst, ttl=state.ttl, trace=[src])
    modes = []
    msgs = []
    length = 0.0
    u = src
    res = _send(state, u, pkt)
    while True:
        if res.status is not Status.FORWARD:
            break
        v = res.next_hop
        if pkt.itgr_list:
            pkt.used_itgr_list = True
        modes.append(res.mode.value)
        length += distance(pos[u], pos[v])
        pkt.ttl -= 1
        pkt.trace.append(v)
        u = v
        res = _receive(state, u, pkt)
        msg = getattr(res, "message", None)
        if msg is not None:
            msgs.append(msg)
    status = res.status if res.status is not Status.FORWARD else Status.DROPPED
    modes.append("dest" if status is Status.DELIVERED else status.value)
    for msg in msgs:
        state.messages += 1
        if protocol is Protocol.ITGR:
            routing.deliver_landmark_msg(msg, state.caches)
        elif protocol is Protocol.GLR:
            routing.deliver_glr_msg(msg, state.glr)
    return PathRecord(
        src=src,
        dst=dst,
        protocol=protocol,
        status=status,
        hops=len(pkt.trace) - 1,
        length=length,
        used_itgr_list=pkt.used_itgr_list,
        trace=tuple(pkt.trace),
        modes=tuple(modes),
    )


def warmup_and_measure(t, protocol, pairs, repeats, state=None) -> list:
    """Send ``repeats`` consecutive packets for every pair, in pair order.

    Learning state persists across all sends.  Routing is deterministic, so
    once a send leaves the source's learning state untouched every further
    send of that pair repeats it; those records are reused.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    protocol = Protocol(protocol)
    if state is None:
        state = ProtocolState(t, protocol)
    out = []
    for src, dst in pairs:
        k = 0
        while k < repeats:
            before = state.fingerprint(src, dst)
            rec = route_once(t, protocol, src, dst, state)
            out.append(rec)
            k += 1
            if state.fingerprint(src, dst) == before:
                out.extend([rec] * (repeats - k))
                break
    return out


# --- experiment configuration -------------------------------------------------


def derive_seed(master_seed, *key):
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep description.

    ``area_rule`` chooses the field size per node count: ``"fixed"`` keeps
    the template area; ``"degree"`` shrinks the square field so that the
    expected unit-disk degree is at least ``target_degree``, never growing it
    beyond the template.  Hole centers and sizes scale with the field side.
    """

    gen: GenConfig = field(default_factory=GenConfig)
    node_counts: tuple = (50, 100, 150, 200, 250, 300)
    trials_per_count: int = 10
    pairs_per_trial: int = 100
    repeat_schedule: tuple = (1, 2, 4, 8, 16, 32, 64, 128)
    protocols: tuple = (Protocol.GPSR, Protocol.ITGR, Protocol.GLR)
    master_seed: int = 1
    area_rule: str = "degree"
    target_degree: float = 8.0
    scale_holes: bool = True
    repeat_n_nodes: int = 150
    repeat_trials: int = 100
    ttl_factor: int = 4

    def __post_init__(self):
        for name in ("trials_per_count", "pairs_per_trial", "repeat_n_nodes", "repeat_trials", "ttl_factor"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(name, "must be an integer >= 1")
        for name in ("node_counts", "repeat_schedule"):
            vals = getattr(self, name)
            if not vals or any(not isinstance(v, int) or v < 1 for v in vals):
                raise ConfigError(name, "must be a non-empty list of integers >= 1")
        if any(n < 2 for n in self.node_counts):
            raise ConfigError("node_counts", "node counts must be >= 2")
        if not self.protocols:
            raise ConfigError("protocols", "at least one protocol is required")
        if self.area_rule not in ("fixed", "degree"):
            raise ConfigError("area_rule", "must be 'fixed' or 'degree'")
        if not (isinstance(self.target_degree, (int, float)) and self.target_degree > 0):
            raise ConfigError("target_degree", "must be positive")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed", "must be an unsigned 64-bit integer")

    @classmethod
    def from_json(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("config", "expected a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown field")
        kw = dict(doc)
        if "gen" in kw:
            g = dict(kw["gen"])
            g.setdefault("n_nodes", 150)
            kw["gen"] = GenConfig.from_json(g)
        for name in ("node_counts", "repeat_schedule"):
            if name in kw:
                if not isinstance(kw[name], list):
                    raise ConfigError(name, "expected a list")
                kw[name] = tuple(kw[name])
        if "protocols" in kw:
            if not isinstance(kw["protocols"], list):
                raise ConfigError("protocols", "expected a list")
            kw["protocols"] = tuple(Protocol.parse(p) for p in kw["protocols"])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError("config", str(exc)) from None

    def to_json(self):
        return {
            "gen": self.gen.to_json(),
            "node_counts": list(self.node_counts),
            "trials_per_count": self.trials_per_count,
            "pairs_per_trial": self.pairs_per_trial,
            "repeat_schedule": list(self.repeat_schedule),
            "protocols": [p.value for p in self.protocols],
            "master_seed": self.master_seed,
            "area_rule": self.area_rule,
            "target_degree": self.target_degree,
            "scale_holes": self.scale_holes,
            "repeat_n_nodes": self.repeat_n_nodes,
            "repeat_trials": self.repeat_trials,
            "ttl_factor": self.ttl_factor,
        }

    def gen_for(self, n_nodes, seed):
        """Generation config for one trial with ``n_nodes`` nodes."""
        g = self.gen
        w, h = g.area_w, g.area_h
        if self.area_rule == "degree":
            side = math.sqrt(n_nodes * math.pi * g.radius**2 / self.target_degree)
            scale = min(1.0, side / w, side / h)
        else:
            scale = 1.0
        holes = g.holes
        if scale != 1.0 and self.scale_holes:
            holes = tuple(_scale_hole(hh, scale) for hh in holes)
        return replace(g, area_w=w * scale, area_h=h * scale, n_nodes=n_nodes, holes=holes, seed=seed)


def _scale_hole(hole, s):
    doc = hole.to_json()
    if doc["type"] == "disc":
        doc["center"] = [c * s for c in doc["center"]]
        doc["r"] = doc["r"] * s
    else:
        doc["vertices"] = [[x * s, y * s] for x, y in doc["vertices"]]
    return hole_from_json(doc)


def sample_pairs(n_nodes, count, seed):
    """Distinct ordered (src, dst) pairs with src != dst."""
    rng = np.random.Generator(np.random.PCG64(seed))
    total = n_nodes * (n_nodes - 1)
    count = min(count, total)
    picks = rng.choice(total, size=count, replace=False)
    pairs = []
    for k in picks.tolist():
        src, r = divmod(k, n_nodes - 1)
        dst = r if r < src else r + 1
        pairs.append((src, dst))
    return pairs


def trial_topology(cfg, n_nodes, trial):
    seed = derive_seed(cfg.master_seed, n_nodes, trial, 0)
    gcfg = cfg.gen_for(n_nodes, seed)
    try:
        return generate(gcfg)
    except GenerationFailed as exc:
        raise GenerationFailed(
            f"n_nodes={n_nodes} trial={trial}: {exc}", seed=seed
        ) from None


def trial_pairs(cfg, n_nodes, trial):
    return sample_pairs(n_nodes, cfg.pairs_per_trial, derive_seed(cfg.master_seed, n_nodes, trial, 1))


# --- aggregation ---------------------------------------------------------------


@dataclass
class TrialResult:
    n_nodes: int
    trial: int
    records: dict  # Protocol -> list[PathRecord]
    nodes_with_entries: dict
    total_entries: dict


def run_trial(cfg, n_nodes, trial):
    t = trial_topology(cfg, n_nodes, trial)
    pairs = trial_pairs(cfg, n_nodes, trial)
    records, nwe, tot = {}, {}, {}
    for p in cfg.protocols:
        state = ProtocolState(t, p, ttl=cfg.ttl_factor * t.n)
        records[p] = warmup_and_measure(t, p, pairs, 1, state)
        nwe[p] = state.nodes_with_entries()
        tot[p] = state.total_entries()
    return TrialResult(n_nodes, trial, records, nwe, tot)


def _run_trial_args(args):
    return run_trial(*args)


def _map(fn, jobs, threads):
    if threads and threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


@dataclass(frozen=True)
class MetricsRow:
    protocol: Protocol
    n_nodes: int
    avg_length: float
    avg_hops: float
    max_length: float
    max_hops: int
    type2_pct: float
    nodes_with_entries: float
    total_entries: float
    undelivered: int
    packets: int
    dropped: int = 0
    undeliverable: int = 0


@dataclass(frozen=True)
class Type2Row:
    """Averages over the pairs whose ITGR path was type 2, per protocol."""

    protocol: Protocol
    n_nodes: int
    pairs: int
    avg_length: float
    avg_hops: float


@dataclass(frozen=True)
class SeriesRow:
    protocol: Protocol
    repeats: int
    avg_length: float


@dataclass
class MetricsTable:
    rows: list = field(default_factory=list)
    type2: list = field(default_factory=list)
    series: list = field(default_factory=list)

    def row(self, protocol, n_nodes):
        protocol = Protocol(protocol)
        for r in self.rows:
            if r.protocol is protocol and r.n_nodes == n_nodes:
                return r
        raise KeyError((protocol, n_nodes))

    def type2_row(self, protocol, n_nodes):
        protocol = Protocol(protocol)
        for r in self.type2:
            if r.protocol is protocol and r.n_nodes == n_nodes:
                return r
        raise KeyError((protocol, n_nodes))

    def series_row(self, protocol, repeats):
        protocol = Protocol(protocol)
        for r in self.series:
            if r.protocol is protocol and r.repeats == repeats:
                return r
        raise KeyError((protocol, repeats))

    def metrics_csv(self):
        return _csv(METRICS_HEADER, [
            [r.protocol.value, r.n_nodes, _f(r.avg_length), _f(r.avg_hops), _f(r.max_length), r.max_hops,
             _f(r.type2_pct), _f(r.nodes_with_entries), _f(r.total_entries), r.undelivered]
            for r in self.rows
        ])

    def type2_csv(self):
        return _csv(TYPE2_HEADER, [
            [r.protocol.value, r.n_nodes, r.pairs, _f(r.avg_length), _f(r.avg_hops)] for r in self.type2
        ])

    def series_csv(self):
        return _csv(SERIES_HEADER, [[r.protocol.value, r.repeats, _f(r.avg_length)] for r in self.series])


METRICS_HEADER = ["protocol", "n_nodes", "avg_length_m", "avg_hops", "max_length_m", "max_hops",
                  "type2_pct", "nodes_with_entries", "total_entries", "undelivered"]
TYPE2_HEADER = ["protocol", "n_nodes", "type2_pairs", "avg_length_m", "avg_hops"]
SERIES_HEADER = ["protocol", "repeats", "avg_length_m"]
OVERHEAD_HEADER = ["n_nodes", "itgr_entries", "glr_entries"]


def _f(x):
    return f"{x:.6f}"


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _mean(xs):
    return sum(xs) / len(xs) if xs else 0.0


def aggregate(cfg, results) -> MetricsTable:
    table = MetricsTable()
    by_n = {}
    for res in sorted(results, key=lambda r: (r.n_nodes, r.trial)):
        by_n.setdefault(res.n_nodes, []).append(res)
    for n in cfg.node_counts:
        trials = by_n.get(n, [])
        for p in cfg.protocols:
            recs = [r for tr in trials for r in tr.records[p]]
            ok = [r for r in recs if r.delivered]
            table.rows.append(MetricsRow(
                protocol=p,
                n_nodes=n,
                avg_length=_mean([r.length for r in ok]),
                avg_hops=_mean([r.hops for r in ok]),
                max_length=max((r.length for r in ok), default=0.0),
                max_hops=max((r.hops for r in ok), default=0),
                type2_pct=100.0 * _mean([1.0 if r.type2 else 0.0 for r in ok]),
                nodes_with_entries=_mean([tr.nodes_with_entries[p] for tr in trials]),
                total_entries=_mean([tr.total_entries[p] for tr in trials]),
                undelivered=len(recs) - len(ok),
                packets=len(recs),
                dropped=sum(1 for r in recs if r.status is Status.DROPPED),
                undeliverable=sum(1 for r in recs if r.status is Status.UNDELIVERABLE),
            ))
        if Protocol.ITGR in cfg.protocols:
            for p in cfg.protocols:
                lens, hops = [], []
                for tr in trials:
                    for ri, rp in zip(tr.records[Protocol.ITGR], tr.records[p]):
                        if ri.delivered and ri.type2 and rp.delivered:
                            lens.append(rp.length)
                            hops.append(rp.hops)
                table.type2.append(Type2Row(p, n, len(lens), _mean(lens), _mean(hops)))
    return table


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> MetricsTable:
    """Run every protocol on every trial topology of the sweep."""
    jobs = [(cfg, n, k) for n in cfg.node_counts for k in range(cfg.trials_per_count)]
    results = _map(_run_trial_args, jobs, threads)
    return aggregate(cfg, results)


def compare_overhead(cfg: ExperimentConfig, table: MetricsTable | None = None, threads: int = 1) -> dict:
    """Average total cache entries per network for ITGR and GLR, keyed by ``n_nodes``."""
    need = (Protocol.ITGR, Protocol.GLR)
    if table is None or not all(p in cfg.protocols for p in need):
        table = run_experiment(replace(cfg, protocols=need), threads)
    return {n: {p: table.row(p, n).total_entries for p in need} for n in cfg.node_counts}


def overhead_csv(overhead):
    return _csv(OVERHEAD_HEADER, [
        [n, _f(v[Protocol.ITGR]), _f(v[Protocol.GLR])] for n, v in sorted(overhead.items())
    ])


def _series_trial(args):
    cfg, trial, protocols = args
    n = cfg.repeat_n_nodes
    t = trial_topology(cfg, n, trial)
    pairs = trial_pairs(cfg, n, trial)
    out = {}
    for p in protocols:
        for k in cfg.repeat_schedule:
            recs = warmup_and_measure(t, p, pairs, k, ProtocolState(t, p, ttl=cfg.ttl_factor * t.n))
            ok = [r.length for r in recs if r.delivered]
            out[(p, k)] = (sum(ok), len(ok))
    return out


def repeat_series(cfg: ExperimentConfig, threads: int = 1, protocols=None) -> list:
    """Average path length versus the number of consecutive sends per pair.

    Uses ``repeat_trials`` networks of ``repeat_n_nodes`` nodes; learning
    state starts empty for every (network, repeat count) combination.
    """
    if protocols is None:
        protocols = [p for p in cfg.protocols if p in (Protocol.ITGR, Protocol.GLR, Protocol.GPSR)]
    jobs = [(cfg, k, tuple(protocols)) for k in range(cfg.repeat_trials)]
    parts = _map(_series_trial, jobs, threads)
    rows = []
    for p in protocols:
        for k in cfg.repeat_schedule:
            total = sum(part[(p, k)][0] for part in parts)
            count = sum(part[(p, k)][1] for part in parts)
            rows.append(SeriesRow(p, k, total / count if count else 0.0))
    return rows
