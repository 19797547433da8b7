"""Command-line front end: ``geosim generate | route | sweep``.

Exit codes: 0 success, 2 configuration or argument error, 3 topology
generation failure, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import xml.etree.ElementTree as ET
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from . import __version__
from .errors import ConfigError, GenerationFailed, UnknownNode
from .simulator import (
    ExperimentConfig,
    Protocol,
    ProtocolState,
    compare_overhead,
    overhead_csv,
    repeat_series,
    route_once,
    run_experiment,
)
from .topology import DiscHole, GenConfig, PolygonHole, generate, load_topology, save_topology

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GENERATION = 3
EXIT_INTERNAL = 4

SEED_ENV = "GEOSIM_SEED"
TRACE_HEADER = ["hop", "node_id", "x", "y", "mode"]


class InvariantViolation(RuntimeError):
    pass


@dataclass
class RunManifest:
    config_path: str
    out_dir: str
    emitted: list = field(default_factory=list)
    tool_version: str = __version__
    master_seed: int = 0

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=1, sort_keys=True)
            fh.write("\n")


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _read_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(what, f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(what, f"{path} is not valid JSON: {exc}") from None


def _parse_seed(text, source):
    try:
        seed = int(text, 0) if isinstance(text, str) else int(text)
    except ValueError:
        raise ConfigError("seed", f"{source} must be an integer, got {text!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigError("seed", f"{source} must fit in 64 unsigned bits")
    return seed


def _seed_override(args):
    """``--seed`` wins over ``$GEOSIM_SEED``; None means keep the config's seed."""
    if args.seed is not None:
        return _parse_seed(args.seed, "--seed")
    env = os.environ.get(SEED_ENV)
    if env:
        return _parse_seed(env, SEED_ENV)
    return None


# --- generate -------------------------------------------------------------------


def cmd_generate(args):
    doc = _read_json(args.config, "config")
    cfg = GenConfig.from_json(doc)
    seed = _seed_override(args)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    t = generate(cfg)
    for u, v in t.edges():
        if t.positions[u] == t.positions[v] or not _within(t, u, v):
            raise InvariantViolation(f"edge ({u}, {v}) longer than the radius")
    save_topology(t, args.out)
    print(f"wrote {t.n} nodes, {len(t.edges())} edges to {args.out}")
    return EXIT_OK


def _within(t, u, v):
    (ux, uy), (vx, vy) = t.positions[u], t.positions[v]
    return (ux - vx) ** 2 + (uy - vy) ** 2 <= t.radius**2


# --- route ----------------------------------------------------------------------


def trace_rows(t, rec):
    rows = []
    for hop, (nid, mode) in enumerate(zip(rec.trace, rec.modes)):
        p = t.positions[nid]
        rows.append([hop, nid, f"{p.x:.6f}", f"{p.y:.6f}", mode])
    return rows


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _numbered(path, k):
    p = Path(path)
    return str(p.with_name(f"{p.stem}_{k}{p.suffix}"))


def cmd_route(args):
    t = load_topology(args.topology)
    for name in ("src", "dst"):
        nid = getattr(args, name)
        if not 0 <= nid < t.n:
            raise UnknownNode(f"--{name} {nid} is not a node of {args.topology} (0..{t.n - 1})")
    if args.repeats < 1:
        raise ConfigError("repeats", "must be >= 1")
    protocol = Protocol.parse(args.protocol)
    state = ProtocolState(t, protocol)
    records = [route_once(t, protocol, args.src, args.dst, state) for _ in range(args.repeats)]
    for rec in records:
        if len(rec.trace) != len(rec.modes):
            raise InvariantViolation("trace and mode lists differ in length")
    if args.out:
        if args.repeats == 1:
            _write_csv(args.out, TRACE_HEADER, trace_rows(t, records[0]))
        else:
            for k, rec in enumerate(records, start=1):
                _write_csv(_numbered(args.out, k), TRACE_HEADER, trace_rows(t, rec))
    else:
        # stdout carries the last send only; use --out for every send
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        w.writerows(trace_rows(t, records[-1]))
    if args.svg:
        render_svg(t, [r.trace for r in records], args.svg)
    for k, rec in enumerate(records, start=1):
        print(f"send {k}: {rec.status.value} hops={rec.hops} length={rec.length:.3f}", file=sys.stderr)
    return EXIT_OK


def render_svg(t, traces, path, scale=2.0):
    """Static picture of nodes, Gabriel edges, holes and routed paths.

    Earlier traces are drawn faint; the last one is drawn on top.
    """
    xs = [p.x for p in t.positions]
    ys = [p.y for p in t.positions]
    w = max(xs + [t.area[0] if t.area else 0.0]) + 10
    h = max(ys + [t.area[1] if t.area else 0.0]) + 10
    x0, y0 = min(xs + [0.0]) - 10, min(ys + [0.0]) - 10

    def X(x):
        return f"{(x - x0) * scale:.2f}"

    def Y(y):
        # flip so that +y points up
        return f"{(h - y) * scale:.2f}"

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                     width=f"{(w - x0) * scale:.0f}", height=f"{(h - y0) * scale:.0f}")
    g_holes = ET.SubElement(svg, "g", fill="#dddddd", stroke="#999999")
    for hole in t.holes:
        if isinstance(hole, DiscHole):
            ET.SubElement(g_holes, "circle", cx=X(hole.center.x), cy=Y(hole.center.y), r=f"{hole.r * scale:.2f}")
        elif isinstance(hole, PolygonHole):
            pts = " ".join(f"{X(v.x)},{Y(v.y)}" for v in hole.vertices)
            ET.SubElement(g_holes, "polygon", points=pts)
    g_edges = ET.SubElement(svg, "g", stroke="#bbbbbb", **{"stroke-width": "1"})
    for u, v in t.edges(planar=True):
        a, b = t.positions[u], t.positions[v]
        ET.SubElement(g_edges, "line", x1=X(a.x), y1=Y(a.y), x2=X(b.x), y2=Y(b.y))
    g_nodes = ET.SubElement(svg, "g", fill="#333333")
    for p in t.positions:
        ET.SubElement(g_nodes, "circle", cx=X(p.x), cy=Y(p.y), r="2.5")
    for k, trace in enumerate(traces):
        last = k == len(traces) - 1
        pts = " ".join(f"{X(t.positions[n].x)},{Y(t.positions[n].y)}" for n in trace)
        ET.SubElement(svg, "polyline", points=pts, fill="none",
                      stroke="#d62728" if last else "#1f77b4",
                      **{"stroke-width": "3" if last else "1.5", "stroke-opacity": "1" if last else "0.5"})
    if traces and traces[-1]:
        for nid, color in ((traces[-1][0], "#2ca02c"), (traces[-1][-1], "#9467bd")):
            p = t.positions[nid]
            ET.SubElement(svg, "circle", cx=X(p.x), cy=Y(p.y), r="5", fill=color)
    ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)


# --- sweep ----------------------------------------------------------------------


SWEEP_FILES = ("metrics.csv", "type2.csv", "series.csv", "overhead.csv")


def cmd_sweep(args):
    doc = _read_json(args.config, "config")
    cfg = ExperimentConfig.from_json(doc)
    if args.protocols:
        names = [s for s in args.protocols.split(",") if s]
        cfg = replace(cfg, protocols=tuple(Protocol.parse(s) for s in names))
    seed = _seed_override(args)
    if seed is not None:
        cfg = replace(cfg, master_seed=seed)
    if args.threads < 1:
        raise ConfigError("threads", "must be >= 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        table = run_experiment(cfg, threads=args.threads)
        for row in table.rows:
            if row.protocol is not Protocol.GREEDY and row.dropped:
                # long face tours in sparse fields can exhaust the ttl; the count is in the CSV
                print(f"geosim: warning: {row.protocol.value} dropped {row.dropped} packets "
                      f"at n_nodes={row.n_nodes}", file=sys.stderr)
        series_protocols = [p for p in cfg.protocols if p is not Protocol.GREEDY]
        table.series = repeat_series(cfg, threads=args.threads, protocols=series_protocols)
        contents = {
            "metrics.csv": table.metrics_csv(),
            "type2.csv": table.type2_csv(),
            "series.csv": table.series_csv(),
        }
        if Protocol.ITGR in cfg.protocols and Protocol.GLR in cfg.protocols:
            contents["overhead.csv"] = overhead_csv(compare_overhead(cfg, table, threads=args.threads))
        for name in SWEEP_FILES:
            if name in contents:
                path = out / name
                written.append(path)
                path.write_text(contents[name])
        manifest = RunManifest(
            config_path=str(args.config),
            out_dir=str(out),
            emitted=[p.name for p in written],
            master_seed=cfg.master_seed,
        )
        mpath = out / "manifest.json"
        written.append(mpath)
        manifest.write(mpath)
    except BaseException:
        for path in written:
            try:
                path.unlink()
            except FileNotFoundError:
                pass
        raise
    print(f"wrote {', '.join(p.name for p in written)} to {out}")
    return EXIT_OK


# --- entry point ----------------------------------------------------------------


def build_parser():
    ap = _ArgParser(prog="geosim", description="Geographic routing simulator with shaded-area caching.")
    ap.add_argument("--version", action="version", version=f"geosim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_ArgParser)

    g = sub.add_parser("generate", help="generate a connected topology")
    g.add_argument("--config", required=True, help="generation config JSON")
    g.add_argument("--out", required=True, help="topology JSON to write")
    g.add_argument("--seed", help=f"override the config seed (fallback: ${SEED_ENV})")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("route", help="route packets on a topology and print the trace")
    r.add_argument("topology", help="topology JSON")
    r.add_argument("--protocol", default="itgr", choices=[p.value for p in Protocol])
    r.add_argument("--src", type=int, required=True)
    r.add_argument("--dst", type=int, required=True)
    r.add_argument("--repeats", type=int, default=1, help="consecutive sends sharing learned state")
    r.add_argument("--out", help="trace CSV path; with --repeats > 1 one file per send, suffixed _k")
    r.add_argument("--svg", help="write an SVG rendering here")
    r.set_defaults(func=cmd_route)

    s = sub.add_parser("sweep", help="run the protocol comparison experiments")
    s.add_argument("--config", required=True, help="experiment config JSON")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--protocols", help="comma-separated subset, e.g. gpsr,itgr")
    s.add_argument("--threads", type=int, default=1, help="worker processes; never changes output")
    s.add_argument("--seed", help=f"override master_seed (fallback: ${SEED_ENV})")
    s.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UnknownNode) as exc:
        print(f"geosim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GenerationFailed as exc:
        print(f"geosim: generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except (InvariantViolation, AssertionError) as exc:
        print(f"geosim: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
