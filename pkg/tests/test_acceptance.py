"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The verdict lines are also collected into an "acceptance criteria" section
of the pytest terminal summary.  Run just this module with
``pytest tests/test_acceptance.py -v -s``.
"""

import json
import time
from pathlib import Path

import pytest

from geosim.cli import main
from geosim.geometry import MergeCase, Point, classify_overlap
from geosim.simulator import (
    ExperimentConfig,
    Protocol,
    ProtocolState,
    compare_overhead,
    repeat_series,
    route_once,
    run_experiment,
    trial_pairs,
    trial_topology,
    warmup_and_measure,
)
from geosim.topology import DiscHole, GenConfig
from test_cache import MERGE_FIXTURES, OWNER, far_zone_violations, fresh
from test_geometry import oracle_agreement

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# 100 fixed-area fields: N=150, 400x400 m, r=40 m, one 60 m disc hole
DELIVERY = ExperimentConfig(
    gen=GenConfig(holes=(DiscHole(Point(200, 200), 60.0),), max_rejects=2_000_000),
    area_rule="fixed",
    node_counts=(150,),
    trials_per_count=100,
    pairs_per_trial=100,
    protocols=(Protocol.GPSR, Protocol.ITGR),
)

FAN = [219, 202, 218, 220, 201, 203, 185, 217, 221, 184, 186, 200, 204, 183, 187, 168, 167, 169, 166, 170]


def _pct(a, b):
    return 100.0 * (1.0 - a / b)


# --- shared workloads ------------------------------------------------------------


@pytest.fixture(scope="module")
def delivery():
    t0 = time.perf_counter()
    out = {"gpsr": 0, "cold": 0, "warm": 0, "mismatch": 0, "pairs": 0, "warm_sent": 0}
    for k in range(DELIVERY.trials_per_count):
        t = trial_topology(DELIVERY, 150, k)
        pairs = trial_pairs(DELIVERY, 150, k)
        ttl = DELIVERY.ttl_factor * t.n
        for s, d in pairs:
            g = route_once(t, "gpsr", s, d, ProtocolState(t, "gpsr", ttl=ttl))
            c = route_once(t, "itgr", s, d, ProtocolState(t, "itgr", ttl=ttl))
            out["pairs"] += 1
            out["gpsr"] += g.delivered
            out["cold"] += c.delivered
            out["mismatch"] += g.trace != c.trace
        warm = warmup_and_measure(t, "itgr", pairs, 2, ProtocolState(t, "itgr", ttl=ttl))
        out["warm_sent"] += len(warm)
        out["warm"] += sum(r.delivered for r in warm)
    out["elapsed"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="module")
def sweep():
    cfg = ExperimentConfig.from_json(json.loads((CONFIGS / "full_sweep.json").read_text()))
    t0 = time.perf_counter()
    table = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    overhead = compare_overhead(cfg, table)
    series = repeat_series(cfg, protocols=[Protocol.GPSR, Protocol.ITGR, Protocol.GLR])
    return cfg, table, overhead, series, elapsed


# --- criteria --------------------------------------------------------------------


def test_criterion_01_geometry_oracle(verdict):
    t0 = time.perf_counter()
    checked, mismatches = oracle_agreement(100_000, seed=7)
    elapsed = time.perf_counter() - t0
    ok = checked == 100_000 and mismatches == 0 and elapsed < 5.0
    assert verdict(1, ok, f"{checked} quadruples, {mismatches} mismatches, {elapsed:.2f} s")


def test_criterion_02_merge_cases(verdict):
    bad = []
    for name, (old, new, expected) in sorted(MERGE_FIXTURES.items()):
        if classify_overlap(OWNER, old, new) is not MergeCase(name):
            bad.append(f"{name}: class")
        if sorted(fresh(old, new).entries, key=repr) != sorted(expected, key=repr):
            bad.append(f"{name}: outcome")
        v = far_zone_violations([old], new, n=10_000, seed=1)
        if v:
            bad.append(f"{name}: {v} far-zone violations")
    ok = not bad and len(MERGE_FIXTURES) == 6
    assert verdict(2, ok, "six cases, 1e4 far-zone points each" + (f"; {bad}" if bad else ""))


def test_criterion_03_delivery(delivery, verdict):
    d = delivery
    ok = (d["gpsr"] == d["cold"] == d["pairs"] == 10_000 and d["warm"] == d["warm_sent"]
          and d["elapsed"] < 120.0)
    detail = (f"gpsr {d['gpsr']}/{d['pairs']}, cold itgr {d['cold']}/{d['pairs']}, "
              f"warm itgr {d['warm']}/{d['warm_sent']}, {d['elapsed']:.0f} s")
    assert verdict(3, ok, detail)


def test_criterion_04_cold_start_equivalence(delivery, verdict):
    ok = delivery["mismatch"] == 0
    assert verdict(4, ok, f"{delivery['mismatch']} of {delivery['pairs']} first-send traces differ from GPSR")


def test_criterion_05_length_and_hops(sweep, verdict):
    cfg, table, _, _, elapsed = sweep
    rows = [(n, table.row("gpsr", n), table.row("itgr", n)) for n in cfg.node_counts]
    lower = all(i.avg_length < g.avg_length and i.avg_hops < g.avg_hops for _, g, i in rows)
    _, g50, i50 = rows[0]
    dl, dh = _pct(i50.avg_length, g50.avg_length), _pct(i50.avg_hops, g50.avg_hops)
    ok = lower and 8 <= dl <= 28 and 6 <= dh <= 25 and elapsed < 600
    per_n = ", ".join(f"N={n}: {_pct(i.avg_length, g.avg_length):+.1f}%" for n, g, i in rows)
    assert verdict(5, ok, f"length gain {per_n}; hops gain at N=50 {dh:+.1f}%; {elapsed:.0f} s")


def test_criterion_06_type2_trend(sweep, verdict):
    cfg, table, *_ = sweep
    pct = [table.row("itgr", n).type2_pct for n in cfg.node_counts]
    rises = [b - a for a, b in zip(pct, pct[1:]) if b > a]
    ok = (not rises or (len(rises) == 1 and rises[0] <= 1.5)) and 10 <= pct[0] <= 30
    assert verdict(6, ok, "type-2 % by N: " + ", ".join(f"{p:.1f}" for p in pct))


def test_criterion_07_nodes_with_entries(sweep, verdict):
    cfg, table, *_ = sweep
    frac = [100.0 * table.row("itgr", n).nodes_with_entries / n for n in cfg.node_counts]
    ok = all(4 <= f <= 16 for f in frac)
    assert verdict(7, ok, "nodes with entries % by N: " + ", ".join(f"{f:.1f}" for f in frac))


def test_criterion_08_type2_compression(sweep, verdict):
    cfg, table, *_ = sweep
    ratios = []
    for n in cfg.node_counts:
        i, g = table.type2_row("itgr", n), table.type2_row("gpsr", n)
        ratios.append(i.avg_length / g.avg_length if g.pairs and g.avg_length else float("nan"))
    decreasing = all(b < a for a, b in zip(ratios, ratios[1:]))
    ok = decreasing and ratios[-1] <= 0.6
    assert verdict(8, ok, "type-2 ITGR/GPSR length ratio by N: " + ", ".join(f"{r:.3f}" for r in ratios))


def test_criterion_09_longest_path(sweep, verdict):
    cfg, table, *_ = sweep
    n = max(cfg.node_counts)
    g, i = table.row("gpsr", n).max_length, table.row("itgr", n).max_length
    ok = g >= 2 * i
    assert verdict(9, ok, f"N={n}: GPSR longest {g:.0f} m, ITGR longest {i:.0f} m, ratio {g / i:.2f}")


def test_criterion_10_overhead(sweep, fan_grid, verdict):
    cfg, _, overhead, *_ = sweep
    itgr = [overhead[n][Protocol.ITGR] for n in cfg.node_counts]
    glr = [overhead[n][Protocol.GLR] for n in cfg.node_counts]
    gaps = [b - a for a, b in zip(itgr, glr)]
    fewer = all(a < b for a, b in zip(itgr, glr))
    growing = all(y >= x for x, y in zip(gaps, gaps[1:]))
    fi, fg = ProtocolState(fan_grid, "itgr"), ProtocolState(fan_grid, "glr")
    for d in FAN:
        route_once(fan_grid, "itgr", 8, d, fi)
        route_once(fan_grid, "glr", 8, d, fg)
    fan_ok = 18 <= fg.total_entries() <= 22 and fi.total_entries() <= 4
    ok = fewer and growing and fan_ok
    detail = ("entries ITGR/GLR by N: " + ", ".join(f"{a:.1f}/{b:.1f}" for a, b in zip(itgr, glr))
              + f"; fan GLR {fg.total_entries()}, ITGR {fi.total_entries()}")
    assert verdict(10, ok, detail)


def test_criterion_11_repeat_crossover(sweep, verdict):
    *_, series, _ = sweep
    by = {(r.protocol, r.repeats): r.avg_length for r in series}
    low = all(by[(Protocol.ITGR, k)] <= by[(Protocol.GLR, k)] for k in (1, 2, 4, 8))
    high = all(abs(by[(Protocol.ITGR, k)] / by[(Protocol.GLR, k)] - 1) <= 0.05 for k in (64, 128))
    ok = low and high
    ks = sorted({k for _, k in by})
    detail = "ITGR/GLR by repeats: " + ", ".join(
        f"{k}: {by[(Protocol.ITGR, k)]:.0f}/{by[(Protocol.GLR, k)]:.0f}" for k in ks)
    assert verdict(11, ok, detail)


def test_criterion_12_determinism(tmp_path, verdict):
    cfg = str(CONFIGS / "smoke_sweep.json")
    runs = []
    for threads in ("1", "1", "2"):
        out = tmp_path / f"run{len(runs)}"
        assert main(["sweep", "--config", cfg, "--out", str(out), "--threads", threads]) == 0
        runs.append(out)
    names = json.loads((runs[0] / "manifest.json").read_text())["emitted"]
    same = all((r / n).read_bytes() == (runs[0] / n).read_bytes() for r in runs[1:] for n in names)
    assert verdict(12, same, f"{len(names)} CSVs byte-identical across 3 runs (threads 1, 1, 2)")
