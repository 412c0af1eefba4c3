"""Post-experiment drill-down: call trees, latency decomposition, summaries.

Metric definitions:

* execution duration — invocation end minus start (logged clock).
* compute — execution duration minus the node's sequential outgoing sync
  call durations, its sequential keyed-store call durations, and the
  blocking span of each parallel fan-out block.
* network (per sync edge) — outgoing call duration minus the callee's
  execution duration.
* db — keyed-store call duration.
* publish latency (per async edge) — outgoing async call duration minus the
  publisher invocation's execution duration.
* trigger delay — triggered function start minus publisher start (both run
  on the destination platform, so constant clock offsets cancel).
* one-way network estimate (per sync edge) — (caller round trip minus
  callee execution) / 2, assuming both directions take comparably long.

Conservation: for a complete tree, root round trip equals total compute +
total network + total db exactly, where parallel blocks contribute their
blocking span as network-wait (branch internals are drill-down detail, not
part of the sum) and async subtrees fall outside the root round trip.

All quantiles are nearest-rank; whiskers extend to the most extreme values
within 1.5 interquartile ranges of the quartiles.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .records import (
    DB_CALL,
    DROP_PREFIX,
    HEADER_LINE,
    INVOCATION,
    LOADGEN,
    MODE_ASYNC,
    MODE_SYNC,
    MODE_TRIGGER,
    OUTGOING_CALL,
    TraceRecord,
    parse_drop_line,
    parse_record,
)


class AnalysisError(Exception):
    pass


class UnsupportedSchemaVersion(AnalysisError):
    pass


class IncompleteTree(AnalysisError):
    pass


# ---------------------------------------------------------------------------
# parsing


@dataclass
class ParseReport:
    records: int = 0
    parse_errors: int = 0
    drops: dict[str, int] = field(default_factory=dict)

    @property
    def total_drops(self) -> int:
        return sum(self.drops.values())


def parse_logs(text_or_lines) -> tuple[list[TraceRecord], ParseReport]:
    """Parse a collected log; malformed lines are counted and skipped."""
    if isinstance(text_or_lines, str):
        lines = text_or_lines.splitlines()
    else:
        lines = list(text_or_lines)
    report = ParseReport()
    records: list[TraceRecord] = []
    header_seen = False
    for line in lines:
        if not line.strip():
            continue
        if not header_seen:
            if line.strip() != HEADER_LINE:
                raise UnsupportedSchemaVersion(f"missing or unsupported log header: {line[:60]!r}")
            header_seen = True
            continue
        if line.startswith(DROP_PREFIX):
            try:
                platform_id, count = parse_drop_line(line)
                report.drops[platform_id] = report.drops.get(platform_id, 0) + count
            except ValueError:
                report.parse_errors += 1
            continue
        if line.startswith("#"):
            continue
        try:
            records.append(parse_record(line))
        except ValueError:
            report.parse_errors += 1
    report.records = len(records)
    return records, report


# ---------------------------------------------------------------------------
# call trees


@dataclass
class TreeEdge:
    record: TraceRecord  # OUTGOING_CALL
    child: "TreeNode | None" = None

    @property
    def mode(self) -> str:
        return self.record.mode or MODE_SYNC


@dataclass
class TreeNode:
    record: TraceRecord  # INVOCATION
    calls: list[TreeEdge] = field(default_factory=list)
    db_calls: list[TraceRecord] = field(default_factory=list)

    def walk(self):
        yield self
        for edge in self.calls:
            if edge.child is not None:
                yield from edge.child.walk()


@dataclass
class CallTree:
    context_id: str
    root: TraceRecord | None  # loadgen OUTGOING_CALL
    root_node: TreeNode | None
    complete: bool
    unmatched_pairs: int = 0
    synthetic: bool = False
    orphans: tuple[TreeNode, ...] = ()

    def nodes(self):
        if self.root_node is not None:
            yield from self.root_node.walk()
        for orphan in self.orphans:
            yield from orphan.walk()

    def node_count(self) -> int:
        return sum(1 for _ in self.nodes())

    def edge_set(self) -> set[tuple[str, str | None, str, str]]:
        """(context, parent pair, pair, kind) tuples, comparable with the
        simulator's exported ground truth."""
        out: set[tuple[str, str | None, str, str]] = set()
        if self.root is not None:
            out.add((self.context_id, None, self.root.pair_id, "root"))
        kind_by_mode = {MODE_SYNC: "sync", MODE_ASYNC: "async", MODE_TRIGGER: "trigger"}
        for node in self.nodes():
            for edge in node.calls:
                out.add((self.context_id, node.record.pair_id, edge.record.pair_id, kind_by_mode[edge.mode]))
            for db in node.db_calls:
                out.add((self.context_id, node.record.pair_id, db.pair_id, "db"))
        return out


def build_trees(records: list[TraceRecord]) -> list[CallTree]:
    """One tree per load-generator root call.

    Orphan invocations (their inbound call record was dropped) attach to the
    context's first tree as loose fragments, or to a synthetic root when the
    context has no load-generator record at all. Any detectable loss in a
    context (unmatched pairs, orphans, unattachable caller-side records)
    marks every tree of that context incomplete: a dropped outgoing record
    would otherwise leave a tree that looks closed while silently missing a
    subtree, corrupting its decomposition."""
    by_ctx: dict[str, list[TraceRecord]] = {}
    for r in records:
        by_ctx.setdefault(r.context_id, []).append(r)

    trees: list[CallTree] = []
    for ctx in sorted(by_ctx):
        recs = by_ctx[ctx]
        invocations = [r for r in recs if r.kind == INVOCATION]
        roots = sorted(
            (r for r in recs if r.kind == OUTGOING_CALL and r.platform_id == LOADGEN),
            key=lambda r: (r.start_us, r.pair_id),
        )
        fn_calls = [r for r in recs if r.kind == OUTGOING_CALL and r.platform_id != LOADGEN]
        dbs = [r for r in recs if r.kind == DB_CALL]

        nodes = {r.pair_id: TreeNode(r) for r in invocations}
        by_owner: dict[tuple[str, str], list[TreeNode]] = {}
        for node in nodes.values():
            by_owner.setdefault((node.record.platform_id, node.record.function), []).append(node)
        for owner_nodes in by_owner.values():
            owner_nodes.sort(key=lambda n: (n.record.start_us, n.record.pair_id))

        dangling = 0
        for rec in fn_calls + dbs:
            owner = _find_owner(by_owner, rec)
            if owner is None:
                dangling += 1
                continue
            if rec.kind == DB_CALL:
                owner.db_calls.append(rec)
            else:
                owner.calls.append(TreeEdge(rec))
        for node in nodes.values():
            node.calls.sort(key=lambda e: (e.record.start_us, e.record.pair_id))
            node.db_calls.sort(key=lambda r: (r.start_us, r.pair_id))

        consumed: set[str] = set()
        ctx_trees: list[CallTree] = []
        for root in roots:
            unmatched = 0
            root_node = nodes.get(root.pair_id)
            if root_node is None:
                unmatched += 1
            else:
                consumed.add(root.pair_id)
                unmatched += _link(root_node, nodes, consumed)
            ctx_trees.append(
                CallTree(
                    context_id=ctx,
                    root=root,
                    root_node=root_node,
                    complete=root_node is not None and unmatched == 0,
                    unmatched_pairs=unmatched,
                )
            )

        orphan_roots: list[TreeNode] = []
        orphan_unmatched = 0
        for pair in sorted(
            (p for p in nodes if p not in consumed),
            key=lambda p: (nodes[p].record.start_us, p),
        ):
            if pair in consumed:
                continue
            consumed.add(pair)
            orphan_unmatched += _link(nodes[pair], nodes, consumed)
            orphan_roots.append(nodes[pair])

        if orphan_roots and ctx_trees:
            first = ctx_trees[0]
            ctx_trees[0] = replace(first, orphans=tuple(orphan_roots),
                                   unmatched_pairs=first.unmatched_pairs + orphan_unmatched)
        elif orphan_roots:
            ctx_trees.append(
                CallTree(
                    context_id=ctx,
                    root=None,
                    root_node=None,
                    complete=False,
                    unmatched_pairs=orphan_unmatched + dangling,
                    synthetic=True,
                    orphans=tuple(orphan_roots),
                )
            )

        if orphan_roots or dangling:
            ctx_trees = [replace(t, complete=False) for t in ctx_trees]
        trees.extend(ctx_trees)
    return trees


def _find_owner(by_owner: dict, rec: TraceRecord) -> TreeNode | None:
    candidates = by_owner.get((rec.platform_id, rec.function))
    if not candidates:
        return None
    # sync/db records complete within their invocation; an async record closes
    # when the publisher finishes, which may be after the caller's own end, so
    # only its send instant must fall inside the owner
    full_containment = rec.mode != MODE_ASYNC
    best = None
    for node in candidates:
        if full_containment:
            contained = node.record.start_us <= rec.start_us and rec.end_us <= node.record.end_us
        else:
            contained = node.record.start_us <= rec.start_us <= node.record.end_us
        if contained and (best is None or node.record.start_us >= best.record.start_us):
            best = node  # innermost (latest-starting) candidate
    return best


def _link(node: TreeNode, nodes: dict[str, TreeNode], consumed: set[str]) -> int:
    unmatched = 0
    for edge in node.calls:
        child = nodes.get(edge.record.pair_id)
        if child is None or edge.record.pair_id in consumed:
            unmatched += 1
            continue
        consumed.add(edge.record.pair_id)
        edge.child = child
        unmatched += _link(child, nodes, consumed)
    return unmatched


# ---------------------------------------------------------------------------
# latency decomposition


@dataclass
class NodeBreakdown:
    function: str
    platform_id: str
    exec_us: int
    compute_us: int
    db_us: int
    block_wait_us: int
    conserved: bool


@dataclass
class EdgeMetric:
    caller: str
    callee: str
    from_platform: str
    to_platform: str
    network_us: int
    in_block: bool


@dataclass
class DbMetric:
    function: str
    platform_id: str
    service: str
    op: str
    duration_us: int
    in_block: bool


@dataclass
class AsyncEdgeMetric:
    origin_platform: str
    dest_platform: str
    caller: str
    target: str
    publish_latency_us: int
    trigger_delay_us: int | None


@dataclass
class OneWayEstimate:
    caller: str
    callee: str
    from_platform: str
    to_platform: str
    estimate_us: float


@dataclass
class LatencyBreakdown:
    context_id: str
    root_pair: str
    entry_function: str
    root_round_trip_us: int
    root_network_us: int
    nodes: list[NodeBreakdown] = field(default_factory=list)
    edges: list[EdgeMetric] = field(default_factory=list)
    dbs: list[DbMetric] = field(default_factory=list)
    asyncs: list[AsyncEdgeMetric] = field(default_factory=list)
    total_compute_us: int = 0
    total_network_us: int = 0
    total_db_us: int = 0

    @property
    def conservation_residual_us(self) -> int:
        return self.root_round_trip_us - (self.total_compute_us + self.total_network_us + self.total_db_us)


def decompose(tree: CallTree) -> LatencyBreakdown:
    """Split one complete tree into compute/network/db components."""
    if not tree.complete or tree.root is None or tree.root_node is None:
        raise IncompleteTree(f"context {tree.context_id} is incomplete")
    root = tree.root
    root_node = tree.root_node
    bd = LatencyBreakdown(
        context_id=tree.context_id,
        root_pair=root.pair_id,
        entry_function=root.callee or root_node.record.function,
        root_round_trip_us=root.duration_us,
        root_network_us=root.duration_us - root_node.record.duration_us,
    )
    bd.total_network_us = bd.root_network_us
    _decompose_node(root_node, True, bd)
    return bd


def _decompose_node(node: TreeNode, conserved: bool, bd: LatencyBreakdown) -> None:
    rec = node.record
    sync_edges = [e for e in node.calls if e.mode == MODE_SYNC]
    async_edges = [e for e in node.calls if e.mode == MODE_ASYNC]

    items: list[tuple[int, int, str, object]] = []
    for e in sync_edges:
        items.append((e.record.start_us, e.record.end_us, "edge", e))
    for db in node.db_calls:
        items.append((db.start_us, db.end_us, "db", db))
    items.sort(key=lambda it: (it[0], it[1]))

    seq_sync_us = 0
    seq_db_us = 0
    block_wait_us = 0
    i = 0
    while i < len(items):
        cluster = [items[i]]
        cluster_end = items[i][1]
        j = i + 1
        while j < len(items) and items[j][0] < cluster_end:
            cluster.append(items[j])
            cluster_end = max(cluster_end, items[j][1])
            j += 1
        in_block = len(cluster) > 1
        if in_block:
            span = cluster_end - cluster[0][0]
            block_wait_us += span
        for start, end, kind, item in cluster:
            if kind == "db":
                db_rec: TraceRecord = item
                bd.dbs.append(
                    DbMetric(rec.function, rec.platform_id, db_rec.callee or "?", db_rec.db_op or "?",
                             db_rec.duration_us, in_block)
                )
                if not in_block:
                    seq_db_us += db_rec.duration_us
            else:
                edge: TreeEdge = item
                child = edge.child
                network = edge.record.duration_us - child.record.duration_us
                bd.edges.append(
                    EdgeMetric(rec.function, child.record.function, rec.platform_id,
                               child.record.platform_id, network, in_block)
                )
                if not in_block:
                    seq_sync_us += edge.record.duration_us
                if conserved and not in_block:
                    bd.total_network_us += network
                _decompose_node(child, conserved and not in_block, bd)
        i = j

    compute = rec.duration_us - seq_sync_us - seq_db_us - block_wait_us
    bd.nodes.append(
        NodeBreakdown(rec.function, rec.platform_id, rec.duration_us, compute, seq_db_us, block_wait_us, conserved)
    )
    if conserved:
        bd.total_compute_us += compute
        bd.total_db_us += seq_db_us
        bd.total_network_us += block_wait_us

    for e in async_edges:
        pub = e.child
        publish_latency = e.record.duration_us - pub.record.duration_us
        trigger_edges = [t for t in pub.calls if t.mode == MODE_TRIGGER]
        if not trigger_edges:
            bd.asyncs.append(
                AsyncEdgeMetric(e.record.platform_id, pub.record.platform_id, rec.function,
                                e.record.callee or "?", publish_latency, None)
            )
        for t in trigger_edges:
            triggered = t.child
            delay = triggered.record.start_us - pub.record.start_us
            bd.asyncs.append(
                AsyncEdgeMetric(e.record.platform_id, pub.record.platform_id, rec.function,
                                e.record.callee or "?", publish_latency, delay)
            )
            _decompose_node(triggered, False, bd)
        _decompose_publisher(pub, bd)


def _decompose_publisher(pub: TreeNode, bd: LatencyBreakdown) -> None:
    rec = pub.record
    bd.nodes.append(
        NodeBreakdown(rec.function, rec.platform_id, rec.duration_us, rec.duration_us, 0, 0, False)
    )


def trigger_metrics(trees: list[CallTree]) -> tuple[list[AsyncEdgeMetric], list[AsyncEdgeMetric]]:
    """(publish latencies, trigger delays) over all paired async edges;
    sync-only trees contribute nothing."""
    publishes: list[AsyncEdgeMetric] = []
    triggers: list[AsyncEdgeMetric] = []
    for tree in trees:
        for node in tree.nodes():
            for e in node.calls:
                if e.mode != MODE_ASYNC or e.child is None:
                    continue
                pub = e.child
                publish_latency = e.record.duration_us - pub.record.duration_us
                base = AsyncEdgeMetric(
                    e.record.platform_id, pub.record.platform_id, node.record.function,
                    e.record.callee or "?", publish_latency, None,
                )
                publishes.append(base)
                for t in pub.calls:
                    if t.mode == MODE_TRIGGER and t.child is not None:
                        delay = t.child.record.start_us - pub.record.start_us
                        triggers.append(
                            AsyncEdgeMetric(base.origin_platform, base.dest_platform, base.caller,
                                            base.target, publish_latency, delay)
                        )
    return publishes, triggers


def estimate_skew_corrected_network(tree: CallTree) -> list[OneWayEstimate]:
    """Per sync edge: (caller round trip − callee execution) / 2. Duration
    based, so constant per-platform clock offsets cancel; under asymmetric
    legs the estimate is the two-leg mean (documented bias)."""
    out: list[OneWayEstimate] = []
    for node in tree.nodes():
        for e in node.calls:
            if e.mode != MODE_SYNC or e.child is None:
                continue
            est = (e.record.duration_us - e.child.record.duration_us) / 2
            out.append(
                OneWayEstimate(node.record.function, e.child.record.function,
                               node.record.platform_id, e.child.record.platform_id, est)
            )
    return out


# ---------------------------------------------------------------------------
# cold starts


@dataclass
class PhaseWindow:
    name: str
    kind: str
    start_us: int
    end_us: int


@dataclass
class BucketStat:
    index: int
    count: int
    cold: int
    p50_exec_us: float | None


@dataclass
class ColdstartReport:
    total_invocations: int
    total_cold: int
    per_phase: list[tuple[str, int, int]]  # (phase name, invocations, cold)
    timeline: list[BucketStat]  # first burst phase, per-second, first 30 s


def coldstart_report(records: list[TraceRecord], phases: list[PhaseWindow] | None = None,
                     timeline_seconds: int = 30) -> ColdstartReport:
    invs = [r for r in records if r.kind == INVOCATION]
    total_cold = sum(1 for r in invs if r.cold_start)
    per_phase: list[tuple[str, int, int]] = []
    timeline: list[BucketStat] = []
    if phases:
        for ph in phases:
            within = [r for r in invs if ph.start_us <= r.start_us < ph.end_us]
            per_phase.append((ph.name, len(within), sum(1 for r in within if r.cold_start)))
        bursts = [ph for ph in phases if ph.kind == "burst"]
        if bursts:
            # the cold-start profile lives in the load-peak phase: the last
            # burst (the one after any pause)
            burst = bursts[-1]
            for i in range(timeline_seconds):
                lo = burst.start_us + i * 1_000_000
                hi = lo + 1_000_000
                bucket = [r for r in invs if lo <= r.start_us < hi]
                execs = sorted(r.duration_us for r in bucket)
                timeline.append(
                    BucketStat(i, len(bucket), sum(1 for r in bucket if r.cold_start),
                               nearest_rank(execs, 0.5) if execs else None)
                )
    return ColdstartReport(len(invs), total_cold, per_phase, timeline)


def coldstart_crosscheck(records: list[TraceRecord]) -> int:
    """Recompute cold flags from first appearance of each executor key;
    returns the number of records whose logged flag disagrees."""
    invs = sorted(
        (r for r in records if r.kind == INVOCATION and r.executor_key),
        key=lambda r: (r.start_us, r.end_us, r.pair_id),
    )
    first: dict[str, str] = {}
    for r in invs:
        first.setdefault(r.executor_key, r.pair_id)
    return sum(1 for r in invs if bool(r.cold_start) != (first[r.executor_key] == r.pair_id))


# ---------------------------------------------------------------------------
# summaries


@dataclass(frozen=True)
class SummaryStats:
    count: int
    min: float | None = None
    p25: float | None = None
    p50: float | None = None
    p75: float | None = None
    max: float | None = None
    whisker_low: float | None = None
    whisker_high: float | None = None
    drop_count: int | None = None


def nearest_rank(sorted_values, p: float):
    """Nearest-rank quantile on an ascending list (1-based ceil(p*n))."""
    n = len(sorted_values)
    if n == 0:
        raise ValueError("empty")
    idx = max(1, math.ceil(p * n))
    return sorted_values[idx - 1]


def summary_stats(values, drop_count: int | None = None) -> SummaryStats:
    vals = sorted(values)
    if not vals:
        return SummaryStats(count=0, drop_count=drop_count)
    p25 = nearest_rank(vals, 0.25)
    p75 = nearest_rank(vals, 0.75)
    iqr = p75 - p25
    lo_limit = p25 - 1.5 * iqr
    hi_limit = p75 + 1.5 * iqr
    inside = [v for v in vals if lo_limit <= v <= hi_limit]
    return SummaryStats(
        count=len(vals),
        min=vals[0],
        p25=p25,
        p50=nearest_rank(vals, 0.5),
        p75=p75,
        max=vals[-1],
        whisker_low=min(inside) if inside else None,
        whisker_high=max(inside) if inside else None,
        drop_count=drop_count,
    )


def summarize(groups: dict[str, list], include_all: bool = True) -> dict[str, SummaryStats]:
    """Per-group nearest-rank summaries; adds an ``_all`` pooled group."""
    out = {key: summary_stats(vals) for key, vals in sorted(groups.items())}
    if include_all and groups:
        pooled: list = []
        for vals in groups.values():
            pooled.extend(vals)
        out["_all"] = summary_stats(pooled)
    return out


# ---------------------------------------------------------------------------
# whole-run analysis and report files


@dataclass
class RunAnalysis:
    parse: ParseReport
    trees: list[CallTree]
    breakdowns: list[LatencyBreakdown]
    coldstart: ColdstartReport
    cold_flag_mismatches: int
    metrics: dict[str, dict[str, list]]
    phases: list[PhaseWindow] | None = None

    @property
    def complete_trees(self) -> int:
        return sum(1 for t in self.trees if t.complete)

    @property
    def incomplete_trees(self) -> int:
        return sum(1 for t in self.trees if not t.complete)

    def summaries(self) -> dict[str, dict[str, SummaryStats]]:
        return {metric: summarize(groups) for metric, groups in self.metrics.items()}


def analyze_records(records: list[TraceRecord], parse_report: ParseReport,
                    phases: list[PhaseWindow] | None = None) -> RunAnalysis:
    trees = build_trees(records)
    breakdowns = []
    for tree in trees:
        if tree.complete:
            breakdowns.append(decompose(tree))

    metrics: dict[str, dict[str, list]] = {
        "root_round_trip": {},
        "exec_duration": {},
        "compute": {},
        "network": {},
        "network_oneway": {},
        "db": {},
        "publish_latency": {},
        "trigger_delay": {},
    }

    def add(metric: str, group: str, value) -> None:
        metrics[metric].setdefault(group, []).append(value)

    # record-level metric: execution durations (usable under log loss)
    for r in records:
        if r.kind == INVOCATION:
            add("exec_duration", r.function, r.duration_us)

    for bd in breakdowns:
        add("root_round_trip", bd.entry_function, bd.root_round_trip_us)
        for nd in bd.nodes:
            add("compute", nd.function, nd.compute_us)
        for em in bd.edges:
            add("network", f"{em.caller}->{em.callee}", em.network_us)
        for dm in bd.dbs:
            add("db", f"{dm.platform_id}/{dm.service}", dm.duration_us)

    complete_trees = [t for t in trees if t.complete]
    for tree in complete_trees:
        for est in estimate_skew_corrected_network(tree):
            add("network_oneway", f"{est.from_platform}->{est.to_platform}", est.estimate_us)

    publishes, triggers = trigger_metrics(complete_trees)
    for m in publishes:
        add("publish_latency", f"{m.origin_platform}->{m.dest_platform}", m.publish_latency_us)
    for m in triggers:
        add("trigger_delay", f"{m.origin_platform}->{m.dest_platform}", m.trigger_delay_us)

    return RunAnalysis(
        parse=parse_report,
        trees=trees,
        breakdowns=breakdowns,
        coldstart=coldstart_report(records, phases),
        cold_flag_mismatches=coldstart_crosscheck(records),
        metrics=metrics,
        phases=phases,
    )


def analyze_log_text(text: str, phases: list[PhaseWindow] | None = None) -> RunAnalysis:
    records, report = parse_logs(text)
    return analyze_records(records, report, phases)


def _stats_row(metric: str, group: str, s: SummaryStats) -> list:
    return [metric, group, s.count, s.min, s.p25, s.p50, s.p75, s.max, s.whisker_low, s.whisker_high]


def write_reports(analysis: RunAnalysis, out_dir: str | Path, charts: bool = False) -> dict[str, str]:
    """Write summary.json plus the CSV tables; returns {name: path}."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, str] = {}

    summaries = analysis.summaries()

    def emit_csv(name: str, header: list[str], rows: list[list]) -> None:
        path = out / name
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        written[name] = str(path)

    stat_header = ["metric", "group", "count", "min_us", "p25_us", "p50_us", "p75_us", "max_us",
                   "whisker_low_us", "whisker_high_us"]
    rows = []
    for metric, groups in summaries.items():
        for group, s in groups.items():
            rows.append(_stats_row(metric, group, s))
    emit_csv("summary.csv", stat_header, rows)

    emit_csv(
        "trees.csv",
        ["context", "entry", "root_round_trip_us", "compute_us", "network_us", "db_us", "residual_us"],
        [
            [bd.context_id, bd.entry_function, bd.root_round_trip_us, bd.total_compute_us,
             bd.total_network_us, bd.total_db_us, bd.conservation_residual_us]
            for bd in analysis.breakdowns
        ],
    )

    emit_csv(
        "trigger_delays.csv",
        stat_header[1:],
        [_stats_row("trigger_delay", g, s)[1:] for g, s in summaries.get("trigger_delay", {}).items()],
    )
    emit_csv(
        "publish_latency.csv",
        stat_header[1:],
        [_stats_row("publish_latency", g, s)[1:] for g, s in summaries.get("publish_latency", {}).items()],
    )
    emit_csv(
        "cold_starts.csv",
        ["phase", "invocations", "cold"],
        [[name, n, cold] for name, n, cold in analysis.coldstart.per_phase],
    )
    emit_csv(
        "timeline.csv",
        ["bucket_s", "count", "cold", "p50_exec_us"],
        [[b.index, b.count, b.cold, b.p50_exec_us] for b in analysis.coldstart.timeline],
    )

    summary = {
        "schemaVersion": 1,
        "records": analysis.parse.records,
        "parseErrors": analysis.parse.parse_errors,
        "drops": analysis.parse.drops,
        "totalDrops": analysis.parse.total_drops,
        "trees": {
            "total": len(analysis.trees),
            "complete": analysis.complete_trees,
            "incomplete": analysis.incomplete_trees,
        },
        "coldStarts": {
            "invocations": analysis.coldstart.total_invocations,
            "cold": analysis.coldstart.total_cold,
            "flagMismatches": analysis.cold_flag_mismatches,
            "perPhase": [
                {"phase": name, "invocations": n, "cold": c} for name, n, c in analysis.coldstart.per_phase
            ],
        },
        "metrics": {
            metric: {group: _stats_dict(s) for group, s in groups.items()}
            for metric, groups in summaries.items()
        },
    }
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    written["summary.json"] = str(summary_path)

    if charts:
        _write_charts(analysis, out / "charts", written)
    return written


def _stats_dict(s: SummaryStats) -> dict:
    return {
        "count": s.count,
        "min": s.min,
        "p25": s.p25,
        "p50": s.p50,
        "p75": s.p75,
        "max": s.max,
        "whiskerLow": s.whisker_low,
        "whiskerHigh": s.whisker_high,
    }


def _write_charts(analysis: RunAnalysis, chart_dir: Path, written: dict[str, str]) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:  # charts are optional
        return
    chart_dir.mkdir(parents=True, exist_ok=True)
    for metric, groups in analysis.metrics.items():
        named = {g: v for g, v in sorted(groups.items()) if v}
        if not named:
            continue
        fig, ax = plt.subplots(figsize=(max(4, 1 + len(named)), 4))
        ax.boxplot(list(named.values()), tick_labels=list(named.keys()), whis=1.5)
        ax.set_title(metric)
        ax.set_ylabel("microseconds")
        ax.tick_params(axis="x", rotation=45)
        fig.tight_layout()
        path = chart_dir / f"{metric}.png"
        fig.savefig(path)
        plt.close(fig)
        written[f"charts/{metric}.png"] = str(path)
