import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faasbench.records import (
    DB_CALL,
    INVOCATION,
    OUTGOING_CALL,
    ExecutorTag,
    IdSource,
    MalformedRecord,
    RecordSink,
    TraceRecord,
    format_drop_line,
    observe_executor,
    parse_drop_line,
    parse_record,
    serialize_record,
)


def make_invocation(**kw) -> TraceRecord:
    base = dict(
        run_id="r1",
        platform_id="p1",
        kind=INVOCATION,
        function="fn",
        context_id="c" * 32,
        pair_id="a" * 32,
        start_us=10,
        end_us=20,
        executor_key="e" * 32,
        cold_start=True,
    )
    base.update(kw)
    return TraceRecord(**base)


def test_round_trip_all_kinds():
    records = [
        make_invocation(),
        TraceRecord("r1", "p1", OUTGOING_CALL, "fn", "c" * 32, "b" * 32, start_us=5, end_us=9,
                    callee="other", mode="sync"),
        TraceRecord("r1", "p1", OUTGOING_CALL, "fn", "c" * 32, "d" * 32, start_us=5, end_us=9,
                    callee="evt", mode="async"),
        TraceRecord("r1", "loadgen", OUTGOING_CALL, "loadgen", "c" * 32, "f" * 32, start_us=0, end_us=100,
                    callee="frontend", mode="sync"),
        TraceRecord("r1", "p1", DB_CALL, "fn", "c" * 32, "9" * 32, start_us=3, end_us=6,
                    callee="keystore", db_op="get"),
    ]
    for r in records:
        assert parse_record(serialize_record(r)) == r


hexid = st.text(alphabet="0123456789abcdef", min_size=32, max_size=32)
name = st.text(alphabet="abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-", min_size=1, max_size=24)


@settings(max_examples=200)
@given(
    run=name, platform=name, fn=name, ctx=hexid, pair=hexid,
    start=st.integers(min_value=-(10 ** 12), max_value=10 ** 12),
    dur=st.integers(min_value=0, max_value=10 ** 9),
    cold=st.booleans(),
)
def test_round_trip_property(run, platform, fn, ctx, pair, start, dur, cold):
    r = TraceRecord(
        run_id=run, platform_id=platform, kind=INVOCATION, function=fn,
        context_id=ctx, pair_id=pair, start_us=start, end_us=start + dur,
        executor_key="ab" * 16, cold_start=cold,
    )
    assert parse_record(serialize_record(r)) == r


def test_malformed_records_rejected():
    with pytest.raises(MalformedRecord):
        make_invocation(start_us=20, end_us=10).check()
    with pytest.raises(MalformedRecord):
        make_invocation(executor_key=None).check()
    with pytest.raises(MalformedRecord):
        TraceRecord("r", "p", OUTGOING_CALL, "f", "c", "p2", 1, 2).check()  # no callee/mode
    with pytest.raises(MalformedRecord):
        TraceRecord("r", "p", "WEIRD", "f", "c", "p2", 1, 2).check()
    with pytest.raises(MalformedRecord):
        TraceRecord("r", "p", DB_CALL, "f", "c", "p2", 1, 2, callee="svc", db_op="drop").check()


def test_parse_rejects_wrong_field_count():
    with pytest.raises(MalformedRecord):
        parse_record("a\tb\tc\td\te")


def test_sink_rate_limit_cap_arithmetic():
    # 300 records within one virtual second at limit 250 -> 250 kept, 50 dropped
    sink = RecordSink("p1", lines_per_second=250)
    for i in range(300):
        sink.emit(make_invocation(pair_id=f"{i:032x}"), at_us=i * 1000)
    assert len(sink.lines("r1")) == 250
    assert sink.drops == 50


def test_sink_window_is_tumbling():
    sink = RecordSink("p1", lines_per_second=2)
    times = [0, 100, 900, 1_000_000, 1_000_001, 1_999_999, 2_000_000]
    accepted = [sink.emit(make_invocation(pair_id=f"{i:032x}"), at_us=t) for i, t in enumerate(times)]
    assert accepted == [True, True, False, True, True, False, True]


def test_unlimited_sink_never_drops():
    sink = RecordSink("p1", lines_per_second=None)
    for i in range(1000):
        sink.emit(make_invocation(pair_id=f"{i:032x}"), at_us=0)
    assert sink.drops == 0


def test_sink_validates_on_emit():
    sink = RecordSink("p1")
    with pytest.raises(MalformedRecord):
        sink.emit(make_invocation(start_us=9, end_us=1), at_us=0)


def test_sink_applies_clock_offset_to_lines_only():
    record = make_invocation(start_us=100, end_us=200)
    sink = RecordSink("p1", clock_offset_us=50_000)
    sink.emit(record, at_us=200)
    parsed = parse_record(sink.lines("r1")[0])
    assert parsed.start_us == 50_100 and parsed.end_us == 50_200
    assert record.start_us == 100  # the record object keeps true time


def test_sink_separates_runs():
    sink = RecordSink("p1")
    sink.emit(make_invocation(run_id="rA"), at_us=0)
    sink.emit(make_invocation(run_id="rB"), at_us=1)
    assert len(sink.lines("rA")) == 1
    assert len(sink.lines("rB")) == 1
    assert "rB" in sink.lines("rB")[0]


def test_id_source_uniqueness_at_scale():
    ids = IdSource(np.random.default_rng(0))
    seen = {ids.new_context() for _ in range(100_000)}
    assert len(seen) == 100_000


def test_id_source_replay_under_seed():
    a = IdSource(np.random.default_rng(42))
    b = IdSource(np.random.default_rng(42))
    assert [a.new_context() for _ in range(10)] == [b.new_context() for _ in range(10)]
    assert a.new_pair() == b.new_pair()


def test_id_format():
    ids = IdSource(np.random.default_rng(1))
    ctx = ids.new_context()
    assert len(ctx) == 32 and int(ctx, 16) >= 0


def test_observe_executor_cold_then_warm():
    tag = ExecutorTag("k" * 32)
    key, cold = observe_executor(tag)
    assert cold and key == "k" * 32
    key2, cold2 = observe_executor(tag)
    assert key2 == key and not cold2
    other = ExecutorTag("j" * 32)
    assert observe_executor(other)[0] != key


def test_drop_line_round_trip():
    line = format_drop_line("p1", 42)
    assert parse_drop_line(line) == ("p1", 42)
    with pytest.raises(ValueError):
        parse_drop_line("#dropped p1")
