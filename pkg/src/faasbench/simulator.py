"""Deterministic discrete-event FaaS platform simulator.

One :class:`SimEnvironment` hosts every simulated platform of a run behind a
single event kernel (virtual time is integer microseconds from the run
epoch). Invocations run as generator tasks that yield either a delay or
another task to wait on; the kernel's heap is a stable priority queue, so a
fixed seed fully determines the emitted log byte stream.

Platform semantics:

* Executors serve one request at a time. An arrival reuses the most recently
  idle executor of its function if that executor's idle time is within the
  keep-alive window; otherwise a fresh executor is created and the invocation
  pays the cold-start delay before its body runs. Logged invocation
  timestamps span accept-to-completion, so a cold start is contained in the
  logged execution duration.
* Network legs are sampled one-way and independently per direction from the
  sending side's latency table (the load generator's legs use the platform's
  ``loadgen`` entry).
* A publish delivers the event to the target platform's publisher function
  (one outbound leg); the caller resumes at accept. The publisher runs with
  ordinary executor semantics, and the triggered function's arrival is
  scheduled at publisher-accept plus a trigger-delay sample.
* Keyed-store operations cost one sample of the calling platform's latency
  entry for the service; the store itself is never a bottleneck.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np

from .applications import EVENT_ASYNC, DEFAULT_RESPONSE_BYTES
from .deployment import (
    AdapterFailure,
    DeploymentConfig,
    DeploymentError,
    Endpoint,
    PublishRoute,
    ResolvedFunction,
    publisher_name,
)
from .distributions import Duration
from .records import (
    DB_CALL,
    INVOCATION,
    LOADGEN,
    MODE_ASYNC,
    MODE_SYNC,
    MODE_TRIGGER,
    OUTGOING_CALL,
    ExecutorTag,
    HEADER_LINE,
    IdSource,
    RecordSink,
    TraceRecord,
    format_drop_line,
)


class SimulationError(Exception):
    pass


class NotDeployed(SimulationError):
    def __init__(self, name: str):
        super().__init__(f"function {name!r} is not deployed on this platform")
        self.function = name


class UnknownEndpoint(SimulationError):
    def __init__(self, endpoint_id: str):
        super().__init__(f"endpoint {endpoint_id!r} cannot be resolved")
        self.endpoint_id = endpoint_id


class NotAsync(SimulationError):
    def __init__(self, name: str):
        super().__init__(f"function {name!r} is not event-async")
        self.function = name


class NoServiceBinding(SimulationError):
    def __init__(self, detail: str):
        super().__init__(detail)


class Task:
    """A resumable generator process managed by the kernel."""

    __slots__ = ("gen", "done", "result", "waiters")

    def __init__(self, gen):
        self.gen = gen
        self.done = False
        self.result = None
        self.waiters: list[Task] = []


class Kernel:
    """Stable-priority event loop over (fire_at, insertion order)."""

    def __init__(self) -> None:
        self.now = 0
        self._heap: list[tuple[int, int, Task, object]] = []
        self._seq = itertools.count()

    def spawn(self, gen, delay_us: int = 0, at_us: int | None = None) -> Task:
        task = Task(gen)
        fire = self.now + delay_us if at_us is None else at_us
        if fire < self.now:
            raise SimulationError(f"cannot schedule in the past ({fire} < {self.now})")
        heapq.heappush(self._heap, (fire, next(self._seq), task, None))
        return task

    def _resume(self, task: Task, delay_us: int, value=None) -> None:
        if delay_us < 0:
            raise SimulationError(f"negative delay {delay_us}")
        heapq.heappush(self._heap, (self.now + delay_us, next(self._seq), task, value))

    def run_until_idle(self) -> None:
        while self._heap:
            fire, _, task, value = heapq.heappop(self._heap)
            self.now = fire
            self._step(task, value)

    def _step(self, task: Task, value) -> None:
        try:
            cmd = task.gen.send(value)
        except StopIteration as stop:
            task.done = True
            task.result = stop.value
            for waiter in task.waiters:
                self._resume(waiter, 0, stop.value)
            task.waiters.clear()
            return
        if isinstance(cmd, Task):
            if cmd.done:
                self._resume(task, 0, cmd.result)
            else:
                cmd.waiters.append(task)
        else:
            self._resume(task, int(cmd))


class Executor:
    """One runtime instance; serves its function's invocations sequentially."""

    __slots__ = ("tag", "function", "created_at", "last_idle_at", "busy")

    def __init__(self, tag: ExecutorTag, function: str, created_at: int):
        self.tag = tag
        self.function = function
        self.created_at = created_at
        self.last_idle_at = created_at
        self.busy = True

    @property
    def key(self) -> str:
        return self.tag.key


class KeyedStore:
    """Simulated keyed value store; over-provisioned, never rejects."""

    def __init__(self) -> None:
        self._values: dict[tuple[str, str], int] = {}

    def set(self, service: str, key: str, size: int) -> int:
        self._values[(service, key)] = size
        return size

    def get(self, service: str, key: str) -> int:
        # absent key replies with an empty marker of size 0
        return self._values.get((service, key), 0)


@dataclass(frozen=True)
class ExecutorBirth:
    platform_id: str
    function: str
    key: str
    at_us: int


@dataclass(frozen=True)
class TruthEdge:
    context_id: str
    parent_pair: str | None
    pair: str
    kind: str  # root | sync | async | trigger | db


@dataclass(frozen=True)
class TruthInvocation:
    context_id: str
    pair: str
    function: str
    platform_id: str
    arrival_us: int
    body_start_us: int
    end_us: int
    cold: bool
    executor_key: str


@dataclass
class GroundTruth:
    """Simulator-exported truth used by analyzer fidelity checks."""

    executors: list[ExecutorBirth] = field(default_factory=list)
    edges: list[TruthEdge] = field(default_factory=list)
    invocations: list[TruthInvocation] = field(default_factory=list)
    wire_bytes: int = 0  # payloads plus the per-call tracing token

    def executor_count(self) -> int:
        return len(self.executors)

    def edge_set(self) -> set[tuple[str, str | None, str, str]]:
        return {(e.context_id, e.parent_pair, e.pair, e.kind) for e in self.edges}


@dataclass
class _Frame:
    """Execution context of one invocation body."""

    platform: "SimPlatform"
    rfn: ResolvedFunction
    context_id: str
    inbound_pair: str


class SimPlatform:
    """A simulated platform; implements the adapter interface for itself."""

    def __init__(self, env: "SimEnvironment", spec):
        self.env = env
        self.spec = spec
        self.id = spec.id
        self.sink = RecordSink(spec.id, spec.log_lines_per_second, spec.clock_offset_us)
        self._functions: dict[str, ResolvedFunction] = {}
        self._endpoints: dict[str, str] = {}
        self._idle: dict[str, list[Executor]] = {}

    # -- PlatformAdapter surface -------------------------------------------

    def deploy(self, artifact) -> None:
        if artifact.platform_id != self.id:
            raise AdapterFailure(self.id, f"artifact targets {artifact.platform_id!r}")
        for rfn in artifact.functions:
            self._functions[rfn.name] = rfn
            self._endpoints[endpoint_id(self.id, rfn.name)] = rfn.name

    def collect_logs(self, run_id: str) -> list[str]:
        return self.sink.lines(run_id) + [format_drop_line(self.id, self.sink.drops)]

    def remove(self, artifact) -> None:
        self._functions.clear()
        self._endpoints.clear()
        self._idle.clear()

    # -- public simulation operations --------------------------------------

    @property
    def deployed_functions(self) -> tuple[str, ...]:
        return tuple(self._functions)

    def invoke(
        self,
        fn_name: str,
        arrival_us: int,
        context_id: str | None = None,
        pair_id: str | None = None,
        payload_bytes: int = 0,
    ) -> Task:
        """Schedule an invocation arrival; the task result is (end_us, size)."""
        if fn_name not in self._functions:
            raise NotDeployed(fn_name)
        ctx = context_id if context_id is not None else self.env.ids.new_context()
        pair = pair_id if pair_id is not None else self.env.ids.new_pair()
        self.env.account_wire(payload_bytes)

        def gen():
            result = yield self.start_invocation(fn_name, ctx, pair)
            return result

        return self.env.kernel.spawn(gen(), at_us=arrival_us)

    def publish_event(self, target: str, at_us: int, context_id: str | None = None) -> Task:
        """Deliver one event for ``target`` to this platform's publisher."""
        rfn = self._functions.get(target)
        if rfn is None:
            raise NotDeployed(target)
        if rfn.spec.trigger_kind != EVENT_ASYNC:
            raise NotAsync(target)
        pub = publisher_name(self.id)
        if pub not in self._functions:
            raise NotDeployed(pub)
        ctx = context_id if context_id is not None else self.env.ids.new_context()
        pair1 = self.env.ids.new_pair()
        route = PublishRoute(
            target=target,
            publisher=Endpoint(self.id, endpoint_id(self.id, pub)),
            target_endpoint=Endpoint(self.id, endpoint_id(self.id, target)),
        )

        def gen():
            result = yield self._start_publisher(ctx, pair1, route)
            return result

        return self.env.kernel.spawn(gen(), at_us=at_us)

    # -- invocation machinery ----------------------------------------------

    def start_invocation(self, fn_name: str, context_id: str, inbound_pair: str) -> Task:
        """Begin serving an arrival at the current virtual time."""
        rfn = self._functions.get(fn_name)
        if rfn is None:
            raise NotDeployed(fn_name)
        arrival = self.env.kernel.now
        executor, cold = self._acquire(fn_name, arrival)
        gen = self._invocation_gen(rfn, context_id, inbound_pair, arrival, executor, cold)
        return self.env.kernel.spawn(gen)

    def start_invocation_by_endpoint(self, ep_id: str, context_id: str, inbound_pair: str) -> Task:
        fn_name = self._endpoints.get(ep_id)
        if fn_name is None:
            raise UnknownEndpoint(ep_id)
        return self.start_invocation(fn_name, context_id, inbound_pair)

    def _acquire(self, fn_name: str, arrival: int) -> tuple[Executor, bool]:
        pool = self._idle.get(fn_name, [])
        alive = [e for e in pool if e.last_idle_at + self.spec.keep_alive_us >= arrival]
        if alive:
            best = max(range(len(alive)), key=lambda i: (alive[i].last_idle_at, i))
            executor = alive.pop(best)
            self._idle[fn_name] = alive
            executor.busy = True
            return executor, False
        self._idle[fn_name] = []
        key = self.env.ids.new_executor_key()
        executor = Executor(ExecutorTag(key), fn_name, arrival)
        self.env.truth.executors.append(ExecutorBirth(self.id, fn_name, key, arrival))
        return executor, True

    def _release(self, executor: Executor, at_us: int) -> None:
        executor.busy = False
        executor.last_idle_at = at_us
        self._idle.setdefault(executor.function, []).append(executor)

    def _invocation_gen(self, rfn, context_id, inbound_pair, arrival, executor, cold):
        env = self.env
        key, cold_flag = executor.tag.observe()
        if cold:
            delay = env.sample_us(self.spec.cold_start_delay)
            if delay:
                yield delay
        body_start = env.kernel.now
        frame = _Frame(self, rfn, context_id, inbound_pair)
        size = yield from self._run_body(frame, rfn.spec.body)
        end = env.kernel.now
        self._release(executor, end)
        self.sink.emit(
            TraceRecord(
                run_id=env.run_id,
                platform_id=self.id,
                kind=INVOCATION,
                function=rfn.name,
                context_id=context_id,
                pair_id=inbound_pair,
                start_us=arrival,
                end_us=end,
                executor_key=key,
                cold_start=cold_flag,
            ),
            at_us=end,
        )
        env.truth.invocations.append(
            TruthInvocation(context_id, inbound_pair, rfn.name, self.id, arrival, body_start, end, cold_flag, key)
        )
        return end, size

    def _run_body(self, frame: _Frame, steps):
        env = self.env
        response = DEFAULT_RESPONSE_BYTES
        for step in steps:
            if step.kind == "compute":
                d = env.sample_us(step.compute_time)
                if d:
                    yield d
            elif step.kind == "call":
                yield from self._sync_call(frame, step)
            elif step.kind == "publish":
                # caller idles until the event is accepted downstream
                yield self._publish(frame, step)
            elif step.kind in ("dbGet", "dbSet"):
                yield from self._db_op(frame, step)
            elif step.kind == "parallelBlock":
                branches = [env.kernel.spawn(self._run_body(frame, branch)) for branch in step.branches]
                for branch in branches:
                    yield branch
            elif step.kind == "return":
                response = step.size_bytes
                break
        return response

    def _sync_call(self, frame: _Frame, step):
        env = self.env
        t0 = env.kernel.now
        pair = env.ids.new_pair()
        ep = frame.rfn.call_routes[step.target]
        env.account_wire(step.payload_bytes)
        out = env.leg_us(self.id, ep.platform_id)
        yield out
        callee = env.platforms[ep.platform_id]
        task = callee.start_invocation_by_endpoint(ep.endpoint_id, frame.context_id, pair)
        result = yield task
        back = env.leg_us(ep.platform_id, self.id)
        yield back
        end = env.kernel.now
        self.sink.emit(
            TraceRecord(
                run_id=env.run_id,
                platform_id=self.id,
                kind=OUTGOING_CALL,
                function=frame.rfn.name,
                context_id=frame.context_id,
                pair_id=pair,
                callee=step.target,
                mode=MODE_SYNC,
                start_us=t0,
                end_us=end,
            ),
            at_us=end,
        )
        env.truth.edges.append(TruthEdge(frame.context_id, frame.inbound_pair, pair, "sync"))
        return result[1] if result else 0

    def _publish(self, frame: _Frame, step) -> int:
        """Send one event toward its publisher; returns the delivery leg."""
        env = self.env
        t0 = env.kernel.now
        pair1 = env.ids.new_pair()
        route = frame.rfn.publish_routes[step.target]
        env.account_wire(step.payload_bytes)
        out = env.leg_us(self.id, route.publisher.platform_id)
        dest = env.platforms[route.publisher.platform_id]
        env.kernel.spawn(self._async_delivery(frame, t0, pair1, step.target, route, dest), delay_us=out)
        return out

    def _async_delivery(self, frame: _Frame, t0: int, pair1: str, target: str, route, dest):
        env = self.env
        pub_task = dest._start_publisher(frame.context_id, pair1, route)
        yield pub_task
        end = env.kernel.now
        self.sink.emit(
            TraceRecord(
                run_id=env.run_id,
                platform_id=self.id,
                kind=OUTGOING_CALL,
                function=frame.rfn.name,
                context_id=frame.context_id,
                pair_id=pair1,
                callee=target,
                mode=MODE_ASYNC,
                start_us=t0,
                end_us=end,
            ),
            at_us=end,
        )
        env.truth.edges.append(TruthEdge(frame.context_id, frame.inbound_pair, pair1, "async"))

    def _start_publisher(self, context_id: str, pair1: str, route: PublishRoute) -> Task:
        """Accept an event: schedule the trigger and run the publisher."""
        env = self.env
        accept = env.kernel.now
        pub = publisher_name(self.id)
        if pub not in self._functions:
            raise NotDeployed(pub)
        pair2 = env.ids.new_pair()
        trig = env.sample_us(self.spec.trigger_delay)
        self.sink.emit(
            TraceRecord(
                run_id=env.run_id,
                platform_id=self.id,
                kind=OUTGOING_CALL,
                function=pub,
                context_id=context_id,
                pair_id=pair2,
                callee=route.target,
                mode=MODE_TRIGGER,
                start_us=accept,
                end_us=accept,
            ),
            at_us=accept,
        )
        env.truth.edges.append(TruthEdge(context_id, pair1, pair2, "trigger"))
        env.kernel.spawn(self._trigger_fire(route, context_id, pair2), delay_us=trig)
        return self.start_invocation(pub, context_id, pair1)

    def _trigger_fire(self, route: PublishRoute, context_id: str, pair2: str):
        target_platform = self.env.platforms[route.target_endpoint.platform_id]
        task = target_platform.start_invocation_by_endpoint(route.target_endpoint.endpoint_id, context_id, pair2)
        result = yield task
        return result

    def _db_op(self, frame: _Frame, step):
        env = self.env
        if not frame.rfn.service_routes:
            raise NoServiceBinding(f"{frame.rfn.name}: db step but no service bound")
        service = next(iter(frame.rfn.service_routes))
        t0 = env.kernel.now
        pair = env.ids.new_pair()
        latency = env.db_latency_us(self.id, service)
        yield latency
        if step.kind == "dbSet":
            size = env.store.set(service, step.key, step.value_size)
            op = "set"
        else:
            size = env.store.get(service, step.key)
            op = "get"
        end = env.kernel.now
        self.sink.emit(
            TraceRecord(
                run_id=env.run_id,
                platform_id=self.id,
                kind=DB_CALL,
                function=frame.rfn.name,
                context_id=frame.context_id,
                pair_id=pair,
                callee=service,
                db_op=op,
                start_us=t0,
                end_us=end,
            ),
            at_us=end,
        )
        env.truth.edges.append(TruthEdge(frame.context_id, frame.inbound_pair, pair, "db"))
        return size


def endpoint_id(platform_id: str, fn_name: str) -> str:
    return f"ep/{platform_id}/{fn_name}"


class SimEnvironment:
    """All simulated platforms of one run behind a single event kernel."""

    def __init__(self, config: DeploymentConfig, seed: int):
        self.config = config
        ss = np.random.SeedSequence(seed)
        ids_ss, sample_ss, loadgen_ss = ss.spawn(3)
        self.ids = IdSource(np.random.default_rng(ids_ss))
        self.sample_rng = np.random.default_rng(sample_ss)
        self.loadgen_rng = np.random.default_rng(loadgen_ss)
        self.kernel = Kernel()
        self.store = KeyedStore()
        self.truth = GroundTruth()
        self.platforms = {p.id: SimPlatform(self, p) for p in config.platforms}
        self.loadgen_sink = RecordSink(LOADGEN, None, 0)
        self.run_id = "r-unset"

    def begin_run(self, run_id: str) -> None:
        self.run_id = run_id

    def adapters(self) -> dict[str, SimPlatform]:
        return dict(self.platforms)

    def sample_us(self, dist: Duration) -> int:
        return dist.sample(self.sample_rng)

    def account_wire(self, payload_bytes: int) -> None:
        """Track bytes put on the wire per call: payload plus the constant
        tracing token (latency is size-independent by design)."""
        self.truth.wire_bytes += payload_bytes + self.config.tracing_overhead_bytes

    def leg_us(self, src: str, dst: str) -> int:
        """One one-way network leg; the sending side's table provides the
        distribution, except legs from the load generator which use the
        receiving platform's ``loadgen`` entry."""
        if src == LOADGEN:
            dist = self.platforms[dst].spec.leg(LOADGEN)
        else:
            dist = self.platforms[src].spec.leg(dst)
        return self.sample_us(dist)

    def db_latency_us(self, platform_id: str, service: str) -> int:
        try:
            dist = self.platforms[platform_id].spec.leg(service)
        except DeploymentError as exc:
            raise NoServiceBinding(str(exc)) from None
        return self.sample_us(dist)

    def run_until_idle(self) -> None:
        self.kernel.run_until_idle()

    def loadgen_logs(self, run_id: str) -> list[str]:
        return self.loadgen_sink.lines(run_id) + [format_drop_line(LOADGEN, self.loadgen_sink.drops)]

    def collect_log(self, run_id: str) -> str:
        """Aggregate the run's log: header, loadgen section, platforms sorted."""
        out = [HEADER_LINE]
        out.extend(self.loadgen_logs(run_id))
        for pid in sorted(self.platforms):
            out.extend(self.platforms[pid].collect_logs(run_id))
        return "\n".join(out) + "\n"
