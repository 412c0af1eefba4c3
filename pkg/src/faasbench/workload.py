"""Open-loop load generation: phased profiles, arrival synthesis, execution.

A profile is an ordered list of phases. ``constantRate`` phases emit Poisson
arrivals (exponential gaps) of workflows drawn from a weighted mix;
``periodic`` phases emit exact-interval arrivals aimed at entry functions
(optionally as short trains per tick); ``burst`` phases spread an exact flow
count evenly over the phase; ``pause`` phases emit nothing. Arrival times
never depend on response times.

Scaling multiplies burst flow counts and every phase duration by the factor
while leaving rates and periodic intervals untouched, so arrival density and
executor churn are preserved at desk scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .records import LOADGEN, MODE_SYNC, OUTGOING_CALL, TraceRecord
from .simulator import SimEnvironment, TruthEdge, UnknownEndpoint

US = 1_000_000  # microseconds per second


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class WorkflowStep:
    entry: str
    payload_bytes: int = 512
    think_time_us: int = 0


@dataclass(frozen=True)
class Workflow:
    name: str
    steps: tuple[WorkflowStep, ...]


@dataclass(frozen=True)
class PeriodicSeries:
    """Exact-interval arrivals for one entry function. A tick may emit a
    short train of ``train_count`` arrivals ``train_spacing_us`` apart."""

    entry: str
    interval_us: int
    train_count: int = 1
    train_spacing_us: int = US


@dataclass(frozen=True)
class Phase:
    kind: str  # constantRate | periodic | pause | burst
    duration_us: int
    rate_per_s: float = 0.0
    mix: tuple[tuple[str, float], ...] = ()
    series: tuple[PeriodicSeries, ...] = ()
    total_flows: int = 0


@dataclass(frozen=True)
class LoadProfile:
    name: str
    workflows: tuple[Workflow, ...]
    phases: tuple[Phase, ...]

    def workflow(self, name: str) -> Workflow:
        for wf in self.workflows:
            if wf.name == name:
                return wf
        raise ProfileError(f"workflow {name!r} is not defined")

    def check(self) -> None:
        if not self.phases:
            raise ProfileError("profile has no phases")
        if sum(p.duration_us for p in self.phases) <= 0:
            raise ProfileError("total duration must be > 0")
        for wf in self.workflows:
            for step in wf.steps:
                if step.think_time_us < 0 or step.payload_bytes < 0:
                    raise ProfileError(f"workflow {wf.name!r}: negative think time or payload")
        for phase in self.phases:
            if phase.kind not in ("constantRate", "periodic", "pause", "burst"):
                raise ProfileError(f"unknown phase kind {phase.kind!r}")
            if phase.duration_us < 0:
                raise ProfileError("phase duration must be >= 0")
            if phase.kind in ("constantRate", "burst"):
                if not phase.mix:
                    raise ProfileError(f"{phase.kind} phase needs a workflow mix")
                weight = sum(w for _, w in phase.mix)
                if abs(weight - 1.0) > 1e-9:
                    raise ProfileError(f"mix weights must sum to 1 (got {weight})")
                for name, _ in phase.mix:
                    self.workflow(name)
            if phase.kind == "constantRate" and phase.rate_per_s <= 0:
                raise ProfileError("constantRate needs rate > 0")
            if phase.kind == "burst" and phase.total_flows < 1:
                raise ProfileError("burst needs totalFlows >= 1")
            for series in phase.series:
                if series.interval_us <= 0:
                    raise ProfileError("periodic interval must be > 0")
                if series.train_count < 1 or (series.train_count > 1 and series.train_spacing_us <= 0):
                    raise ProfileError("bad periodic train")

    def scaled(self, factor: float) -> "LoadProfile":
        """Scale flow counts and durations by ``factor`` (rates unchanged)."""
        if factor <= 0:
            raise ProfileError("scale factor must be > 0")
        if factor == 1.0:
            return self
        phases = []
        for p in self.phases:
            phases.append(
                replace(
                    p,
                    duration_us=int(round(p.duration_us * factor)),
                    total_flows=max(1, int(round(p.total_flows * factor))) if p.kind == "burst" else p.total_flows,
                )
            )
        return replace(self, phases=tuple(phases))

    def phase_windows(self) -> tuple[tuple[str, int, int], ...]:
        """Absolute (kind, start_us, end_us) windows, phase order preserved."""
        out = []
        t = 0
        for p in self.phases:
            out.append((p.kind, t, t + p.duration_us))
            t += p.duration_us
        return tuple(out)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "workflows": [
                {
                    "name": wf.name,
                    "steps": [
                        {
                            "entry": s.entry,
                            "payloadBytes": s.payload_bytes,
                            "thinkSeconds": s.think_time_us / US,
                        }
                        for s in wf.steps
                    ],
                }
                for wf in self.workflows
            ],
            "phases": [_phase_to_dict(p) for p in self.phases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LoadProfile":
        workflows = tuple(
            Workflow(
                name=w["name"],
                steps=tuple(
                    WorkflowStep(
                        entry=s["entry"],
                        payload_bytes=int(s.get("payloadBytes", 512)),
                        think_time_us=int(round(float(s.get("thinkSeconds", 0)) * US)),
                    )
                    for s in w["steps"]
                ),
            )
            for w in d.get("workflows", [])
        )
        phases = tuple(_phase_from_dict(p) for p in d.get("phases", []))
        profile = cls(name=d.get("name", "profile"), workflows=workflows, phases=phases)
        profile.check()
        return profile

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "LoadProfile":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "LoadProfile":
        return cls.from_json(Path(path).read_text())


def _phase_to_dict(p: Phase) -> dict:
    d: dict = {"kind": p.kind, "durationSeconds": p.duration_us / US}
    if p.kind == "constantRate":
        d["ratePerSecond"] = p.rate_per_s
        d["mix"] = {name: w for name, w in p.mix}
    elif p.kind == "burst":
        d["totalFlows"] = p.total_flows
        d["mix"] = {name: w for name, w in p.mix}
    elif p.kind == "periodic":
        d["series"] = [
            {
                "entry": s.entry,
                "intervalSeconds": s.interval_us / US,
                "trainCount": s.train_count,
                "trainSpacingSeconds": s.train_spacing_us / US,
            }
            for s in p.series
        ]
    return d


def _phase_from_dict(d: dict) -> Phase:
    kind = d["kind"]
    duration = int(round(float(d["durationSeconds"]) * US))
    if kind == "constantRate":
        return Phase(
            kind=kind,
            duration_us=duration,
            rate_per_s=float(d["ratePerSecond"]),
            mix=tuple(sorted(d["mix"].items())),
        )
    if kind == "burst":
        return Phase(
            kind=kind,
            duration_us=duration,
            total_flows=int(d["totalFlows"]),
            mix=tuple(sorted(d["mix"].items())),
        )
    if kind == "periodic":
        return Phase(
            kind=kind,
            duration_us=duration,
            series=tuple(
                PeriodicSeries(
                    entry=s["entry"],
                    interval_us=int(round(float(s["intervalSeconds"]) * US)),
                    train_count=int(s.get("trainCount", 1)),
                    train_spacing_us=int(round(float(s.get("trainSpacingSeconds", 1)) * US)),
                )
                for s in d["series"]
            ),
        )
    if kind == "pause":
        return Phase(kind=kind, duration_us=duration)
    raise ProfileError(f"unknown phase kind {kind!r}")


@dataclass(frozen=True)
class Arrival:
    at_us: int
    workflow: Workflow


def validate_profile_against_app(profile: LoadProfile, app) -> None:
    """Every workflow step and periodic series must target an entry point."""
    entries = {fn.name for fn in app.entry_points()}
    for wf in profile.workflows:
        for step in wf.steps:
            if step.entry not in entries:
                raise ProfileError(f"workflow {wf.name!r} targets non-entry function {step.entry!r}")
    for phase in profile.phases:
        for series in phase.series:
            if series.entry not in entries:
                raise ProfileError(f"periodic series targets non-entry function {series.entry!r}")


def builtin_profile(benchmark: str) -> LoadProfile:
    """Default load profile of a built-in benchmark."""
    from . import benchmarks

    return benchmarks.builtin_profile(benchmark)


def schedule(profile: LoadProfile, rng: np.random.Generator) -> list[Arrival]:
    """Synthesize the arrival list for one run; deterministic under the rng."""
    profile.check()
    arrivals: list[Arrival] = []
    phase_start = 0
    for phase in profile.phases:
        phase_end = phase_start + phase.duration_us
        if phase.kind == "constantRate":
            mean_gap = US / phase.rate_per_s
            t = phase_start + rng.exponential(mean_gap)
            while t < phase_end:
                arrivals.append(Arrival(int(round(t)), _pick(profile, phase.mix, rng)))
                t += rng.exponential(mean_gap)
        elif phase.kind == "burst":
            gap = phase.duration_us / phase.total_flows
            for i in range(phase.total_flows):
                arrivals.append(Arrival(phase_start + int(round(i * gap)), _pick(profile, phase.mix, rng)))
        elif phase.kind == "periodic":
            for series in phase.series:
                wf = _entry_workflow(profile, series.entry)
                tick = phase_start + series.interval_us
                while tick <= phase_end:
                    for j in range(series.train_count):
                        at = tick + j * series.train_spacing_us
                        if at <= phase_end:
                            arrivals.append(Arrival(at, wf))
                    tick += series.interval_us
        phase_start = phase_end
    arrivals.sort(key=lambda a: a.at_us)
    return arrivals


def _pick(profile: LoadProfile, mix, rng: np.random.Generator) -> Workflow:
    r = rng.random()
    acc = 0.0
    for name, weight in mix:
        acc += weight
        if r < acc:
            return profile.workflow(name)
    return profile.workflow(mix[-1][0])


def _entry_workflow(profile: LoadProfile, entry: str) -> Workflow:
    for wf in profile.workflows:
        if wf.name == entry and len(wf.steps) == 1:
            return wf
    return Workflow(name=entry, steps=(WorkflowStep(entry=entry),))


@dataclass(frozen=True)
class ExecutionStats:
    instances: int
    root_calls: int


def execute(arrivals: list[Arrival], plan, env: SimEnvironment) -> ExecutionStats:
    """Stamp a fresh context per workflow instance and drive the entry
    endpoints; the load generator records one OUTGOING_CALL per root request
    (client-side round trip)."""
    for arrival in arrivals:
        for step in arrival.workflow.steps:
            if step.entry not in plan.endpoint_table:
                raise UnknownEndpoint(step.entry)
    root_calls = 0
    for arrival in arrivals:
        env.kernel.spawn(_root_flow(env, plan, arrival.workflow), at_us=arrival.at_us)
        root_calls += len(arrival.workflow.steps)
    return ExecutionStats(instances=len(arrivals), root_calls=root_calls)


def _root_flow(env: SimEnvironment, plan, workflow: Workflow):
    context_id = env.ids.new_context()
    for step in workflow.steps:
        pair = env.ids.new_pair()
        ep = plan.endpoint_table[step.entry]
        t0 = env.kernel.now
        env.account_wire(step.payload_bytes)
        out = env.leg_us(LOADGEN, ep.platform_id)
        yield out
        platform = env.platforms[ep.platform_id]
        task = platform.start_invocation_by_endpoint(ep.endpoint_id, context_id, pair)
        yield task
        back = env.leg_us(ep.platform_id, LOADGEN)
        yield back
        end = env.kernel.now
        env.loadgen_sink.emit(
            TraceRecord(
                run_id=env.run_id,
                platform_id=LOADGEN,
                kind=OUTGOING_CALL,
                function=LOADGEN,
                context_id=context_id,
                pair_id=pair,
                callee=step.entry,
                mode=MODE_SYNC,
                start_us=t0,
                end_us=end,
            ),
            at_us=end,
        )
        env.truth.edges.append(TruthEdge(context_id, None, pair, "root"))
        if step.think_time_us:
            yield step.think_time_us
