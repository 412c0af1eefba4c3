"""Benchmark application model: functions with scripted bodies and call edges.

An application is a named set of functions. Each function has a trigger kind
(``http-sync`` functions are invoked by blocking calls, ``event-async``
functions only by published events) and a scripted body: an ordered list of
steps (compute delays, calls, publishes, keyed-store operations, parallel
fan-out blocks, return). Payloads are modeled by size only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .distributions import Duration, parse_duration

HTTP_SYNC = "http-sync"
EVENT_ASYNC = "event-async"

STEP_KINDS = ("compute", "call", "publish", "dbGet", "dbSet", "parallelBlock", "return")

DEFAULT_PAYLOAD_BYTES = 256
DEFAULT_RESPONSE_BYTES = 128


class UnknownBenchmark(KeyError):
    """Requested built-in benchmark name does not exist."""


class InvalidApplication(ValueError):
    """Operation requires a valid application but validation failed."""


@dataclass(frozen=True)
class BodyStep:
    """One scripted step of a function body.

    Fields are kind-dependent: ``compute`` uses compute_time; ``call``/
    ``publish`` use target (and payload_bytes); db steps use key/value_size;
    ``parallelBlock`` holds branch step lists that run concurrently and join
    when all complete; ``return`` carries the response size.
    """

    kind: str
    compute_time: Duration | None = None
    target: str | None = None
    payload_bytes: int = DEFAULT_PAYLOAD_BYTES
    key: str | None = None
    value_size: int = 0
    branches: tuple[tuple["BodyStep", ...], ...] = ()
    size_bytes: int = DEFAULT_RESPONSE_BYTES

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "compute":
            d["duration"] = self.compute_time.spec()
        elif self.kind in ("call", "publish"):
            d["target"] = self.target
            d["payloadBytes"] = self.payload_bytes
        elif self.kind in ("dbGet", "dbSet"):
            d["key"] = self.key
            if self.kind == "dbSet":
                d["valueSize"] = self.value_size
        elif self.kind == "parallelBlock":
            d["branches"] = [[s.to_dict() for s in branch] for branch in self.branches]
        elif self.kind == "return":
            d["sizeBytes"] = self.size_bytes
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BodyStep":
        kind = d.get("kind")
        if kind == "compute":
            return compute(parse_duration(d["duration"]))
        if kind == "call":
            return call(d["target"], payload_bytes=d.get("payloadBytes", DEFAULT_PAYLOAD_BYTES))
        if kind == "publish":
            return publish(d["target"], payload_bytes=d.get("payloadBytes", DEFAULT_PAYLOAD_BYTES))
        if kind == "dbGet":
            return db_get(d["key"])
        if kind == "dbSet":
            return db_set(d["key"], d.get("valueSize", 0))
        if kind == "parallelBlock":
            branches = [tuple(cls.from_dict(s) for s in branch) for branch in d["branches"]]
            return parallel(*branches)
        if kind == "return":
            return returns(d.get("sizeBytes", DEFAULT_RESPONSE_BYTES))
        raise InvalidApplication(f"unknown body step kind: {kind!r}")


def compute(duration: Duration) -> BodyStep:
    return BodyStep("compute", compute_time=duration)


def call(target: str, payload_bytes: int = DEFAULT_PAYLOAD_BYTES) -> BodyStep:
    return BodyStep("call", target=target, payload_bytes=payload_bytes)


def publish(target: str, payload_bytes: int = DEFAULT_PAYLOAD_BYTES) -> BodyStep:
    return BodyStep("publish", target=target, payload_bytes=payload_bytes)


def db_get(key: str) -> BodyStep:
    return BodyStep("dbGet", key=key)


def db_set(key: str, value_size: int) -> BodyStep:
    return BodyStep("dbSet", key=key, value_size=value_size)


def parallel(*branches: tuple[BodyStep, ...]) -> BodyStep:
    return BodyStep("parallelBlock", branches=tuple(tuple(b) for b in branches))


def returns(size_bytes: int = DEFAULT_RESPONSE_BYTES) -> BodyStep:
    return BodyStep("return", size_bytes=size_bytes)


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    trigger_kind: str
    body: tuple[BodyStep, ...]
    entry_point: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "trigger": self.trigger_kind,
            "entryPoint": self.entry_point,
            "body": [s.to_dict() for s in self.body],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FunctionSpec":
        return cls(
            name=d["name"],
            trigger_kind=d.get("trigger", HTTP_SYNC),
            body=tuple(BodyStep.from_dict(s) for s in d.get("body", [])),
            entry_point=bool(d.get("entryPoint", False)),
        )


@dataclass(frozen=True)
class ApplicationSpec:
    name: str
    functions: tuple[FunctionSpec, ...]
    external_services: tuple[str, ...] = ()
    metadata: str = ""

    def function(self, name: str) -> FunctionSpec:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(name)

    @property
    def function_names(self) -> tuple[str, ...]:
        return tuple(fn.name for fn in self.functions)

    def entry_points(self) -> tuple[FunctionSpec, ...]:
        return tuple(fn for fn in self.functions if fn.entry_point)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "externalServices": list(self.external_services),
            "metadata": self.metadata,
            "functions": [fn.to_dict() for fn in self.functions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ApplicationSpec":
        return cls(
            name=d["name"],
            functions=tuple(FunctionSpec.from_dict(f) for f in d.get("functions", [])),
            external_services=tuple(d.get("externalServices", [])),
            metadata=d.get("metadata", ""),
        )

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "ApplicationSpec":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "ApplicationSpec":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class Violation:
    code: str
    function: str | None
    detail: str

    def __str__(self) -> str:
        where = f" [{self.function}]" if self.function else ""
        return f"{self.code}{where}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}


def _walk_steps(body: tuple[BodyStep, ...]) -> Iterator[tuple[BodyStep, bool]]:
    """Yield (step, inside_branch) over a body, depth first."""
    for step in body:
        yield step, False
        if step.kind == "parallelBlock":
            for branch in step.branches:
                for inner, _ in _walk_steps(branch):
                    yield inner, True


def validate(app: ApplicationSpec) -> ValidationReport:
    """Check all application invariants; violations are data, not errors."""
    violations: list[Violation] = []
    seen: set[str] = set()
    for fn in app.functions:
        if fn.name in seen:
            violations.append(Violation("DuplicateName", fn.name, "function name is not unique"))
        seen.add(fn.name)
        if fn.trigger_kind not in (HTTP_SYNC, EVENT_ASYNC):
            violations.append(Violation("BadTriggerKind", fn.name, f"unknown trigger kind {fn.trigger_kind!r}"))
        if fn.entry_point and fn.trigger_kind != HTTP_SYNC:
            violations.append(Violation("AsyncEntryPoint", fn.name, "entry points must be http-sync"))

    by_name = {fn.name: fn for fn in app.functions}

    for fn in app.functions:
        saw_return = False
        for step, _ in _walk_steps(fn.body):
            if step.kind not in STEP_KINDS:
                violations.append(Violation("UnknownStepKind", fn.name, f"step kind {step.kind!r}"))
                continue
            if step.kind in ("call", "publish"):
                target = by_name.get(step.target or "")
                if target is None:
                    violations.append(Violation("UnknownTarget", fn.name, f"target {step.target!r} is not defined"))
                elif step.kind == "call" and target.trigger_kind != HTTP_SYNC:
                    violations.append(
                        Violation("CallToAsync", fn.name, f"sync call targets event-async {step.target!r}")
                    )
                elif step.kind == "publish" and target.trigger_kind != EVENT_ASYNC:
                    violations.append(
                        Violation("PublishToSync", fn.name, f"publish targets http-sync {step.target!r}")
                    )
            if step.kind in ("dbGet", "dbSet") and not app.external_services:
                violations.append(Violation("NoServiceDeclared", fn.name, "db step but no external service"))
            if step.kind == "parallelBlock" and len(step.branches) < 2:
                violations.append(Violation("BadParallelBlock", fn.name, "parallelBlock needs >= 2 branches"))
        for i, step in enumerate(fn.body):
            if step.kind == "return":
                saw_return = True
                if i != len(fn.body) - 1:
                    violations.append(Violation("ReturnNotLast", fn.name, "return must be the final step"))
        del saw_return

    entries = [fn for fn in app.functions if fn.entry_point]
    if not entries:
        violations.append(Violation("NoEntryPoint", None, "application has no entry point"))

    # Reachability over call/publish edges from entry points.
    if not any(v.code in ("DuplicateName", "UnknownTarget") for v in violations):
        reachable = {fn.name for fn in entries}
        frontier = list(reachable)
        while frontier:
            fn = by_name[frontier.pop()]
            for step, _ in _walk_steps(fn.body):
                if step.kind in ("call", "publish") and step.target not in reachable:
                    reachable.add(step.target)
                    frontier.append(step.target)
        for fn in app.functions:
            if fn.name not in reachable:
                violations.append(Violation("Unreachable", fn.name, "not reachable from any entry point"))

    return ValidationReport(tuple(violations))


@dataclass(frozen=True)
class CallGraph:
    """Directed multigraph of application call edges, in deterministic order."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, str], ...]  # (caller, callee, mode) with mode sync|async

    def successors(self, name: str) -> tuple[str, ...]:
        return tuple(callee for caller, callee, _ in self.edges if caller == name)

    def reachable_from(self, name: str) -> set[str]:
        seen = {name}
        frontier = [name]
        while frontier:
            n = frontier.pop()
            for succ in self.successors(n):
                if succ not in seen:
                    seen.add(succ)
                    frontier.append(succ)
        return seen


def call_graph(app: ApplicationSpec) -> CallGraph:
    """One edge per call/publish step occurrence, body order preserved."""
    report = validate(app)
    if not report.ok:
        raise InvalidApplication("; ".join(str(v) for v in report.violations))
    edges: list[tuple[str, str, str]] = []
    for fn in app.functions:
        for step, _ in _walk_steps(fn.body):
            if step.kind == "call":
                edges.append((fn.name, step.target, "sync"))
            elif step.kind == "publish":
                edges.append((fn.name, step.target, "async"))
    return CallGraph(nodes=app.function_names, edges=tuple(edges))
