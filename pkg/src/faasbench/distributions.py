"""Duration distributions used by platform specs and function bodies.

All distributions are expressed in milliseconds in config files and sampled
to integer microseconds. Supported forms: ``constant(x)``, ``uniform(a,b)``,
``lognormal(median,sigma)``, ``exponential(mean)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

_DIST_RE = re.compile(r"^\s*(constant|uniform|lognormal|exponential)\s*\(([^)]*)\)\s*$")

MICROS_PER_MS = 1000


class DistributionError(ValueError):
    """Raised for unparseable or invalid distribution expressions."""


@dataclass(frozen=True)
class Duration:
    """A nonnegative duration distribution with microsecond resolution."""

    kind: str
    args: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind == "constant":
            if len(self.args) != 1 or self.args[0] < 0:
                raise DistributionError(f"constant() takes one nonnegative value: {self.args}")
        elif self.kind == "uniform":
            if len(self.args) != 2 or not (0 <= self.args[0] <= self.args[1]):
                raise DistributionError(f"uniform(a,b) requires 0 <= a <= b: {self.args}")
        elif self.kind == "lognormal":
            if len(self.args) != 2 or self.args[0] <= 0 or self.args[1] < 0:
                raise DistributionError(f"lognormal(median,sigma) requires median > 0, sigma >= 0: {self.args}")
        elif self.kind == "exponential":
            if len(self.args) != 1 or self.args[0] < 0:
                raise DistributionError(f"exponential(mean) requires mean >= 0: {self.args}")
        else:
            raise DistributionError(f"unknown distribution kind: {self.kind}")

    def sample(self, rng: np.random.Generator) -> int:
        """Draw one duration in integer microseconds.

        Constants consume no randomness so that configs which only differ in
        constant values replay the same sample stream.
        """
        if self.kind == "constant":
            return _to_micros(self.args[0])
        if self.kind == "uniform":
            return _to_micros(rng.uniform(self.args[0], self.args[1]))
        if self.kind == "lognormal":
            median, sigma = self.args
            return _to_micros(math.exp(rng.normal(math.log(median), sigma)))
        # exponential
        return _to_micros(rng.exponential(self.args[0]))

    def spec(self) -> str:
        """Render back to the config syntax (``kind(a,b)``)."""
        rendered = ",".join(_fmt(a) for a in self.args)
        return f"{self.kind}({rendered})"

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.spec()


def _to_micros(millis: float) -> int:
    return max(0, int(round(millis * MICROS_PER_MS)))


def _fmt(x: float) -> str:
    return f"{x:g}"


def constant(ms: float) -> Duration:
    return Duration("constant", (float(ms),))


def uniform(a_ms: float, b_ms: float) -> Duration:
    return Duration("uniform", (float(a_ms), float(b_ms)))


def lognormal(median_ms: float, sigma: float) -> Duration:
    return Duration("lognormal", (float(median_ms), float(sigma)))


def exponential(mean_ms: float) -> Duration:
    return Duration("exponential", (float(mean_ms),))


def parse_duration(text: str) -> Duration:
    """Parse the config syntax, e.g. ``lognormal(15,0.25)`` (milliseconds)."""
    m = _DIST_RE.match(text)
    if not m:
        raise DistributionError(f"cannot parse distribution: {text!r}")
    kind, raw_args = m.group(1), m.group(2)
    try:
        args = tuple(float(a) for a in raw_args.split(",")) if raw_args.strip() else ()
    except ValueError as exc:
        raise DistributionError(f"bad distribution arguments in {text!r}") from exc
    return Duration(kind, args)
