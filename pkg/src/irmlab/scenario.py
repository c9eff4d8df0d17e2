"""Seeded utilization trajectories and the delayed market-response loop.

Scenarios are segment lists (ramps, holds, jumps, random walks) evaluated
on a fixed step clock. Randomness comes from splitmix64 seeded with an
explicit 64-bit integer, with rejection sampling onto the fixed-point
lattice, so a (spec, seed) pair generates the same byte-identical
trajectory everywhere. All segment arithmetic runs on the fixed backend:
the utilization path is an input to strategies and must not vary when the
strategies themselves are evaluated under the reference backend.

The optional feedback model closes the loop the way real markets do, one
step delayed: utilization drifts against the spread between the rate the
market saw earlier and the rate it considers acceptable. It is deliberately
linear; it exists to exercise closed-loop behavior, not to model traders.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .exceptions import ValidationError
from .numerics import FIXED, ONE, SCALE, ZERO, Dec, clamp

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64 (Steele et al.); tiny, well-known, trivially portable."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform_signed(self) -> Dec:
        """Uniform draw over the raw lattice of [-1, 1], rejection sampled."""
        span = 2 * SCALE + 1
        limit = ((1 << 63) // span) * span
        while True:
            x = self.next_u64() >> 1
            if x < limit:
                return Dec.from_raw(x % span - SCALE)


_SEGMENT_KINDS = ("ramp", "hold", "step", "random-walk")


@dataclass(frozen=True)
class Segment:
    """One piece of a trajectory, `duration` steps long.

    ramp: linear from `start` (or the previous value) to `end`, inclusive
    of the endpoint at the segment's final step.
    hold: constant at `value` (or the previous value).
    step: jump by the signed `size` from the previous value, then hold.
    random-walk: previous value plus volatility-scaled uniform increments.
    """

    kind: str
    duration: int
    start: Dec | None = None
    end: Dec | None = None
    value: Dec | None = None
    size: Dec | None = None
    volatility: Dec | None = None

    def __post_init__(self):
        if self.kind not in _SEGMENT_KINDS:
            raise ValidationError(f"unknown segment kind {self.kind!r}; expected one of {_SEGMENT_KINDS}")
        if self.duration < 1:
            raise ValidationError(f"segment duration must be >= 1, got {self.duration}")
        if self.kind == "ramp" and self.end is None:
            raise ValidationError("ramp segment requires 'end'")
        if self.kind == "step" and self.size is None:
            raise ValidationError("step segment requires 'size'")
        if self.kind == "random-walk" and self.volatility is None:
            raise ValidationError("random-walk segment requires 'volatility'")
        for label, v in (("start", self.start), ("end", self.end), ("value", self.value)):
            if v is not None and not ZERO <= v <= ONE:
                raise ValidationError(f"segment {label} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class FeedbackModel:
    """Linear delayed market response: rates above the reference repel borrowing."""

    elasticity: Dec
    reference_rate: Dec
    delay: int = 1
    noise_volatility: Dec = ZERO

    def __post_init__(self):
        if self.delay < 1:
            raise ValidationError(f"feedback delay must be >= 1 step, got {self.delay}")
        if self.elasticity < ZERO:
            raise ValidationError(f"elasticity must be non-negative, got {self.elasticity}")
        if self.noise_volatility < ZERO:
            raise ValidationError(f"noise_volatility must be non-negative, got {self.noise_volatility}")


@dataclass(frozen=True)
class ScenarioSpec:
    segments: tuple[Segment, ...]
    dt: int = 3600
    seed: int = 0
    feedback: FeedbackModel | None = field(default=None)

    def __post_init__(self):
        if not self.segments:
            raise ValidationError("scenario requires at least one segment")
        if self.dt <= 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        first = self.segments[0]
        if first.kind in ("step", "random-walk") and first.start is None:
            raise ValidationError(f"first segment of kind {first.kind!r} requires an explicit 'start'")
        if first.kind == "ramp" and first.start is None:
            raise ValidationError("first ramp segment requires an explicit 'start'")
        if first.kind == "hold" and first.value is None:
            raise ValidationError("first hold segment requires an explicit 'value'")

    @property
    def total_steps(self) -> int:
        return sum(seg.duration for seg in self.segments)


def generate(spec: ScenarioSpec, seed: int | None = None) -> list[tuple[int, Dec]]:
    """Open-loop trajectory: (timestamp, utilization) for steps 1..N.

    Timestamps are step * dt seconds; step 0 is the market's creation time
    and carries no row. Deterministic given (spec, seed); feedback, when
    present, is applied by the engine, not here.
    """
    rng = SplitMix64(spec.seed if seed is None else seed)
    out: list[tuple[int, Dec]] = []
    prev = ZERO
    step = 0
    for seg in spec.segments:
        if seg.kind == "ramp":
            start = seg.start if seg.start is not None else prev
            span = seg.end - start
            for i in range(1, seg.duration + 1):
                frac = FIXED.div(Dec(i), Dec(seg.duration))
                prev = clamp(start + FIXED.mul(span, frac), ZERO, ONE)
                step += 1
                out.append((step * spec.dt, prev))
        elif seg.kind == "hold":
            prev = seg.value if seg.value is not None else prev
            for _ in range(seg.duration):
                step += 1
                out.append((step * spec.dt, prev))
        elif seg.kind == "step":
            base = seg.start if seg.start is not None else prev
            prev = clamp(base + seg.size, ZERO, ONE)
            for _ in range(seg.duration):
                step += 1
                out.append((step * spec.dt, prev))
        else:  # random-walk
            if seg.start is not None:
                prev = seg.start
            for _ in range(seg.duration):
                prev = clamp(prev + FIXED.mul(seg.volatility, rng.uniform_signed()), ZERO, ONE)
                step += 1
                out.append((step * spec.dt, prev))
    return out


def feedback_next(model: FeedbackModel, u_prev: Dec, rate_delayed: Dec, noise: Dec) -> Dec:
    """Next utilization under the linear response, clamped to [0, 1]."""
    pressure = FIXED.mul(model.elasticity, rate_delayed - model.reference_rate)
    return clamp(u_prev - pressure + noise, ZERO, ONE)
