"""Utilization-error PID interest rate strategy.

The controller turns pool utilization into a normalized error signal,
tracks a time-weighted cumulative error (the integrator's memory and the
derivative's measurement base), and maps the clamped sum of the three
components through an exponential transfer curve to a borrow rate.

All state transitions are pure: they take a state value and return a new
one, so a single market is a fold over its update events and distinct
markets can be advanced in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .exceptions import ClockRegression, DomainError, InfeasibleAnchor, ValidationError
from .numerics import FIXED, HALF, NEG_ONE, ONE, ZERO, Dec, clamp, mul_int


@dataclass(frozen=True)
class PidConfig:
    """Gains and transfer-curve shape for one market.

    k_i is a per-second gain (it multiplies error-seconds); k_p and k_d are
    dimensionless. m scales the whole curve and n bends it so the curve can
    anchor a chosen baseline rate at optimal utilization.
    """

    k_p: Dec
    k_i: Dec
    k_d: Dec
    u_optimal: Dec
    m: Dec
    n: Dec
    derivative_period: int = 18000
    derivative_enabled: bool = True

    def __post_init__(self):
        if not ZERO < self.u_optimal < ONE:
            raise ValidationError(f"u_optimal must lie in (0, 1), got {self.u_optimal}")
        if self.m <= ZERO:
            raise ValidationError(f"m must be positive, got {self.m}")
        if self.n <= ZERO:
            raise ValidationError(f"n must be positive, got {self.n}")
        for label, gain in (("k_p", self.k_p), ("k_i", self.k_i), ("k_d", self.k_d)):
            if gain < ZERO:
                raise ValidationError(f"{label} must be non-negative, got {gain}")
        if self.derivative_period <= 0:
            raise ValidationError(f"derivative_period must be positive, got {self.derivative_period}")


@dataclass(frozen=True)
class PidState:
    """Controller memory: the running error integral and its delay slots.

    twce is exact error-seconds (accumulated without rounding). The two
    slots hold the cumulative value one lookback period apart so the
    derivative can measure the integral's recent slope.
    """

    twce: Dec
    last_update: int
    twce_previous: Dec
    t_previous: int
    twce_delayed: Dec
    t_delayed: int
    initialized: bool = False


@dataclass(frozen=True)
class ControllerBreakdown:
    """Every intermediate of one update, as written to trace files."""

    u_error: Dec
    u_p: Dec
    u_i: Dec
    u_i_raw: Dec
    u_d: Dec
    controller_error: Dec
    rate: Dec


def initial_state(created_at: int = 0) -> PidState:
    return PidState(
        twce=ZERO,
        last_update=created_at,
        twce_previous=ZERO,
        t_previous=created_at,
        twce_delayed=ZERO,
        t_delayed=created_at,
        initialized=False,
    )


def normalize_error(u: Dec, u_optimal: Dec, backend=FIXED) -> Dec:
    """Map utilization to [-1, 1]: [0, u_opt] onto [-1, 0], [u_opt, 1] onto [0, 1]."""
    if u < ZERO or u > ONE:
        raise DomainError(f"utilization must lie in [0, 1], got {u}")
    if u <= u_optimal:
        return backend.div(u - u_optimal, u_optimal)
    return backend.div(u - u_optimal, ONE - u_optimal)


def proportional(e: Dec, k_p: Dec, backend=FIXED) -> Dec:
    return backend.mul(k_p, e)


def accumulate(state: PidState, e: Dec, now: int, derivative_period: int) -> PidState:
    """Fold one error report into the integral and rotate the delay slots.

    The reported error is weighted by the time since the previous report,
    added exactly (integer math, no rounding, so replay is bit-stable).
    Once the delayed slot is at least one period old it becomes the
    previous slot and the fresh cumulative value takes its place.
    """
    if now < state.last_update:
        raise ClockRegression(f"update at {now} precedes stored time {state.last_update}")
    twce = state.twce + mul_int(e, now - state.last_update)
    new = replace(state, twce=twce, last_update=now, initialized=True)
    if now - state.t_delayed >= derivative_period:
        new = replace(
            new,
            twce_previous=state.twce_delayed,
            t_previous=state.t_delayed,
            twce_delayed=twce,
            t_delayed=now,
        )
    return new


def integral_term(state: PidState, k_i: Dec, u_p: Dec, e: Dec, backend=FIXED) -> tuple[Dec, Dec]:
    """Integral component and its pre-clamp value.

    Above optimal utilization (e > 0) the component is floored at
    -0.5 * u_p so accumulated negative memory can dampen but never
    neutralize a positive proportional response. The stored accumulator is
    left untouched; only the applied value is floored.
    """
    u_i_raw = backend.mul(k_i, state.twce)
    u_i = u_i_raw
    if e > ZERO:
        floor = -backend.mul(HALF, u_p)
        if u_i < floor:
            u_i = floor
    return u_i, u_i_raw


def derivative_term(state: PidState, k_d: Dec, enabled: bool = True, backend=FIXED) -> Dec:
    """Slope of the cumulative error across the delay slots, times k_d.

    Returns zero while derivative action is disabled or before two distinct
    slot timestamps exist (there is no window to measure yet).
    """
    if not enabled:
        return ZERO
    span = state.t_delayed - state.t_previous
    if span <= 0:
        return ZERO
    slope = backend.div(state.twce_delayed - state.twce_previous, Dec(span))
    return backend.mul(k_d, slope)


def transfer_function(controller_error: Dec, m: Dec, n: Dec, backend=FIXED) -> Dec:
    """r = m * ((controller_error + 1) / 2) ^ n.

    The input is already clamped to [-1, 1], so the power base stays in
    [0, 1]: the curve runs from 0 (full negative error) through the anchor
    rate at zero error up to m at full positive error.
    """
    base = backend.mul(controller_error + ONE, HALF)
    return backend.mul(m, backend.pow(base, n))


def solve_shape(u_optimal: Dec, r_o: Dec, m: Dec, backend=FIXED) -> Dec:
    """Shape exponent n such that the curve passes the anchor (u_optimal, r_o).

    The anchor sits at zero controller error by construction, so u_optimal
    does not enter the algebra: m * 0.5^n = r_o gives n = log2(m / r_o).
    """
    if not ZERO < r_o < m:
        raise InfeasibleAnchor(f"anchor rate must satisfy 0 < r_o < m, got r_o={r_o}, m={m}")
    return backend.log2(backend.div(m, r_o))


def update_and_rate(
    config: PidConfig, state: PidState, u: Dec, now: int, backend=FIXED
) -> tuple[PidState, ControllerBreakdown]:
    """One full controller update: error, memory, components, rate."""
    e = normalize_error(u, config.u_optimal, backend)
    new_state = accumulate(state, e, now, config.derivative_period)
    u_p = proportional(e, config.k_p, backend)
    u_i, u_i_raw = integral_term(new_state, config.k_i, u_p, e, backend)
    u_d = derivative_term(new_state, config.k_d, config.derivative_enabled, backend)
    controller_error = clamp(u_p + u_i + u_d, NEG_ONE, ONE)
    rate = transfer_function(controller_error, config.m, config.n, backend)
    breakdown = ControllerBreakdown(
        u_error=e,
        u_p=u_p,
        u_i=u_i,
        u_i_raw=u_i_raw,
        u_d=u_d,
        controller_error=controller_error,
        rate=rate,
    )
    return new_state, breakdown


def state_snapshot(state: PidState) -> dict:
    """Flat record of every state field, decimals in canonical form."""
    return {
        "twce": state.twce.canonical(),
        "last_update": state.last_update,
        "twce_previous": state.twce_previous.canonical(),
        "t_previous": state.t_previous,
        "twce_delayed": state.twce_delayed.canonical(),
        "t_delayed": state.t_delayed,
        "initialized": state.initialized,
    }


def state_from_snapshot(record: dict) -> PidState:
    return PidState(
        twce=Dec(record["twce"]),
        last_update=int(record["last_update"]),
        twce_previous=Dec(record["twce_previous"]),
        t_previous=int(record["t_previous"]),
        twce_delayed=Dec(record["twce_delayed"]),
        t_delayed=int(record["t_delayed"]),
        initialized=bool(record["initialized"]),
    )
