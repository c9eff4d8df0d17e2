"""Desk-scale reconstructions of three contemporary interest rate models.

Three strategies the PID controller is compared against:

* a piecewise-linear curve with a kink at an optimal utilization (the
  dominant money-market design),
* an epoch multiplier that scales the rate by fixed factors every 12 hours
  depending on which side of target utilization the pool sits, and
* an adaptive curve whose log-rate drifts proportionally to utilization
  error while a piecewise curve factor follows utilization instantly.

These are behavioral models of the published designs, not ports of any
production codepath: parameters live in config files, and the error
normalization matches the PID module's so the strategies are comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .exceptions import ClockRegression, DomainError, ValidationError
from .numerics import FIXED, ONE, ZERO, Dec, mul_int
from .pid import normalize_error


# ---------------------------------------------------------------------------
# kinked piecewise-linear model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AaveConfig:
    base_rate: Dec
    slope1: Dec
    slope2: Dec
    u_kink: Dec

    def __post_init__(self):
        for label, v in (("base_rate", self.base_rate), ("slope1", self.slope1), ("slope2", self.slope2)):
            if v < ZERO:
                raise ValidationError(f"{label} must be non-negative, got {v}")
        if not ZERO < self.u_kink < ONE:
            raise ValidationError(f"u_kink must lie in (0, 1), got {self.u_kink}")


def aave_rate(config: AaveConfig, u: Dec, backend=FIXED) -> Dec:
    """Kinked linear curve: slope1 spends itself by u_kink, slope2 after."""
    if u < ZERO or u > ONE:
        raise DomainError(f"utilization must lie in [0, 1], got {u}")
    if u <= config.u_kink:
        return config.base_rate + backend.mul(config.slope1, backend.div(u, config.u_kink))
    excess = backend.div(u - config.u_kink, ONE - config.u_kink)
    return config.base_rate + config.slope1 + backend.mul(config.slope2, excess)


# ---------------------------------------------------------------------------
# epoch multiplier model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AjnaConfig:
    target_utilization: Dec
    initial_rate: Dec
    epoch_seconds: int = 43200
    up_factor: Dec = Dec("1.1")
    down_factor: Dec = Dec("0.9")

    def __post_init__(self):
        if not ZERO < self.target_utilization < ONE:
            raise ValidationError(f"target_utilization must lie in (0, 1), got {self.target_utilization}")
        if self.initial_rate <= ZERO:
            raise ValidationError(f"initial_rate must be positive, got {self.initial_rate}")
        if self.epoch_seconds <= 0:
            raise ValidationError(f"epoch_seconds must be positive, got {self.epoch_seconds}")
        if self.up_factor <= ZERO or self.down_factor <= ZERO:
            raise ValidationError("scaling factors must be positive")


@dataclass(frozen=True)
class AjnaState:
    current_rate: Dec
    last_epoch_boundary: int


def ajna_initial_state(config: AjnaConfig, created_at: int = 0) -> AjnaState:
    return AjnaState(current_rate=config.initial_rate, last_epoch_boundary=created_at)


def ajna_step(config: AjnaConfig, state: AjnaState, u: Dec, now: int, backend=FIXED) -> AjnaState:
    """Apply one multiplier per completed epoch since the stored boundary.

    Above target the rate scales up, below it scales down, at exactly
    target it is left unchanged (the conservative fixed point). Looping per
    epoch makes the result invariant to how often the pool is poked.
    """
    if now < state.last_epoch_boundary:
        raise ClockRegression(f"update at {now} precedes epoch boundary {state.last_epoch_boundary}")
    if u < ZERO or u > ONE:
        raise DomainError(f"utilization must lie in [0, 1], got {u}")
    completed = (now - state.last_epoch_boundary) // config.epoch_seconds
    rate = state.current_rate
    if u > config.target_utilization:
        for _ in range(completed):
            rate = backend.mul(rate, config.up_factor)
    elif u < config.target_utilization:
        for _ in range(completed):
            rate = backend.mul(rate, config.down_factor)
    return AjnaState(
        current_rate=rate,
        last_epoch_boundary=state.last_epoch_boundary + completed * config.epoch_seconds,
    )


# ---------------------------------------------------------------------------
# adaptive log-rate model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MorphoConfig:
    """k_p is per-second; the curve slopes bend the instant rate around target.

    The curve factor is xi(u) = 1 + slope * err(u) with the slope taken per
    side, pinned to 1 at target utilization; slope_below < 1 keeps it
    positive down to zero utilization.
    """

    k_p: Dec
    u_target: Dec
    curve_slope_below: Dec = Dec("0.75")
    curve_slope_above: Dec = Dec("3")

    def __post_init__(self):
        if self.k_p < ZERO:
            raise ValidationError(f"k_p must be non-negative, got {self.k_p}")
        if not ZERO < self.u_target < ONE:
            raise ValidationError(f"u_target must lie in (0, 1), got {self.u_target}")
        if not ZERO <= self.curve_slope_below < ONE:
            raise ValidationError(f"curve_slope_below must lie in [0, 1), got {self.curve_slope_below}")
        if self.curve_slope_above < ZERO:
            raise ValidationError(f"curve_slope_above must be non-negative, got {self.curve_slope_above}")


@dataclass(frozen=True)
class MorphoState:
    rate_at_target: Dec
    last_update: int
    last_u: Dec


def morpho_initial_state(config: MorphoConfig, rate_at_target: Dec, created_at: int = 0) -> MorphoState:
    if rate_at_target <= ZERO:
        raise ValidationError(f"rate_at_target must be positive, got {rate_at_target}")
    return MorphoState(rate_at_target=rate_at_target, last_update=created_at, last_u=config.u_target)


def morpho_curve(config: MorphoConfig, u: Dec, backend=FIXED) -> Dec:
    err = normalize_error(u, config.u_target, backend)
    slope = config.curve_slope_below if err <= ZERO else config.curve_slope_above
    return ONE + backend.mul(slope, err)


def morpho_step(
    config: MorphoConfig, state: MorphoState, u: Dec, now: int, backend=FIXED
) -> tuple[MorphoState, Dec]:
    """Explicit-Euler step of d/dt log(rate) = k_p * err, plus the curve factor.

    The controlled quantity is the rate at target utilization; the output
    rate multiplies it by the instantaneous curve value. Written this way
    the curve term of the log derivative integrates exactly (the log-curve
    difference telescopes), so the step carries no curve discretization
    error: a zero-elapsed utilization jump moves the rate by exactly the
    curve ratio.
    """
    if now < state.last_update:
        raise ClockRegression(f"update at {now} precedes stored time {state.last_update}")
    err = normalize_error(u, config.u_target, backend)
    drift = backend.mul(config.k_p, mul_int(err, now - state.last_update))
    rate_at_target = backend.mul(state.rate_at_target, backend.exp(drift))
    rate = backend.mul(rate_at_target, morpho_curve(config, u, backend))
    new_state = MorphoState(rate_at_target=rate_at_target, last_update=now, last_u=u)
    return new_state, rate


# ---------------------------------------------------------------------------
# state snapshots (same flat record idea as the PID module)
# ---------------------------------------------------------------------------


def ajna_state_snapshot(state: AjnaState) -> dict:
    return {
        "current_rate": state.current_rate.canonical(),
        "last_epoch_boundary": state.last_epoch_boundary,
    }


def ajna_state_from_snapshot(record: dict) -> AjnaState:
    return AjnaState(
        current_rate=Dec(record["current_rate"]),
        last_epoch_boundary=int(record["last_epoch_boundary"]),
    )


def morpho_state_snapshot(state: MorphoState) -> dict:
    return {
        "rate_at_target": state.rate_at_target.canonical(),
        "last_update": state.last_update,
        "last_u": state.last_u.canonical(),
    }


def morpho_state_from_snapshot(record: dict) -> MorphoState:
    return MorphoState(
        rate_at_target=Dec(record["rate_at_target"]),
        last_update=int(record["last_update"]),
        last_u=Dec(record["last_u"]),
    )
