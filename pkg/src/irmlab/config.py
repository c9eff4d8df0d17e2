"""Run configuration: a single JSON document describing one simulation.

Decimal quantities are carried as strings (or whole-number ints) so binary
floats never touch the fixed-point path; a bare JSON float in a decimal
field is rejected. Unknown keys are rejected everywhere, with the offending
path in the message, so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import baselines, pid
from .engine import AaveStrategy, AjnaStrategy, IrmStrategy, MorphoStrategy, PidStrategy
from .exceptions import ValidationError
from .numerics import Dec
from .scenario import FeedbackModel, ScenarioSpec, Segment


@dataclass
class RunConfig:
    spec: ScenarioSpec
    strategies: list[IrmStrategy]
    backend_name: str = "fixed"
    band: Dec = Dec("0.02")
    u_threshold: Dec = Dec("0.9")
    probes: tuple[int, ...] = ()
    settle_target: Dec | None = None


def _require_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ValidationError(f"{path}: expected an object, got {type(value).__name__}")
    return value


def _check_keys(data: dict, allowed: set[str], path: str):
    unknown = set(data) - allowed
    if unknown:
        raise ValidationError(f"{path}: unknown key(s) {sorted(unknown)}; allowed: {sorted(allowed)}")


def _dec(value, path: str) -> Dec:
    if isinstance(value, bool) or isinstance(value, float):
        raise ValidationError(f"{path}: decimals must be strings (or whole ints), got {value!r}")
    if isinstance(value, int):
        return Dec(value)
    if isinstance(value, str):
        try:
            return Dec(value)
        except ValidationError as exc:
            raise ValidationError(f"{path}: {exc}") from None
    raise ValidationError(f"{path}: cannot read a decimal from {type(value).__name__}")


def _int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{path}: expected an integer, got {value!r}")
    return value


def _bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ValidationError(f"{path}: expected true/false, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------

_SEGMENT_KEYS = {"kind", "duration", "start", "end", "value", "size", "volatility"}


def _parse_segment(data, path: str) -> Segment:
    data = _require_mapping(data, path)
    _check_keys(data, _SEGMENT_KEYS, path)
    if "kind" not in data or "duration" not in data:
        raise ValidationError(f"{path}: segment requires 'kind' and 'duration'")
    decs = {
        key: _dec(data[key], f"{path}.{key}")
        for key in ("start", "end", "value", "size", "volatility")
        if key in data
    }
    return Segment(kind=data["kind"], duration=_int(data["duration"], f"{path}.duration"), **decs)


_FEEDBACK_KEYS = {"elasticity", "reference_rate", "delay", "noise_volatility"}


def _parse_feedback(data, path: str) -> FeedbackModel:
    data = _require_mapping(data, path)
    _check_keys(data, _FEEDBACK_KEYS, path)
    for key in ("elasticity", "reference_rate"):
        if key not in data:
            raise ValidationError(f"{path}: feedback requires {key!r}")
    return FeedbackModel(
        elasticity=_dec(data["elasticity"], f"{path}.elasticity"),
        reference_rate=_dec(data["reference_rate"], f"{path}.reference_rate"),
        delay=_int(data.get("delay", 1), f"{path}.delay"),
        noise_volatility=_dec(data.get("noise_volatility", "0"), f"{path}.noise_volatility"),
    )


_SCENARIO_KEYS = {"segments", "dt", "seed", "feedback"}


def parse_scenario(data, path: str = "scenario") -> ScenarioSpec:
    data = _require_mapping(data, path)
    _check_keys(data, _SCENARIO_KEYS, path)
    raw_segments = data.get("segments")
    if not isinstance(raw_segments, list) or not raw_segments:
        raise ValidationError(f"{path}.segments: expected a non-empty array")
    segments = tuple(
        _parse_segment(seg, f"{path}.segments[{i}]") for i, seg in enumerate(raw_segments)
    )
    feedback = _parse_feedback(data["feedback"], f"{path}.feedback") if "feedback" in data else None
    return ScenarioSpec(
        segments=segments,
        dt=_int(data.get("dt", 3600), f"{path}.dt"),
        seed=_int(data.get("seed", 0), f"{path}.seed"),
        feedback=feedback,
    )


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------

_PID_KEYS = {"kind", "name", "k_p", "k_i", "k_d", "u_optimal", "m", "n", "derivative_period", "derivative_enabled"}
_AAVE_KEYS = {"kind", "name", "base_rate", "slope1", "slope2", "u_kink"}
_AJNA_KEYS = {"kind", "name", "target_utilization", "initial_rate", "epoch_seconds", "up_factor", "down_factor"}
_MORPHO_KEYS = {"kind", "name", "k_p", "u_target", "curve_slope_below", "curve_slope_above", "rate_at_target"}


def parse_strategy(data, path: str) -> IrmStrategy:
    data = _require_mapping(data, path)
    kind = data.get("kind")
    if kind == "pid":
        _check_keys(data, _PID_KEYS, path)
        config = pid.PidConfig(
            k_p=_dec(data["k_p"], f"{path}.k_p"),
            k_i=_dec(data["k_i"], f"{path}.k_i"),
            k_d=_dec(data["k_d"], f"{path}.k_d"),
            u_optimal=_dec(data["u_optimal"], f"{path}.u_optimal"),
            m=_dec(data["m"], f"{path}.m"),
            n=_dec(data["n"], f"{path}.n"),
            derivative_period=_int(data.get("derivative_period", 18000), f"{path}.derivative_period"),
            derivative_enabled=_bool(data.get("derivative_enabled", True), f"{path}.derivative_enabled"),
        )
        return PidStrategy(data.get("name", "pid"), config)
    if kind == "aave":
        _check_keys(data, _AAVE_KEYS, path)
        config = baselines.AaveConfig(
            base_rate=_dec(data["base_rate"], f"{path}.base_rate"),
            slope1=_dec(data["slope1"], f"{path}.slope1"),
            slope2=_dec(data["slope2"], f"{path}.slope2"),
            u_kink=_dec(data["u_kink"], f"{path}.u_kink"),
        )
        return AaveStrategy(data.get("name", "aave"), config)
    if kind == "ajna":
        _check_keys(data, _AJNA_KEYS, path)
        config = baselines.AjnaConfig(
            target_utilization=_dec(data["target_utilization"], f"{path}.target_utilization"),
            initial_rate=_dec(data["initial_rate"], f"{path}.initial_rate"),
            epoch_seconds=_int(data.get("epoch_seconds", 43200), f"{path}.epoch_seconds"),
            up_factor=_dec(data.get("up_factor", "1.1"), f"{path}.up_factor"),
            down_factor=_dec(data.get("down_factor", "0.9"), f"{path}.down_factor"),
        )
        return AjnaStrategy(data.get("name", "ajna"), config)
    if kind == "morpho":
        _check_keys(data, _MORPHO_KEYS, path)
        config = baselines.MorphoConfig(
            k_p=_dec(data["k_p"], f"{path}.k_p"),
            u_target=_dec(data["u_target"], f"{path}.u_target"),
            curve_slope_below=_dec(data.get("curve_slope_below", "0.75"), f"{path}.curve_slope_below"),
            curve_slope_above=_dec(data.get("curve_slope_above", "3"), f"{path}.curve_slope_above"),
        )
        rate_at_target = _dec(data["rate_at_target"], f"{path}.rate_at_target")
        return MorphoStrategy(data.get("name", "morpho"), config, rate_at_target)
    raise ValidationError(f"{path}.kind: expected one of pid/aave/ajna/morpho, got {kind!r}")


# ---------------------------------------------------------------------------
# top level
# ---------------------------------------------------------------------------

_TOP_KEYS = {"scenario", "strategies", "backend", "metrics", "settle_target"}
_METRICS_KEYS = {"band", "u_threshold", "probes"}


def parse_run_config(data: dict, path: str = "config") -> RunConfig:
    data = _require_mapping(data, path)
    _check_keys(data, _TOP_KEYS, path)
    if "scenario" not in data or "strategies" not in data:
        raise ValidationError(f"{path}: requires 'scenario' and 'strategies'")
    spec = parse_scenario(data["scenario"], f"{path}.scenario")
    raw_strategies = data["strategies"]
    if not isinstance(raw_strategies, list) or not raw_strategies:
        raise ValidationError(f"{path}.strategies: expected a non-empty array")
    strategies = [
        parse_strategy(s, f"{path}.strategies[{i}]") for i, s in enumerate(raw_strategies)
    ]
    backend_name = data.get("backend", "fixed")
    if backend_name not in ("fixed", "reference"):
        raise ValidationError(f"{path}.backend: expected 'fixed' or 'reference', got {backend_name!r}")

    band, u_threshold, probes = Dec("0.02"), Dec("0.9"), ()
    if "metrics" in data:
        m = _require_mapping(data["metrics"], f"{path}.metrics")
        _check_keys(m, _METRICS_KEYS, f"{path}.metrics")
        if "band" in m:
            band = _dec(m["band"], f"{path}.metrics.band")
        if "u_threshold" in m:
            u_threshold = _dec(m["u_threshold"], f"{path}.metrics.u_threshold")
        if "probes" in m:
            if not isinstance(m["probes"], list):
                raise ValidationError(f"{path}.metrics.probes: expected an array of steps")
            probes = tuple(_int(p, f"{path}.metrics.probes[{i}]") for i, p in enumerate(m["probes"]))

    settle_target = _dec(data["settle_target"], f"{path}.settle_target") if "settle_target" in data else None
    return RunConfig(
        spec=spec,
        strategies=strategies,
        backend_name=backend_name,
        band=band,
        u_threshold=u_threshold,
        probes=probes,
        settle_target=settle_target,
    )


def load_run_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    return parse_run_config(data, path=str(path))
