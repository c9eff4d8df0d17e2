"""Coarse deterministic grid search for controller gains and curve shape.

The published description of the strategy withholds its production gains,
so the default desk-scale configuration is produced here: targets are
(scenario, step, rate, tolerance) anchors read from a JSON file, candidates
come from explicit grids over (m, n, k_p, k_i, k_d), and the winner
minimizes the worst relative miss across all targets. Everything is
deterministic: grids are iterated in file order and ties keep the first
candidate, so the same targets file always freezes the same config.

Each target carries a controller mode so anchors can pin partial
configurations: "p_only" forces (k_p, k_i, k_d) = (1, 0, 0), "pi" forces
k_d = 0, and "pid" evaluates the full candidate.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

from . import pid
from .config import _check_keys, _dec, _int, _require_mapping, parse_scenario
from .exceptions import CalibrationError, ValidationError
from .numerics import FIXED, ONE, ZERO, Dec
from .scenario import ScenarioSpec, generate

_MODES = ("p_only", "pi", "pid")
_GRID_KEYS = ("m", "n", "k_p", "k_i", "k_d")
_FIXED_KEYS = {"u_optimal", "derivative_period", "derivative_enabled"}
_TARGET_KEYS = {"name", "mode", "scenario", "step", "target", "tol"}


@dataclass(frozen=True)
class CalibrationTarget:
    name: str
    mode: str
    spec: ScenarioSpec
    scenario_key: str
    step: int
    target: Dec
    tol: Dec


@dataclass(frozen=True)
class TargetResult:
    name: str
    target: Dec
    achieved: Dec
    tol: Dec
    miss_abs: Dec
    miss_rel: Dec
    feasible: bool


@dataclass(frozen=True)
class CalibrationResult:
    params: dict[str, Dec]
    u_optimal: Dec
    derivative_period: int
    derivative_enabled: bool
    score: Dec
    results: tuple[TargetResult, ...]
    candidates_evaluated: int

    @property
    def feasible(self) -> bool:
        return all(r.feasible for r in self.results)


def load_targets(path):
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"targets file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    return parse_targets(data, label=str(path))


def parse_targets(data: dict, label: str = "targets"):
    data = _require_mapping(data, label)
    _check_keys(data, {"grid", "fixed", "targets"}, label)

    grid_data = _require_mapping(data.get("grid", {}), f"{label}.grid")
    _check_keys(grid_data, set(_GRID_KEYS), f"{label}.grid")
    grid: dict[str, list[Dec]] = {}
    for key in _GRID_KEYS:
        values = grid_data.get(key)
        if not isinstance(values, list) or not values:
            raise CalibrationError(f"{label}.grid.{key}: expected a non-empty array of decimals")
        grid[key] = [_dec(v, f"{label}.grid.{key}[{i}]") for i, v in enumerate(values)]

    fixed_data = _require_mapping(data.get("fixed", {}), f"{label}.fixed")
    _check_keys(fixed_data, _FIXED_KEYS, f"{label}.fixed")
    u_optimal = _dec(fixed_data.get("u_optimal", "0.5"), f"{label}.fixed.u_optimal")
    derivative_period = _int(fixed_data.get("derivative_period", 18000), f"{label}.fixed.derivative_period")
    derivative_enabled = bool(fixed_data.get("derivative_enabled", True))

    raw_targets = data.get("targets")
    if not isinstance(raw_targets, list) or not raw_targets:
        raise CalibrationError(f"{label}.targets: expected a non-empty array")
    targets = []
    for i, t in enumerate(raw_targets):
        tpath = f"{label}.targets[{i}]"
        t = _require_mapping(t, tpath)
        _check_keys(t, _TARGET_KEYS, tpath)
        mode = t.get("mode", "pid")
        if mode not in _MODES:
            raise ValidationError(f"{tpath}.mode: expected one of {_MODES}, got {mode!r}")
        spec = parse_scenario(t["scenario"], f"{tpath}.scenario")
        if spec.feedback is not None:
            raise ValidationError(f"{tpath}: calibration targets must be open-loop scenarios")
        step = _int(t["step"], f"{tpath}.step")
        if not 1 <= step <= spec.total_steps:
            raise ValidationError(f"{tpath}.step: {step} outside scenario of {spec.total_steps} steps")
        target = _dec(t["target"], f"{tpath}.target")
        if target <= ZERO:
            raise ValidationError(f"{tpath}.target: must be positive, got {target}")
        targets.append(
            CalibrationTarget(
                name=t.get("name", f"target-{i}"),
                mode=mode,
                spec=spec,
                scenario_key=json.dumps(t["scenario"], sort_keys=True),
                step=step,
                target=target,
                tol=_dec(t["tol"], f"{tpath}.tol"),
            )
        )
    return grid, (u_optimal, derivative_period, derivative_enabled), targets


def _mode_config(params: dict[str, Dec], mode: str, u_optimal: Dec, period: int, enabled: bool) -> pid.PidConfig:
    k_p, k_i, k_d = params["k_p"], params["k_i"], params["k_d"]
    if mode == "p_only":
        k_p, k_i, k_d = ONE, ZERO, ZERO
    elif mode == "pi":
        k_d = ZERO
    return pid.PidConfig(
        k_p=k_p,
        k_i=k_i,
        k_d=k_d,
        u_optimal=u_optimal,
        m=params["m"],
        n=params["n"],
        derivative_period=period,
        derivative_enabled=enabled,
    )


def _rates_at(config: pid.PidConfig, path: list[tuple[int, Dec]], steps: frozenset[int]) -> dict[int, Dec]:
    """Fold the controller over the path, collecting rates at the probe steps."""
    state = pid.initial_state(0)
    out = {}
    last = max(steps)
    for idx, (ts, u) in enumerate(path, start=1):
        state, breakdown = pid.update_and_rate(config, state, u, ts, FIXED)
        if idx in steps:
            out[idx] = breakdown.rate
        if idx == last:
            break
    return out


def evaluate_candidate(
    params: dict[str, Dec],
    targets: list[CalibrationTarget],
    fixed: tuple[Dec, int, bool],
    paths: dict[str, list[tuple[int, Dec]]] | None = None,
    memo: dict | None = None,
) -> tuple[Dec, tuple[TargetResult, ...]]:
    """Worst relative miss of one candidate, with the per-target table.

    Safe to call standalone (paths are regenerated when not supplied): the
    search and any re-audit of its winner go through this same routine.
    The optional memo caches folds keyed by effective config, so candidates
    that collapse to the same controller (every p_only row) run once.
    """
    u_optimal, period, enabled = fixed
    if paths is None:
        paths = {t.scenario_key: generate(t.spec) for t in targets}
    groups: dict[tuple[str, str], list[CalibrationTarget]] = {}
    for t in targets:
        groups.setdefault((t.scenario_key, t.mode), []).append(t)

    results: list[TargetResult] = []
    worst = ZERO
    for (scenario_key, mode), group in groups.items():
        config = _mode_config(params, mode, u_optimal, period, enabled)
        steps = frozenset(t.step for t in group)
        memo_key = (scenario_key, config, steps)
        if memo is not None and memo_key in memo:
            rates = memo[memo_key]
        else:
            rates = _rates_at(config, paths[scenario_key], steps)
            if memo is not None:
                memo[memo_key] = rates
        for t in group:
            achieved = rates[t.step]
            miss_abs = abs(achieved - t.target)
            miss_rel = FIXED.div(miss_abs, t.target)
            worst = max(worst, miss_rel)
            results.append(
                TargetResult(
                    name=t.name,
                    target=t.target,
                    achieved=achieved,
                    tol=t.tol,
                    miss_abs=miss_abs,
                    miss_rel=miss_rel,
                    feasible=miss_abs <= t.tol,
                )
            )
    results.sort(key=lambda r: [t.name for t in targets].index(r.name))
    return worst, tuple(results)


def grid_search(grid: dict[str, list[Dec]], fixed: tuple[Dec, int, bool], targets) -> CalibrationResult:
    """Exhaustive scan of the grid; first candidate wins ties.

    Candidates that satisfy every target tolerance outrank any that miss
    one, then the worst relative miss decides; a low aggregate score must
    not buy its way out of a hard tolerance.
    """
    for key in _GRID_KEYS:
        if not grid.get(key):
            raise CalibrationError(f"grid dimension {key!r} is empty")
    if not targets:
        raise CalibrationError("no calibration targets given")

    paths = {t.scenario_key: generate(t.spec) for t in targets}
    memo: dict = {}
    best_key: tuple | None = None
    best_score: Dec | None = None
    best_params: dict[str, Dec] | None = None
    best_results: tuple[TargetResult, ...] = ()
    count = 0
    for combo in itertools.product(*(grid[k] for k in _GRID_KEYS)):
        params = dict(zip(_GRID_KEYS, combo))
        count += 1
        score, results = evaluate_candidate(params, targets, fixed, paths, memo)
        key = (not all(r.feasible for r in results), score)
        if best_key is None or key < best_key:
            best_key, best_score, best_params, best_results = key, score, params, results
    return CalibrationResult(
        params=best_params,
        u_optimal=fixed[0],
        derivative_period=fixed[1],
        derivative_enabled=fixed[2],
        score=best_score,
        results=best_results,
        candidates_evaluated=count,
    )


def calibrate(targets_path) -> CalibrationResult:
    grid, fixed, targets = load_targets(targets_path)
    return grid_search(grid, fixed, targets)


def result_strategy_block(result: CalibrationResult, name: str = "pid") -> dict:
    """The frozen default config: a strategy block usable in run configs."""
    return {
        "kind": "pid",
        "name": name,
        "k_p": result.params["k_p"].canonical(),
        "k_i": result.params["k_i"].canonical(),
        "k_d": result.params["k_d"].canonical(),
        "u_optimal": result.u_optimal.canonical(),
        "m": result.params["m"].canonical(),
        "n": result.params["n"].canonical(),
        "derivative_period": result.derivative_period,
        "derivative_enabled": result.derivative_enabled,
    }


def result_report(result: CalibrationResult) -> dict:
    return {
        "score_max_relative_miss": result.score.canonical(),
        "feasible": result.feasible,
        "candidates_evaluated": result.candidates_evaluated,
        "params": {k: v.canonical() for k, v in result.params.items()},
        "targets": [
            {
                "name": r.name,
                "target": r.target.canonical(),
                "achieved": r.achieved.canonical(),
                "tol": r.tol.canonical(),
                "miss_abs": r.miss_abs.canonical(),
                "miss_rel": r.miss_rel.canonical(),
                "feasible": r.feasible,
            }
            for r in result.results
        ],
    }
