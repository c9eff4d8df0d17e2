"""Simulation engine: drive strategies over a scenario and record traces.

A run folds each strategy's state over the utilization sequence. Open-loop
runs share one exogenous sequence across all strategies, so their traces
are independent of each other; closed-loop runs (a scenario with a
feedback model) evolve utilization against a single strategy's delayed
rate, because comparing closed-loop strategies "on the same market" is
ill-posed: each strategy induces its own market path.

Everything here is deterministic: a (config, spec, backend) triple always
reproduces the same trace, bit-for-bit under the fixed backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import baselines, pid
from .exceptions import IrmLabError, ReplayMismatch, StepError, ValidationError
from .numerics import FIXED, ONE, ZERO, Dec
from .scenario import ScenarioSpec, SplitMix64, feedback_next, generate

_PID_FIELDS = ("rate", "u_error", "u_p", "u_i", "u_i_raw", "u_d", "controller_error")
_NOISE_SEED_SALT = 0x5CE9A6E0B4D3F214  # decorrelates feedback noise from walk draws


class PidStrategy:
    kind = "pid"
    fields = _PID_FIELDS

    def __init__(self, name: str, config: pid.PidConfig):
        self.name = name
        self.config = config

    def initial_state(self, created_at: int):
        return pid.initial_state(created_at)

    def step(self, state, u: Dec, now: int, backend):
        state, b = pid.update_and_rate(self.config, state, u, now, backend)
        record = {
            "rate": b.rate,
            "u_error": b.u_error,
            "u_p": b.u_p,
            "u_i": b.u_i,
            "u_i_raw": b.u_i_raw,
            "u_d": b.u_d,
            "controller_error": b.controller_error,
        }
        return state, record

    def snapshot(self, state) -> dict:
        return pid.state_snapshot(state)


class AaveStrategy:
    kind = "aave"
    fields = ("rate",)

    def __init__(self, name: str, config: baselines.AaveConfig):
        self.name = name
        self.config = config

    def initial_state(self, created_at: int):
        return None

    def step(self, state, u: Dec, now: int, backend):
        return None, {"rate": baselines.aave_rate(self.config, u, backend)}

    def snapshot(self, state) -> dict:
        return {}


class AjnaStrategy:
    kind = "ajna"
    fields = ("rate",)

    def __init__(self, name: str, config: baselines.AjnaConfig):
        self.name = name
        self.config = config

    def initial_state(self, created_at: int):
        return baselines.ajna_initial_state(self.config, created_at)

    def step(self, state, u: Dec, now: int, backend):
        state = baselines.ajna_step(self.config, state, u, now, backend)
        return state, {"rate": state.current_rate}

    def snapshot(self, state) -> dict:
        return baselines.ajna_state_snapshot(state)


class MorphoStrategy:
    kind = "morpho"
    fields = ("rate",)

    def __init__(self, name: str, config: baselines.MorphoConfig, rate_at_target: Dec):
        self.name = name
        self.config = config
        self.rate_at_target = rate_at_target

    def initial_state(self, created_at: int):
        return baselines.morpho_initial_state(self.config, self.rate_at_target, created_at)

    def step(self, state, u: Dec, now: int, backend):
        state, rate = baselines.morpho_step(self.config, state, u, now, backend)
        return state, {"rate": rate}

    def snapshot(self, state) -> dict:
        return baselines.morpho_state_snapshot(state)


IrmStrategy = PidStrategy | AaveStrategy | AjnaStrategy | MorphoStrategy


@dataclass
class SimTrace:
    """Time-indexed record of one run: shared clock plus per-strategy series."""

    dt: int
    seed: int
    backend_name: str
    settle_target: Dec
    strategy_fields: dict[str, tuple[str, ...]]
    steps: list[int] = field(default_factory=list)
    timestamps: list[int] = field(default_factory=list)
    utilization: list[Dec] = field(default_factory=list)
    series: dict[str, dict[str, list[Dec]]] = field(default_factory=dict)
    final_states: dict[str, dict] = field(default_factory=dict)

    def columns(self) -> list[str]:
        cols = ["step", "timestamp", "utilization"]
        for name, fields in self.strategy_fields.items():
            cols.extend(f"{name}.{f}" for f in fields)
        return cols

    def row(self, i: int) -> list[str]:
        cells = [str(self.steps[i]), str(self.timestamps[i]), self.utilization[i].canonical()]
        for name, fields in self.strategy_fields.items():
            cells.extend(self.series[name][f][i].canonical() for f in fields)
        return cells

    def __len__(self) -> int:
        return len(self.steps)

    def rates(self, name: str) -> list[Dec]:
        return self.series[name]["rate"]


def _validate_strategies(strategies: list[IrmStrategy], spec: ScenarioSpec):
    if not strategies:
        raise ValidationError("run requires at least one strategy")
    names = [s.name for s in strategies]
    if len(set(names)) != len(names):
        raise ValidationError(f"strategy names must be unique, got {names}")
    if spec.feedback is not None and len(strategies) != 1:
        raise ValidationError("closed-loop runs take exactly one strategy per simulation")


def run(
    strategies: list[IrmStrategy],
    spec: ScenarioSpec,
    backend=FIXED,
    created_at: int = 0,
    seed: int | None = None,
    settle_target: Dec | None = None,
) -> SimTrace:
    """Execute every strategy over the scenario and record the full trace."""
    _validate_strategies(strategies, spec)
    effective_seed = spec.seed if seed is None else seed
    trace = SimTrace(
        dt=spec.dt,
        seed=effective_seed,
        backend_name=backend.name,
        settle_target=settle_target if settle_target is not None else _settle_target(strategies),
        strategy_fields={s.name: s.fields for s in strategies},
        series={s.name: {f: [] for f in s.fields} for s in strategies},
    )
    states = {s.name: s.initial_state(created_at) for s in strategies}

    if spec.feedback is None:
        path = generate(spec, seed=effective_seed)
        for idx, (ts, u) in enumerate(path, start=1):
            _record_step(trace, strategies, states, idx, ts, u, backend)
    else:
        model = spec.feedback
        open_path = generate(spec, seed=effective_seed)
        noise_rng = SplitMix64(effective_seed ^ _NOISE_SEED_SALT)
        strat = strategies[0]
        u = open_path[0][1]
        rates: list[Dec] = []
        for idx in range(1, spec.total_steps + 1):
            if idx > 1:
                delayed_idx = idx - model.delay
                rate_delayed = rates[delayed_idx - 1] if delayed_idx >= 1 else model.reference_rate
                noise = FIXED.mul(model.noise_volatility, noise_rng.uniform_signed())
                u = feedback_next(model, u, rate_delayed, noise)
            _record_step(trace, strategies, states, idx, idx * spec.dt, u, backend)
            rates.append(trace.series[strat.name]["rate"][-1])

    trace.final_states = {s.name: s.snapshot(states[s.name]) for s in strategies}
    return trace


def _record_step(trace, strategies, states, idx, ts, u, backend):
    trace.steps.append(idx)
    trace.timestamps.append(ts)
    trace.utilization.append(u)
    for strat in strategies:
        try:
            states[strat.name], record = strat.step(states[strat.name], u, ts, backend)
        except IrmLabError as exc:
            raise StepError(idx, strat.name, exc) from exc
        for f in strat.fields:
            trace.series[strat.name][f].append(record[f])


def _settle_target(strategies) -> Dec:
    """Utilization target for the settling metric: the first strategy's set-point."""
    for s in strategies:
        if isinstance(s, PidStrategy):
            return s.config.u_optimal
        if isinstance(s, AjnaStrategy):
            return s.config.target_utilization
        if isinstance(s, MorphoStrategy):
            return s.config.u_target
        if isinstance(s, AaveStrategy):
            return s.config.u_kink
    return Dec("0.5")


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StrategyMetrics:
    max_rate: Dec
    overshoot: Dec
    rate_at: dict[int, Dec]


@dataclass(frozen=True)
class Metrics:
    settling_time: int
    time_above: int
    band: Dec
    u_threshold: Dec
    per_strategy: dict[str, StrategyMetrics]


def compute_metrics(
    trace: SimTrace,
    band: Dec,
    u_threshold: Dec = Dec("0.9"),
    probes: tuple[int, ...] = (),
) -> Metrics:
    """Summary statistics of a trace.

    Settling time counts the steps before |u - target| stays within the
    band for the remainder of the trace (sentinel: length + 1 when the last
    row is still outside). Overshoot compares each strategy's peak rate
    after the utilization inflection (the first step utilization reaches
    its maximum) to the rate at that inflection.
    """
    n = len(trace)
    if n == 0:
        raise ValidationError("cannot compute metrics of an empty trace")

    target = trace.settle_target
    last_outside = 0
    for i in range(n - 1, -1, -1):
        if abs(trace.utilization[i] - target) > band:
            last_outside = i + 1
            break
    settling = n + 1 if last_outside == n else last_outside

    above = sum(1 for u in trace.utilization if u > u_threshold)

    u_max = max(trace.utilization)
    inflection = trace.utilization.index(u_max)

    per_strategy = {}
    for name in trace.strategy_fields:
        rates = trace.rates(name)
        at_inflection = rates[inflection]
        peak_after = max(rates[inflection:])
        if at_inflection == ZERO:
            overshoot = ONE  # degenerate: no rate to overshoot from
        else:
            overshoot = FIXED.div(peak_after, at_inflection)
        rate_at = {}
        for p in probes:
            if not 1 <= p <= n:
                raise ValidationError(f"probe step {p} outside trace of length {n}")
            rate_at[p] = rates[p - 1]
        per_strategy[name] = StrategyMetrics(max_rate=max(rates), overshoot=overshoot, rate_at=rate_at)

    return Metrics(
        settling_time=settling,
        time_above=above,
        band=band,
        u_threshold=u_threshold,
        per_strategy=per_strategy,
    )


def metrics_record(metrics: Metrics, trace: SimTrace) -> dict:
    """JSON-ready summary, decimals in canonical strings."""
    return {
        "settling_time": metrics.settling_time,
        "time_above": metrics.time_above,
        "band": metrics.band.canonical(),
        "u_threshold": metrics.u_threshold.canonical(),
        "settle_target": trace.settle_target.canonical(),
        "strategies": {
            name: {
                "max_rate": sm.max_rate.canonical(),
                "overshoot": sm.overshoot.canonical(),
                "rate_at": {str(step): rate.canonical() for step, rate in sm.rate_at.items()},
            }
            for name, sm in metrics.per_strategy.items()
        },
        "final_states": trace.final_states,
    }


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------

_REL_FLOOR = Dec("0.000000001")  # 1e-9: denominator floor for relative diffs


def replay(
    strategies: list[IrmStrategy],
    spec: ScenarioSpec,
    trace_path,
    backend=FIXED,
    rel_tol: Dec | None = None,
    created_at: int = 0,
    seed: int | None = None,
    settle_target: Dec | None = None,
) -> SimTrace:
    """Re-execute a recorded trace and assert it has not drifted.

    Exact (bit-identical) comparison by default; pass rel_tol for
    cross-backend comparison, where only power/exponential roundings may
    legitimately differ.
    """
    from .tracefile import read_trace  # local import: tracefile has no engine dep

    recorded = read_trace(trace_path)
    fresh = run(
        strategies, spec, backend=backend, created_at=created_at, seed=seed, settle_target=settle_target
    )
    fresh_cols = fresh.columns()
    if recorded.columns != fresh_cols:
        raise ReplayMismatch(0, "header", ",".join(recorded.columns), ",".join(fresh_cols))
    if len(recorded.rows) != len(fresh):
        raise ReplayMismatch(0, "row-count", str(len(recorded.rows)), str(len(fresh)))
    for i, recorded_row in enumerate(recorded.rows):
        fresh_row = fresh.row(i)
        for col, rec_cell, new_cell in zip(fresh_cols, recorded_row, fresh_row):
            if rec_cell == new_cell:
                continue
            if rel_tol is not None and col not in ("step", "timestamp"):
                a, b = Dec(rec_cell), Dec(new_cell)
                denom = max(abs(a), _REL_FLOOR)
                if abs(a - b) <= FIXED.mul(rel_tol, denom):
                    continue
            raise ReplayMismatch(fresh.steps[i], col, rec_cell, new_cell)
    return fresh
