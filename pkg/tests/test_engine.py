"""Engine: runs, metrics, replay regression, closed-loop behavior."""

import pytest

from irmlab import engine, pid, tracefile
from irmlab.baselines import AaveConfig, AjnaConfig, MorphoConfig
from irmlab.engine import AaveStrategy, AjnaStrategy, MorphoStrategy, PidStrategy
from irmlab.exceptions import ReplayMismatch, StepError, ValidationError
from irmlab.numerics import ONE, REFERENCE, ZERO, Dec
from irmlab.scenario import FeedbackModel, ScenarioSpec, Segment

D = Dec


def pid_strategy(name="pid", **overrides) -> PidStrategy:
    params = dict(
        k_p=D("1.13"),
        k_i=D("0.0000034"),
        k_d=D("0.03"),
        u_optimal=D("0.5"),
        m=D("2.74658203125"),
        n=D("5"),
        derivative_period=18000,
        derivative_enabled=True,
    )
    params.update(overrides)
    return PidStrategy(name, pid.PidConfig(**params))


def aave_strategy(name="aave") -> AaveStrategy:
    return AaveStrategy(
        name, AaveConfig(base_rate=D("0.02"), slope1=D("0.10"), slope2=D("2.8"), u_kink=D("0.45"))
    )


def ramp_hold(ramp=50, hold=50) -> ScenarioSpec:
    return ScenarioSpec(
        segments=(
            Segment(kind="ramp", duration=ramp, start=D("0"), end=D("0.8")),
            Segment(kind="hold", duration=hold, value=D("0.8")),
        )
    )


def single_hold(value="0.5", steps=1) -> ScenarioSpec:
    return ScenarioSpec(segments=(Segment(kind="hold", duration=steps, value=D(value)),))


# -- run -----------------------------------------------------------------------


def test_single_step_at_optimal():
    trace = engine.run([pid_strategy()], single_hold())
    assert len(trace) == 1
    assert trace.rates("pid")[0] == D("0.0858306884765625")  # m * 0.5^n


def test_run_validations():
    with pytest.raises(ValidationError):
        engine.run([], single_hold())
    with pytest.raises(ValidationError):
        engine.run([pid_strategy(), pid_strategy()], single_hold())  # duplicate names


def test_open_loop_strategies_are_independent():
    spec = ramp_hold()
    alone = engine.run([pid_strategy()], spec)
    together = engine.run([pid_strategy(), aave_strategy()], spec)
    assert alone.rates("pid") == together.rates("pid")
    assert alone.series["pid"] == together.series["pid"]


def test_run_is_bit_deterministic():
    spec = ScenarioSpec(
        segments=(Segment(kind="random-walk", duration=150, start=D("0.5"), volatility=D("0.07")),),
        seed=77,
    )
    strategies = [
        pid_strategy(),
        aave_strategy(),
        AjnaStrategy("ajna", AjnaConfig(target_utilization=D("0.5"), initial_rate=D("0.05"))),
        MorphoStrategy("morpho", MorphoConfig(k_p=D("0.0000016"), u_target=D("0.5")), D("0.04")),
    ]
    a = engine.run(strategies, spec)
    b = engine.run(strategies, spec)
    for name in ("pid", "aave", "ajna", "morpho"):
        assert a.series[name] == b.series[name]
    assert a.utilization == b.utilization


def test_seed_override_changes_walk():
    spec = ScenarioSpec(
        segments=(Segment(kind="random-walk", duration=60, start=D("0.5"), volatility=D("0.07")),),
        seed=1,
    )
    a = engine.run([aave_strategy()], spec)
    b = engine.run([aave_strategy()], spec, seed=2)
    assert a.utilization != b.utilization


def test_step_error_carries_index():
    # created_at after the first timestamp trips the clock-regression guard
    with pytest.raises(StepError) as info:
        engine.run([pid_strategy()], single_hold(steps=3), created_at=10**9)
    assert info.value.step == 1 and info.value.strategy == "pid"


def test_hold_phase_rate_nondecreasing():
    trace = engine.run([pid_strategy("pid", k_d=D("0"), derivative_enabled=False)], ramp_hold())
    rates = trace.rates("pid")
    for prev, cur in zip(rates[49:], rates[50:]):
        assert cur >= prev


def test_hold_at_optimal_after_history_keeps_rate_constant():
    spec = ScenarioSpec(
        segments=(
            Segment(kind="ramp", duration=30, start=D("0"), end=D("0.9")),
            Segment(kind="hold", duration=120, value=D("0.5")),
        )
    )
    trace = engine.run([pid_strategy("pid", derivative_enabled=False)], spec)
    held = trace.rates("pid")[30:]
    assert len({r.raw for r in held}) == 1


def test_hold_at_optimal_with_derivative_converges_within_decay_window():
    spec = ScenarioSpec(
        segments=(
            Segment(kind="ramp", duration=30, start=D("0"), end=D("0.9")),
            Segment(kind="hold", duration=120, value=D("0.5")),
        )
    )
    trace = engine.run([pid_strategy()], spec)  # derivative_period = 5 steps
    held = trace.rates("pid")[30:]
    # after two full lookback windows both slots hold the frozen integral
    assert len({r.raw for r in held[10:]}) == 1


# -- closed loop -----------------------------------------------------------------


def closed_loop_spec(steps=10_000) -> ScenarioSpec:
    return ScenarioSpec(
        segments=(Segment(kind="hold", duration=steps, value=D("0.3")),),
        feedback=FeedbackModel(
            elasticity=D("0.5"),
            reference_rate=D("0.0858306884765625"),
            delay=1,
            noise_volatility=ZERO,
        ),
    )


def test_closed_loop_requires_single_strategy():
    with pytest.raises(ValidationError):
        engine.run([pid_strategy(), aave_strategy()], closed_loop_spec(10))


def test_closed_loop_converges_to_reference_rate_fixed_point():
    strategy = pid_strategy("pid", k_p=ONE, k_i=ZERO, k_d=ZERO, derivative_enabled=False)
    trace = engine.run([strategy], closed_loop_spec())
    tail = trace.utilization[-2:]
    assert abs(tail[1] - tail[0]) < Dec.from_raw(10**12)  # |u_t - u_{t-1}| < 1e-6
    # P-only fixed point: rate == reference_rate exactly at u_optimal
    assert abs(trace.utilization[-1] - D("0.5")) < D("0.000001")
    assert abs(trace.rates("pid")[-1] - D("0.0858306884765625")) < D("0.000001")


# -- metrics ----------------------------------------------------------------------


def test_metrics_constant_rate_trace():
    trace = engine.run([aave_strategy()], single_hold("0.8", steps=20))
    metrics = engine.compute_metrics(trace, band=D("0.02"))
    assert metrics.per_strategy["aave"].overshoot == ONE
    assert metrics.settling_time == 21  # never inside the band: sentinel len+1
    assert metrics.time_above == 0


def test_metrics_settled_from_start():
    trace = engine.run([pid_strategy()], single_hold("0.5", steps=30))
    metrics = engine.compute_metrics(trace, band=D("0.02"))
    assert metrics.settling_time == 0


def test_metrics_settling_midway_and_probes():
    spec = ScenarioSpec(
        segments=(
            Segment(kind="hold", duration=40, value=D("0.9")),
            Segment(kind="hold", duration=60, value=D("0.5")),
        )
    )
    trace = engine.run([pid_strategy()], spec)
    metrics = engine.compute_metrics(trace, band=D("0.02"), u_threshold=D("0.8"), probes=(40, 100))
    assert metrics.settling_time == 40
    assert metrics.time_above == 40
    assert set(metrics.per_strategy["pid"].rate_at) == {40, 100}
    with pytest.raises(ValidationError):
        engine.compute_metrics(trace, band=D("0.02"), probes=(101,))


def test_metrics_overshoot_after_inflection():
    trace = engine.run([pid_strategy("pid", k_d=D("0"), derivative_enabled=False)], ramp_hold())
    metrics = engine.compute_metrics(trace, band=D("0.02"))
    pid_metrics = metrics.per_strategy["pid"]
    inflection_rate = trace.rates("pid")[49]
    final_rate = trace.rates("pid")[99]
    assert pid_metrics.max_rate == final_rate
    # rate keeps growing through the hold: overshoot = final / inflection > 1
    from irmlab.numerics import div

    assert pid_metrics.overshoot == div(final_rate, inflection_rate)
    assert pid_metrics.overshoot > ONE


def test_metrics_empty_trace_error():
    trace = engine.SimTrace(
        dt=3600, seed=0, backend_name="fixed", settle_target=D("0.5"), strategy_fields={}
    )
    with pytest.raises(ValidationError):
        engine.compute_metrics(trace, band=D("0.02"))


# -- replay ------------------------------------------------------------------------


def test_replay_fresh_trace_clean(tmp_path):
    spec = ramp_hold(20, 10)
    strategies = [pid_strategy(), aave_strategy()]
    trace = engine.run(strategies, spec)
    path = tmp_path / "trace.csv"
    tracefile.write_trace(trace, path)
    engine.replay(strategies, spec, path)  # no exception


def test_replay_detects_perturbed_cell(tmp_path):
    spec = ramp_hold(20, 10)
    strategies = [pid_strategy()]
    trace = engine.run(strategies, spec)
    path = tmp_path / "trace.csv"
    tracefile.write_trace(trace, path)
    lines = path.read_text().splitlines()
    cells = lines[7].split(",")
    rate_idx = trace.columns().index("pid.rate")
    cells[rate_idx] = "0.999999999999999999"
    lines[7] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ReplayMismatch) as info:
        engine.replay(strategies, spec, path)
    assert info.value.step == 7
    assert info.value.field == "pid.rate"


def test_replay_detects_row_count_and_header_drift(tmp_path):
    spec = ramp_hold(20, 10)
    strategies = [pid_strategy()]
    trace = engine.run(strategies, spec)
    path = tmp_path / "trace.csv"
    tracefile.write_trace(trace, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ReplayMismatch) as info:
        engine.replay(strategies, spec, path)
    assert info.value.field == "row-count"
    path.write_text("\n".join([lines[0].replace("pid.", "other.")] + lines[1:]) + "\n")
    with pytest.raises(ReplayMismatch) as info:
        engine.replay(strategies, spec, path)
    assert info.value.field == "header"


def test_replay_cross_backend_within_tolerance(tmp_path):
    spec = ramp_hold(30, 20)
    strategies = [pid_strategy()]
    trace = engine.run(strategies, spec)
    path = tmp_path / "trace.csv"
    tracefile.write_trace(trace, path)
    engine.replay(strategies, spec, path, backend=REFERENCE, rel_tol=D("0.000001"))
