"""Fixed-point arithmetic: contracts, rounding, and the reference twin."""

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from irmlab.exceptions import ArithmeticOverflow, DecimalDivisionByZero, DomainError
from irmlab.numerics import (
    FIXED,
    ONE,
    RAW_MAX,
    REFERENCE,
    SCALE,
    ZERO,
    Dec,
    div,
    exp,
    ln,
    mul,
)
from irmlab.numerics import pow as dpow

REL_FLOOR = Dec("0.000000001")  # 1e-9


def rel_diff(a: Dec, b: Dec) -> Dec:
    return div(abs(a - b), max(abs(b), REL_FLOOR))


# -- construction and strings ------------------------------------------------


def test_parse_and_canonical_round_trip():
    for text in ("0", "1", "-1", "0.5", "-0.119232", "2.74658203125", "123.000000000000000001"):
        d = Dec(text)
        assert Dec(d.canonical()) == d


def test_canonical_is_18_digits():
    assert Dec("0.5").canonical() == "0.500000000000000000"
    assert Dec("-3").canonical() == "-3.000000000000000000"
    assert Dec.from_raw(-1).canonical() == "-0.000000000000000001"


def test_parse_rejects_lossy_and_malformed():
    with pytest.raises(DomainError):
        Dec("0.1234567890123456789")  # 19 fractional digits
    for bad in ("", ".", "1.2.3", "abc", "1e5", "--1"):
        with pytest.raises(DomainError):
            Dec(bad)


@given(st.integers(min_value=-(10**24), max_value=10**24))
def test_raw_string_round_trip(raw):
    d = Dec.from_raw(raw)
    assert Dec(d.canonical()).raw == raw


def test_from_raw_range_checked():
    Dec.from_raw(RAW_MAX)
    with pytest.raises(ArithmeticOverflow):
        Dec.from_raw(RAW_MAX + 1)


# -- mul / div ---------------------------------------------------------------


def test_mul_trivial_examples():
    assert mul(Dec("1"), Dec("1")) == Dec("1")
    assert mul(Dec("0.5"), Dec("0.5")) == Dec("0.25")
    assert mul(Dec("1.1"), Dec("0.05")) == Dec("0.055")


def test_div_trivial_examples():
    assert div(Dec("1"), Dec("2")) == Dec("0.5")
    assert div(Dec("0.3"), Dec("0.5")) == Dec("0.6")
    rng = random.Random(1)
    for _ in range(50):
        x = Dec.from_raw(rng.randint(1, 10**20) * rng.choice((1, -1)))
        assert div(x, x) == ONE


def test_div_by_zero():
    with pytest.raises(DecimalDivisionByZero):
        div(ONE, ZERO)


def test_rounding_half_away_from_zero():
    # 0.5 ulp remainders move away from zero, both signs
    assert mul(Dec.from_raw(1), Dec("0.5")).raw == 1
    assert mul(Dec.from_raw(-1), Dec("0.5")).raw == -1
    assert mul(Dec.from_raw(3), Dec("0.5")).raw == 2
    assert div(Dec.from_raw(1), Dec("2")).raw == 1
    assert div(Dec.from_raw(-1), Dec("2")).raw == -1
    assert div(ONE, Dec("3")) == Dec("0.333333333333333333")


def test_mul_overflow_reported():
    big = Dec.from_raw(RAW_MAX)
    with pytest.raises(ArithmeticOverflow):
        mul(big, Dec("2"))
    with pytest.raises(ArithmeticOverflow):
        big + big


@given(
    st.integers(min_value=-(10**21), max_value=10**21),
    st.integers(min_value=-(10**21), max_value=10**21),
)
def test_mul_commutes(raw_a, raw_b):
    a, b = Dec.from_raw(raw_a), Dec.from_raw(raw_b)
    assert mul(a, b) == mul(b, a)


@given(
    st.integers(min_value=-(10**21), max_value=10**21),
    st.integers(min_value=SCALE // 2, max_value=10**21),
)
def test_div_mul_round_trip_within_one_raw(raw_a, raw_b):
    # |div(mul(a,b), b) - a| <= 0.5/b + 0.5 raw units, so the 1-raw bound
    # needs b >= 0.5; below that the first rounding amplifies arithmetically.
    a, b = Dec.from_raw(raw_a), Dec.from_raw(raw_b)
    back = div(mul(a, b), b)
    assert abs(back - a).raw <= 1


# -- pow / exp / ln ----------------------------------------------------------


def test_pow_trivial_examples():
    assert dpow(Dec("1"), Dec("3.5")) == ONE
    assert dpow(ZERO, Dec("2")) == ZERO
    assert dpow(Dec("0.5"), Dec("2")) == Dec("0.25")


def test_pow_domain_errors():
    with pytest.raises(DomainError):
        dpow(Dec("1.000000000000000001"), ONE)
    with pytest.raises(DomainError):
        dpow(Dec("-0.1"), ONE)
    with pytest.raises(DomainError):
        dpow(Dec("0.5"), ZERO)
    with pytest.raises(DomainError):
        dpow(Dec("0.5"), Dec("-1"))


def test_pow_derived_against_reference():
    fixed = dpow(Dec("0.8"), Dec("3.5"))
    ref = REFERENCE.pow(Dec("0.8"), Dec("3.5"))
    assert rel_diff(fixed, ref) <= REL_FLOOR
    # frozen value, computed once with the 50-digit twin
    assert ref == Dec("0.457946721791956930")


def test_pow_monotone_in_base():
    n = Dec("3.7")
    prev = ZERO
    for i in range(1, 10001):
        cur = dpow(Dec.from_raw(i * SCALE // 10000), n)
        assert cur >= prev
        prev = cur


def test_exp_ln_known_values():
    assert exp(ZERO) == ONE
    assert exp(ONE) == Dec("2.718281828459045235")
    assert ln(ONE) == ZERO
    assert ln(Dec("2")) == Dec("0.693147180559945309")
    with pytest.raises(DomainError):
        ln(ZERO)
    with pytest.raises(ArithmeticOverflow):
        exp(Dec("136"))
    assert exp(Dec("-43")) == ZERO  # underflows the 18-digit lattice


def test_exp_ln_inverse():
    rng = random.Random(7)
    for _ in range(200):
        x = Dec.from_raw(rng.randint(SCALE // 100, 20 * SCALE))
        assert rel_diff(exp(ln(x)), x) <= REL_FLOOR


# -- reference twin ----------------------------------------------------------


def test_reference_twin_trivial():
    assert REFERENCE.pow(Dec("0.5"), Dec("1")) == Dec("0.5")
    assert REFERENCE.div(Dec("1"), Dec("3")) == Dec("0.333333333333333333")
    assert REFERENCE.mul(Dec("1.1"), Dec("0.05")) == Dec("0.055")


def test_mul_twin_agrees_within_one_ulp_100k():
    rng = random.Random(20260809)
    for _ in range(100_000):
        a = Dec.from_raw(rng.randint(-(10**21), 10**21))
        b = Dec.from_raw(rng.randint(-(10**21), 10**21))
        assert abs(mul(a, b) - REFERENCE.mul(a, b)).raw <= 1


def test_div_twin_agrees_within_one_ulp_100k():
    rng = random.Random(20260810)
    for _ in range(100_000):
        a = Dec.from_raw(rng.randint(-(10**21), 10**21))
        b = Dec.from_raw(rng.choice((1, -1)) * rng.randint(10**12, 10**21))
        assert abs(div(a, b) - REFERENCE.div(a, b)).raw <= 1


def test_pow_backend_agreement_100k():
    # module invariant: |fp - ref| / max(ref, 1e-9) <= 1e-6 over seeded inputs
    rng = random.Random(20260811)
    tol = Dec("0.000001")
    for _ in range(100_000):
        base = Dec.from_raw(rng.randint(1, SCALE))
        exponent = Dec.from_raw(rng.randint(10**16, 12 * SCALE))
        f = FIXED.pow(base, exponent)
        r = REFERENCE.pow(base, exponent)
        assert rel_diff(f, r) <= tol


def test_pow_contract_1e9_relative_on_stated_range():
    # base in [1e-6, 1], exponents up to 10: relative error <= 1e-9 vs twin
    rng = random.Random(20260812)
    for _ in range(5_000):
        base = Dec.from_raw(rng.randint(10**12, SCALE))
        exponent = Dec.from_raw(rng.randint(10**17, 10 * SCALE))
        f = FIXED.pow(base, exponent)
        r = REFERENCE.pow(base, exponent)
        if r >= REL_FLOOR:
            assert div(abs(f - r), r) <= REL_FLOOR


def test_exp_backend_agreement_100k():
    rng = random.Random(20260813)
    tol = Dec("0.000001")
    for _ in range(100_000):
        x = Dec.from_raw(rng.randint(-40 * SCALE, 20 * SCALE))
        assert rel_diff(FIXED.exp(x), REFERENCE.exp(x)) <= tol


def test_ln_log2_backend_agreement_100k():
    rng = random.Random(20260814)
    tol = Dec("0.000001")
    for _ in range(100_000):
        x = Dec.from_raw(rng.randint(1, 100 * SCALE))
        assert rel_diff(FIXED.ln(x), REFERENCE.ln(x)) <= tol
    for _ in range(2_000):
        x = Dec.from_raw(rng.randint(1, 100 * SCALE))
        assert rel_diff(FIXED.log2(x), REFERENCE.log2(x)) <= tol
