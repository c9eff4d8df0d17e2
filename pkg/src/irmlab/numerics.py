"""Signed fixed-point decimal arithmetic with 18 fractional digits.

Values are integers scaled by 10^18 ("wad" convention), bounded to the
int256 range so every production-path computation stays within reach of a
smart-contract runtime. Rounding is half-away-from-zero everywhere, one rule
for every operation so differential tests have no bias disputes.

Two interchangeable backends expose the rounding operations:

* ``FIXED`` performs everything on raw integers, including fractional powers
  via binary fixed-point exp/ln (argument reduction + series, carried at a
  2^96 internal scale so the public 18-digit results are accurate to well
  under 1e-12 relative).
* ``REFERENCE`` computes through ``decimal.Decimal`` at 50 significant
  digits and rounds each result back to the 18-digit lattice. It exists to
  cross-check the integer path, never to replace it.

Addition, subtraction, negation, and comparison are exact in 18 digits and
live directly on :class:`Dec`; only the rounding operations go through a
backend.
"""

from __future__ import annotations

import decimal
from decimal import Decimal as _PyDec

from .exceptions import ArithmeticOverflow, DecimalDivisionByZero, DomainError

SCALE = 10**18

# int256 bounds, mirroring the dominant on-chain convention.
RAW_MAX = 2**255 - 1
RAW_MIN = -(2**255)

_TWO96 = 1 << 96
# round(ln(2) * 2^96) and round(sqrt(2) * 2^96)
_LN2_96 = 54916777467707473351141471128
_SQRT2_96 = 112045541949572279837463876455
# floor(ln(RAW_MAX / 1e18) * 1e18): exp() overflows int256 above this arg
_EXP_ARG_MAX = 135305999368893231589
# floor(ln(0.5e-18) * 1e18): exp() rounds to zero at or below this arg.
# Results just above sit within ~1e-36 of the half-ulp boundary, so the
# backends may legitimately disagree by one raw unit there; the differential
# contract's 1e-9 denominator floor covers exactly this regime.
_EXP_ARG_MIN = -42139678854452767622


def _check_raw(raw: int) -> int:
    if raw > RAW_MAX or raw < RAW_MIN:
        raise ArithmeticOverflow(f"raw value {raw} outside int256 range")
    return raw


def _div_half_away(n: int, d: int) -> int:
    """n/d rounded half-away-from-zero. d must be positive."""
    if n >= 0:
        return (2 * n + d) // (2 * d)
    return -((-2 * n + d) // (2 * d))


class Dec:
    """An immutable fixed-point number: a signed integer scaled by 10^18."""

    __slots__ = ("raw",)

    raw: int

    def __init__(self, value: "int | str | Dec" = 0):
        if isinstance(value, Dec):
            raw = value.raw
        elif isinstance(value, int):
            raw = value * SCALE
        elif isinstance(value, str):
            raw = _parse_raw(value)
        else:
            raise TypeError(f"cannot build Dec from {type(value).__name__}")
        object.__setattr__(self, "raw", _check_raw(raw))

    @classmethod
    def from_raw(cls, raw: int) -> "Dec":
        out = object.__new__(cls)
        object.__setattr__(out, "raw", _check_raw(raw))
        return out

    def __setattr__(self, name, value):  # pragma: no cover - guard only
        raise AttributeError("Dec is immutable")

    # -- exact arithmetic ------------------------------------------------

    def __add__(self, other: "Dec") -> "Dec":
        return Dec.from_raw(self.raw + other.raw)

    def __sub__(self, other: "Dec") -> "Dec":
        return Dec.from_raw(self.raw - other.raw)

    def __neg__(self) -> "Dec":
        return Dec.from_raw(-self.raw)

    def __abs__(self) -> "Dec":
        return Dec.from_raw(abs(self.raw))

    # -- comparison ------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Dec) and self.raw == other.raw

    def __lt__(self, other: "Dec") -> bool:
        return self.raw < other.raw

    def __le__(self, other: "Dec") -> bool:
        return self.raw <= other.raw

    def __gt__(self, other: "Dec") -> bool:
        return self.raw > other.raw

    def __ge__(self, other: "Dec") -> bool:
        return self.raw >= other.raw

    def __hash__(self) -> int:
        return hash(("Dec", self.raw))

    def __bool__(self) -> bool:
        return self.raw != 0

    # -- conversion ------------------------------------------------------

    def canonical(self) -> str:
        """Canonical decimal string: sign, integer part, '.', 18 digits."""
        sign = "-" if self.raw < 0 else ""
        whole, frac = divmod(abs(self.raw), SCALE)
        return f"{sign}{whole}.{frac:018d}"

    def to_float(self) -> float:
        """Binary-float approximation, for display and plotting only."""
        return self.raw / SCALE

    def __str__(self) -> str:
        return self.canonical()

    def __repr__(self) -> str:
        return f"Dec('{self.canonical()}')"


def _parse_raw(text: str) -> int:
    s = text.strip()
    if not s:
        raise DomainError("empty decimal string")
    sign = 1
    if s[0] in "+-":
        sign = -1 if s[0] == "-" else 1
        s = s[1:]
    if "." in s:
        whole_s, frac_s = s.split(".", 1)
    else:
        whole_s, frac_s = s, ""
    if whole_s == "" and frac_s == "":
        raise DomainError(f"malformed decimal string {text!r}")
    if (whole_s and not whole_s.isdigit()) or (frac_s and not frac_s.isdigit()):
        raise DomainError(f"malformed decimal string {text!r}")
    if len(frac_s) > 18:
        # Lossless round-trips are part of the contract: refuse to round input.
        raise DomainError(f"{text!r} has more than 18 fractional digits")
    whole = int(whole_s) if whole_s else 0
    frac = int(frac_s) * 10 ** (18 - len(frac_s)) if frac_s else 0
    return sign * (whole * SCALE + frac)


ZERO = Dec(0)
ONE = Dec(1)
TWO = Dec(2)
NEG_ONE = Dec(-1)
HALF = Dec("0.5")


def clamp(x: Dec, lo: Dec, hi: Dec) -> Dec:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


def mul_int(a: Dec, k: int) -> Dec:
    """Exact product with a plain integer (no rounding)."""
    return Dec.from_raw(a.raw * k)


# ---------------------------------------------------------------------------
# fixed-point backend: raw-integer algorithms
# ---------------------------------------------------------------------------


def _fixed_mul(a: Dec, b: Dec) -> Dec:
    return Dec.from_raw(_div_half_away(a.raw * b.raw, SCALE))


def _fixed_div(a: Dec, b: Dec) -> Dec:
    if b.raw == 0:
        raise DecimalDivisionByZero("division by zero")
    n = a.raw * SCALE
    if b.raw < 0:
        n, d = -n, -b.raw
    else:
        d = b.raw
    return Dec.from_raw(_div_half_away(n, d))


def _to96(raw: int) -> int:
    return _div_half_away(raw * _TWO96, SCALE)


def _from96(x96: int) -> int:
    return _div_half_away(x96 * SCALE, _TWO96)


def _ln96(x96: int) -> int:
    """ln of x96 (2^96 scale, > 0), returned at 2^96 scale.

    Range-reduce to m in [1/sqrt2, sqrt2), then sum the odd atanh series in
    t = (m-1)/(m+1); |t| < 0.1716 so roughly nineteen terms reach 2^-96.
    """
    k = x96.bit_length() - 97
    m = x96 >> k if k >= 0 else x96 << -k
    if m >= _SQRT2_96:
        m = (m + 1) >> 1
        k += 1
    num = m - _TWO96
    den = m + _TWO96
    t = _div_half_away(num << 96, den) if num >= 0 else -_div_half_away((-num) << 96, den)
    sign = -1 if t < 0 else 1
    u = abs(t)
    u2 = (u * u) >> 96
    acc = u
    power = u
    i = 3
    while True:
        power = (power * u2) >> 96
        if power == 0:
            break
        acc += power // i
        i += 2
    return sign * 2 * acc + k * _LN2_96


def _exp96(x96: int) -> int:
    """e^x for x96 at 2^96 scale (any sign), returned at 2^96 scale.

    Factor out k = round(x / ln2) so the Taylor series runs on
    |r| <= ln(2)/2, where some twenty terms reach 2^-96.
    """
    k = _div_half_away(x96, _LN2_96) if x96 >= 0 else -_div_half_away(-x96, _LN2_96)
    r = x96 - k * _LN2_96
    term = _TWO96
    acc = _TWO96
    i = 1
    while term != 0:
        prod = term * r
        term = _div_half_away(prod, i << 96) if prod >= 0 else -_div_half_away(-prod, i << 96)
        acc += term
        i += 1
    if k >= 0:
        return acc << k
    shift = -k
    return ((acc >> (shift - 1)) + 1) >> 1


def _fixed_exp(a: Dec) -> Dec:
    if a.raw >= _EXP_ARG_MAX:
        raise ArithmeticOverflow(f"exp({a}) exceeds the representable range")
    if a.raw <= _EXP_ARG_MIN:
        return ZERO
    return Dec.from_raw(_from96(_exp96(_to96(a.raw))))


def _fixed_ln(a: Dec) -> Dec:
    if a.raw <= 0:
        raise DomainError(f"ln requires a positive argument, got {a}")
    return Dec.from_raw(_from96(_ln96(_to96(a.raw))))


def _fixed_log2(a: Dec) -> Dec:
    """Base-2 logarithm with a single rounding (ln ratio taken at 2^96)."""
    if a.raw <= 0:
        raise DomainError(f"log2 requires a positive argument, got {a}")
    l = _ln96(_to96(a.raw))
    ratio = _div_half_away(l << 96, _LN2_96) if l >= 0 else -_div_half_away((-l) << 96, _LN2_96)
    return Dec.from_raw(_from96(ratio))


def _fixed_pow(base: Dec, exponent: Dec) -> Dec:
    if base.raw < 0 or base.raw > SCALE:
        raise DomainError(f"pow base must lie in [0, 1], got {base}")
    if exponent.raw <= 0:
        raise DomainError(f"pow exponent must be positive, got {exponent}")
    if base.raw == 0:
        return ZERO
    if base.raw == SCALE:
        return ONE
    ln96 = _ln96(_to96(base.raw))
    y96 = _to96(exponent.raw)
    prod = y96 * ln96  # ln96 < 0 here
    arg96 = -_div_half_away(-prod, _TWO96)
    if _div_half_away(-arg96 * SCALE, _TWO96) >= -_EXP_ARG_MIN:
        return ZERO
    return Dec.from_raw(_from96(_exp96(arg96)))


class FixedBackend:
    """Raw-integer arithmetic; the production path."""

    name = "fixed"

    mul = staticmethod(_fixed_mul)
    div = staticmethod(_fixed_div)
    pow = staticmethod(_fixed_pow)
    exp = staticmethod(_fixed_exp)
    ln = staticmethod(_fixed_ln)
    log2 = staticmethod(_fixed_log2)


# ---------------------------------------------------------------------------
# reference backend: decimal.Decimal at 50 significant digits
# ---------------------------------------------------------------------------

_REF_PREC = 50


def _ref_ctx() -> decimal.Context:
    return decimal.Context(prec=_REF_PREC, Emin=-999999, Emax=999999)


def _to_pydec(a: Dec) -> _PyDec:
    # scaleb only shifts the exponent: exact regardless of context precision
    return _PyDec(a.raw).scaleb(-18)


def _from_pydec(x: _PyDec) -> Dec:
    raw = int(x.scaleb(18).to_integral_value(rounding=decimal.ROUND_HALF_UP))
    return Dec.from_raw(raw)


class ReferenceBackend:
    """High-precision twin of every rounding operation, for cross-checks."""

    name = "reference"

    @staticmethod
    def mul(a: Dec, b: Dec) -> Dec:
        with decimal.localcontext(_ref_ctx()):
            return _from_pydec(_to_pydec(a) * _to_pydec(b))

    @staticmethod
    def div(a: Dec, b: Dec) -> Dec:
        if b.raw == 0:
            raise DecimalDivisionByZero("division by zero")
        with decimal.localcontext(_ref_ctx()):
            return _from_pydec(_to_pydec(a) / _to_pydec(b))

    @staticmethod
    def pow(base: Dec, exponent: Dec) -> Dec:
        if base.raw < 0 or base.raw > SCALE:
            raise DomainError(f"pow base must lie in [0, 1], got {base}")
        if exponent.raw <= 0:
            raise DomainError(f"pow exponent must be positive, got {exponent}")
        if base.raw == 0:
            return ZERO
        if base.raw == SCALE:
            return ONE
        with decimal.localcontext(_ref_ctx()):
            out = (_to_pydec(exponent) * _to_pydec(base).ln()).exp()
            return _from_pydec(out)

    @staticmethod
    def exp(a: Dec) -> Dec:
        if a.raw >= _EXP_ARG_MAX:
            raise ArithmeticOverflow(f"exp({a}) exceeds the representable range")
        with decimal.localcontext(_ref_ctx()):
            return _from_pydec(_to_pydec(a).exp())

    @staticmethod
    def ln(a: Dec) -> Dec:
        if a.raw <= 0:
            raise DomainError(f"ln requires a positive argument, got {a}")
        with decimal.localcontext(_ref_ctx()):
            return _from_pydec(_to_pydec(a).ln())

    @staticmethod
    def log2(a: Dec) -> Dec:
        if a.raw <= 0:
            raise DomainError(f"log2 requires a positive argument, got {a}")
        with decimal.localcontext(_ref_ctx()):
            return _from_pydec(_to_pydec(a).ln() / _PyDec(2).ln())


FIXED = FixedBackend()
REFERENCE = ReferenceBackend()

_BACKENDS = {"fixed": FIXED, "reference": REFERENCE}


def get_backend(name: str):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise DomainError(f"unknown backend {name!r}; expected one of {sorted(_BACKENDS)}") from None


# Module-level aliases: the fixed backend is the default arithmetic.
mul = _fixed_mul
div = _fixed_div
pow = _fixed_pow  # noqa: A001 - deliberate, namespaced as numerics.pow
exp = _fixed_exp
ln = _fixed_ln
log2 = _fixed_log2
