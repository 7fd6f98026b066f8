"""Exact arithmetic for continued fractions with odd partial quotients.

Every partial quotient ``a`` is an odd positive integer carrying a sign
``eps`` in {-1, +1} subject to ``a + eps > 1`` (the pair ``(1, -1)`` is
inadmissible).  The expansion of x in (0, 1],

    x = 1/(a_1 + eps_1/(a_2 + eps_2/(a_3 + ...))),

is generated by iterating the odd Gauss map.  The map's branch intervals
are left-open and right-closed: x = 1/m with m odd belongs to the
plus-sign family, x = 1/m with m even to the minus-sign family.

All operations here take exact rationals (`fractions.Fraction` or int);
floats are rejected outright so branch membership is never decided by a
rounded comparison.  The convergent recurrences seed eps_0 := +1, which
is the unique choice making p_1/q_1 = 1/a_1.

Comparisons against the golden ratios G, g, and g^2 are performed by
sign evaluation of the defining integer quadratics, never against a
floating-point constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

Rational = Union[Fraction, int]


class DomainError(ValueError):
    """Input outside the operation's stated domain."""


class InadmissibleDigitError(ValueError):
    """A digit pair violates oddness, positivity, or a + eps > 1."""


def _as_fraction(x: Rational, where: str) -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (int, Fraction)):
        raise DomainError(
            f"{where}: expected an exact rational (Fraction or int), got "
            f"{type(x).__name__}; rationalize floats before calling"
        )
    return Fraction(x)


def _check_unit_interval(x: Fraction, where: str) -> None:
    if x < 0 or x > 1:
        raise DomainError(f"{where}: {x} lies outside [0, 1]")


@dataclass(frozen=True)
class Digit:
    """One partial-quotient pair (a, eps) with a odd and a + eps > 1."""

    a: int
    eps: int

    def __post_init__(self) -> None:
        if self.a < 1 or self.a % 2 == 0:
            raise InadmissibleDigitError(f"partial quotient {self.a} must be odd and >= 1")
        if self.eps not in (-1, 1):
            raise InadmissibleDigitError(f"sign {self.eps} must be -1 or +1")
        if self.a + self.eps <= 1:
            raise InadmissibleDigitError("the pair (a=1, eps=-1) is inadmissible")


@dataclass(frozen=True)
class Expansion:
    """A finite digit string; ``terminated`` means the orbit hit 0 exactly."""

    digits: tuple[Digit, ...]
    terminated: bool

    def __len__(self) -> int:
        return len(self.digits)


@dataclass(frozen=True)
class ConvergentRow:
    """One row (n, p_n, q_n, delta_n) of the convergent recurrences.

    delta_n = p_{n-1} q_n - p_n q_{n-1} for n >= 0.  The seed row n = -1
    stores delta = -1 so the recurrence delta_n = -eps_{n-1} delta_{n-1}
    holds from n = 0 onward with eps_{-1} = eps_0 = +1.
    """

    n: int
    p: int
    q: int
    delta: int


def digits_from_pairs(pairs: Iterable[tuple[int, int]]) -> tuple[Digit, ...]:
    """Build a validated digit tuple from raw (a, eps) pairs."""
    return tuple(Digit(a, eps) for a, eps in pairs)


def odd_gauss_map(x: Rational) -> Fraction:
    """Apply the odd Gauss map T to an exact rational in [0, 1].

    On the branch 1/(m+1) < x <= 1/m the map is 1/x - m when m is odd
    and 1 - (1/x - m) when m is even; T(0) = 0.
    """
    x = _as_fraction(x, "odd_gauss_map")
    _check_unit_interval(x, "odd_gauss_map")
    if x == 0:
        return Fraction(0)
    inv = 1 / x
    m = inv.numerator // inv.denominator
    frac = inv - m
    return frac if m % 2 == 1 else 1 - frac


def first_digit(x: Rational) -> Digit:
    """Extract the first digit (a_1, eps_1) of x in (0, 1].

    a_1 = floor(1/x) on the odd-floor branches (eps = +1) and
    1 + floor(1/x) on the even-floor branches (eps = -1).
    """
    x = _as_fraction(x, "first_digit")
    _check_unit_interval(x, "first_digit")
    if x == 0:
        raise DomainError("first_digit: no digit for x = 0 (orbit terminated)")
    inv = 1 / x
    m = inv.numerator // inv.denominator
    if m % 2 == 1:
        return Digit(m, 1)
    return Digit(m + 1, -1)


def expand(x: Rational, max_digits: int = 10_000) -> Expansion:
    """Expand an exact rational in [0, 1] into its odd digit string.

    Iterates first_digit and the map; stops when the orbit reaches 0
    exactly (``terminated=True``) or after ``max_digits`` digits.  For a
    rational p/q the orbit denominator strictly decreases, so
    termination always occurs within den(x) steps.
    """
    if max_digits < 1:
        raise DomainError("expand: max_digits must be positive")
    x = _as_fraction(x, "expand")
    _check_unit_interval(x, "expand")
    digits: list[Digit] = []
    t = x
    while t != 0 and len(digits) < max_digits:
        d = first_digit(t)
        digits.append(d)
        t = odd_gauss_map(t)
    return Expansion(tuple(digits), terminated=(t == 0))


def evaluate(digits: Sequence[Digit]) -> Fraction:
    """Value of a finite digit string, computed bottom-up exactly.

    The last digit's sign multiplies the (zero) tail and is unused.
    Equals p_N/q_N from ``convergents`` at the final index.
    """
    if not digits:
        raise DomainError("evaluate: empty digit sequence has no value")
    for k, d in enumerate(digits):
        if not isinstance(d, Digit):
            raise InadmissibleDigitError(f"evaluate: element {k} is not a Digit")
    v = Fraction(digits[-1].a)
    for k in range(len(digits) - 2, -1, -1):
        if v == 0:
            raise InadmissibleDigitError(
                f"evaluate: zero denominator below index {k}: inadmissible truncation"
            )
        v = digits[k].a + Fraction(digits[k].eps) / v
    if v == 0:
        raise InadmissibleDigitError("evaluate: zero denominator at index 0")
    return 1 / v


def convergents(digits: Sequence[Digit]) -> list[ConvergentRow]:
    """Rows n = -1 .. N of p_n = a_n p_{n-1} + eps_{n-1} p_{n-2} and the
    matching q recurrence, seeded p_{-1}=1, p_0=0, q_{-1}=0, q_0=1 and
    eps_0 = +1.  Each row's delta is the exact bilinear form
    p_{n-1} q_n - p_n q_{n-1}, which equals (-1)^n eps_0 ... eps_{n-1}.
    """
    rows = [ConvergentRow(-1, 1, 0, -1), ConvergentRow(0, 0, 1, 1)]
    p_prev, p_cur = 1, 0
    q_prev, q_cur = 0, 1
    eps_prev = 1  # eps_0
    for n, d in enumerate(digits, start=1):
        p_next = d.a * p_cur + eps_prev * p_prev
        q_next = d.a * q_cur + eps_prev * q_prev
        rows.append(ConvergentRow(n, p_next, q_next, p_cur * q_next - p_next * q_cur))
        p_prev, p_cur = p_cur, p_next
        q_prev, q_cur = q_cur, q_next
        eps_prev = d.eps
    return rows


def s_sequence(digits: Sequence[Digit]) -> list[Fraction]:
    """Past-ratio chain s_0 = 0, s_1 = 1/a_1, s_n = 1/(a_n + eps_{n-1} s_{n-1}).

    Each s_n equals q_{n-1}/q_n exactly.
    """
    out = [Fraction(0)]
    eps_prev = 1
    for d in digits:
        out.append(1 / (d.a + eps_prev * out[-1]))
        eps_prev = d.eps
    return out


def r_tail(x: Rational, n: int, max_digits: int = 10_000) -> Fraction:
    """Tail value r_n = a_n + eps_n * T^n(x) for n >= 1.

    Satisfies r_n = a_n + eps_n/r_{n+1} and T^n(x) = 1/r_{n+1}; in
    particular r_1 = 1/x.  Raises if the expansion of x terminates
    before digit n.
    """
    if n < 1:
        raise DomainError("r_tail: index must be >= 1")
    x = _as_fraction(x, "r_tail")
    _check_unit_interval(x, "r_tail")
    t = x
    digit = None
    for _ in range(n):
        if t == 0:
            raise DomainError(f"r_tail: orbit terminated before digit {n}")
        digit = first_digit(t)
        t = odd_gauss_map(t)
        if _ + 1 > max_digits:
            raise DomainError("r_tail: max_digits exceeded")
    assert digit is not None
    return digit.a + digit.eps * t


def reconstruct(prev: ConvergentRow, row: ConvergentRow, t: Rational, eps_n: int) -> Fraction:
    """Recover x = (p_n + p_{n-1} eps_n t)/(q_n + q_{n-1} eps_n t) with t = T^n(x)."""
    if eps_n not in (-1, 1):
        raise DomainError("reconstruct: eps_n must be -1 or +1")
    t = _as_fraction(t, "reconstruct")
    _check_unit_interval(t, "reconstruct")
    den = row.q + prev.q * eps_n * t
    if den == 0:
        raise DomainError("reconstruct: zero denominator (inadmissible row/tail data)")
    return Fraction(row.p + prev.p * eps_n * t, 1) / den


def tail_ratio(prev: ConvergentRow, row: ConvergentRow, x: Rational) -> Fraction:
    """Signed tail eps_n t_n = (q_n x - p_n)/(-q_{n-1} x + p_{n-1}), inverse of reconstruct."""
    x = _as_fraction(x, "tail_ratio")
    den = -prev.q * x + prev.p
    if den == 0:
        raise DomainError("tail_ratio: zero denominator")
    return (row.q * x - row.p) / den


# -- Exact golden-ratio comparisons -----------------------------------------
#
# G is the positive root of t^2 - t - 1 (negative exactly on (-g, G)),
# g the positive root of t^2 + t - 1 (negative exactly on (-G, g)), and
# g^2 = 1 - g.  A rational never equals any of these, so each comparison
# reduces to one integer sign.


def compare_with_G(u: Rational) -> int:
    """Sign of u - G for exact rational u (never 0)."""
    u = _as_fraction(u, "compare_with_G")
    if u <= 0:
        return -1
    sign = u * u - u - 1
    assert sign != 0
    return 1 if sign > 0 else -1


def compare_with_g(u: Rational) -> int:
    """Sign of u - g for exact rational u (never 0)."""
    u = _as_fraction(u, "compare_with_g")
    if u <= 0:
        return -1
    sign = u * u + u - 1
    assert sign != 0
    return 1 if sign > 0 else -1


def compare_with_g_squared(u: Rational) -> int:
    """Sign of u - g^2 for exact rational u (never 0); uses g^2 = 1 - g."""
    u = _as_fraction(u, "compare_with_g_squared")
    return -compare_with_g(1 - u)
