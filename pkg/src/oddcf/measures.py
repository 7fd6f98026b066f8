"""Closed-form invariant and limiting distributions of the odd Gauss map.

rho is the T-invariant probability measure on [0, 1] with density
proportional to 1/(x+G-1) - 1/(x-G-1); xi is the stationary law of the
past-ratio chain on [0, G], with a formula change at g^2; limit_H is the
Gauss-Kuzmin limit CDF (identical to rho's CDF); limit_F(x, e) is the
joint limit law of the scaled tail and the sign.

The invariance checker sums rho over explicit branch preimages of the
map with a closed-form series tail (digamma / Hurwitz zeta), so its
truncation error is far below the residual being measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate
from scipy.special import psi, zeta

from .constants import G, INV_NORM, g, g_squared
from .grid import Interval


class MeasureDomainError(ValueError):
    """Argument outside the distribution's domain."""


def _check01(x: float, where: str) -> None:
    if not 0.0 <= x <= 1.0:
        raise MeasureDomainError(f"{where}: {x} outside [0, 1]")


def rho_cdf(x: float) -> float:
    """CDF of the invariant measure: (1/(3 log G)) log((G+1)(x+g)/(g(G+1-x)))."""
    _check01(x, "rho_cdf")
    return INV_NORM * math.log((G + 1.0) * (x + G - 1.0) / ((G - 1.0) * (G + 1.0 - x)))


def rho_density(x: float) -> float:
    """Invariant density (1/(3 log G)) (1/(x+G-1) - 1/(x-G-1)), strictly positive."""
    _check01(x, "rho_density")
    return INV_NORM * (1.0 / (x + G - 1.0) - 1.0 / (x - G - 1.0))


def limit_H(x: float) -> float:
    """The Gauss-Kuzmin limit CDF; algebraically identical to rho_cdf."""
    _check01(x, "limit_H")
    return INV_NORM * math.log((G + 1.0) * (G - 1.0 + x) / ((G - 1.0) * (G + 1.0 - x)))


def xi_cdf(w: float) -> float:
    """Stationary CDF of the past-ratio chain on [0, G].

    (1/(3 log G)) log((1+w)/(1-w)) below g^2 and
    (1/(3 log G)) log((1+w)/(1-g^2)) from g^2 up; continuous at the split.
    """
    if not 0.0 <= w <= G:
        raise MeasureDomainError(f"xi_cdf: {w} outside [0, G]")
    if w < g_squared:
        return INV_NORM * math.log((1.0 + w) / (1.0 - w))
    return INV_NORM * math.log((1.0 + w) / (1.0 - g_squared))


def xi_density(w: float) -> float:
    """Density of xi: 2/(1-w^2) below g^2 and 1/(1+w) above, times 1/(3 log G)."""
    if not 0.0 <= w <= G:
        raise MeasureDomainError(f"xi_density: {w} outside [0, G]")
    if w < g_squared:
        return INV_NORM * 2.0 / (1.0 - w * w)
    return INV_NORM / (1.0 + w)


def f0_conditional(x: float, e: int, s_k: float) -> float:
    """One-step tail law given the current past ratio s_k.

    Three branches split by the state side (s_k below or above g^2) and
    the sign e; the minus sign carries no mass from the upper side.
    """
    _check01(x, "f0_conditional")
    if e not in (-1, 1):
        raise MeasureDomainError("f0_conditional: e must be -1 or +1")
    if not 0.0 <= s_k <= G:
        raise MeasureDomainError(f"f0_conditional: s_k={s_k} outside [0, G]")
    if s_k < g_squared:
        return (1.0 - s_k * s_k) * x / (2.0 * (1.0 + e * s_k * x))
    if e == -1:
        return 0.0
    return (1.0 + s_k) * x / (1.0 + s_k * x)


def limit_F(x: float, e: int, quad_tol: float = 1e-12) -> float:
    """Joint limit law F(x, e) by quadrature of the tail kernels against xi.

    Integrates (1-y^2)x/(2(1+e y x)) over [0, g^2) and, for e = +1 only,
    (1+y)x/(1+y x) over [g^2, G], both against the xi density.  Raises
    if the quadrature error estimate exceeds quad_tol.
    """
    _check01(x, "limit_F")
    if e not in (-1, 1):
        raise MeasureDomainError("limit_F: e must be -1 or +1")
    if x == 0.0:
        return 0.0

    def lower(y: float) -> float:
        return (1.0 - y * y) * x / (2.0 * (1.0 + e * y * x)) * xi_density(y)

    val, err = integrate.quad(lower, 0.0, g_squared, epsabs=quad_tol / 4, epsrel=1e-13, limit=200)
    total, total_err = val, err
    if e == 1:
        def upper(y: float) -> float:
            return (1.0 + y) * x / (1.0 + y * x) * xi_density(y)

        val, err = integrate.quad(upper, g_squared, G, epsabs=quad_tol / 4, epsrel=1e-13, limit=200)
        total += val
        total_err += err
    if total_err > quad_tol:
        raise ArithmeticError(
            f"limit_F: quadrature error estimate {total_err:.3e} exceeds {quad_tol:.3e}"
        )
    return total


@dataclass(frozen=True)
class InvarianceResult:
    """Outcome of one invariance check: the residual and its series bookkeeping."""

    interval: Interval
    pullback_mass: float
    direct_mass: float
    residual: float
    branches_used: int
    tail_estimate: float


def _branch_series_coeffs() -> tuple[float, float, float]:
    # Taylor coefficients of rho_cdf at 0: R(u) = c1 u + c2 u^2 + c3 u^3 + O(u^4).
    c1 = INV_NORM * (1.0 / g + 1.0 / (G + 1.0))
    c2 = 0.5 * INV_NORM * (1.0 / (G + 1.0) ** 2 - 1.0 / g**2)
    c3 = INV_NORM / 3.0 * (1.0 / g**3 + 1.0 / (G + 1.0) ** 3)
    return c1, c2, c3


def _odd_power_sum_diff(m: int, start: int, a: float, b: float) -> float:
    # sum over odd i >= start of (i+a)^-m - (i+b)^-m, in closed form.
    qa, qb = (start + a) / 2.0, (start + b) / 2.0
    if m == 1:
        return 0.5 * (psi(qb) - psi(qa))
    return 2.0**-m * (zeta(m, qa) - zeta(m, qb))


def t_invariance_check(
    interval: Interval, tol: float = 1e-9, i_max: int = 20_001, tail_tol: float = 1e-13
) -> InvarianceResult:
    """Residual |rho(T^{-1} A) - rho(A)| for an interval A in [0, 1].

    The preimage splits over the map's branches: on the plus-sign branch
    with quotient i the preimage of [lo, hi] is [1/(i+hi), 1/(i+lo)];
    on the minus-sign branch (odd i >= 3) it is [1/(i-lo), 1/(i-hi)].
    Branches beyond i_max are summed in closed form through the cubic
    Taylor term of rho_cdf at 0; the quartic remainder is the reported
    tail estimate and must come in below tail_tol.
    """
    lo, hi = interval.lo, interval.hi
    if not (0.0 <= lo <= hi <= 1.0):
        raise MeasureDomainError(f"t_invariance_check: [{lo}, {hi}] not inside [0, 1]")

    direct = rho_cdf(hi) - rho_cdf(lo)

    total = 0.0
    count = 0
    for i in range(1, i_max + 1, 2):
        total += rho_cdf(1.0 / (i + lo)) - rho_cdf(1.0 / (i + hi))
        if i >= 3:
            total += rho_cdf(1.0 / (i - hi)) - rho_cdf(1.0 / (i - lo))
        count += 1

    start = i_max + 2 if i_max % 2 == 1 else i_max + 1
    c1, c2, c3 = _branch_series_coeffs()
    tail = 0.0
    for m, c in ((1, c1), (2, c2), (3, c3)):
        # plus family: (i+lo)^-m - (i+hi)^-m; minus family: (i-hi)^-m - (i-lo)^-m
        tail += c * _odd_power_sum_diff(m, start, lo, hi)
        tail += c * _odd_power_sum_diff(m, start, -hi, -lo)
    total += tail

    # quartic remainder bound: |R''''|/24 <= 2 on (0, 1/start]; both families.
    width = hi - lo
    quartic = 4.0 * width * 2.0 / max(start - 1, 1) ** 4
    if quartic > tail_tol:
        needed = int(math.ceil((4.0 * width * 2.0 / tail_tol) ** 0.25)) + 2
        raise ArithmeticError(
            f"t_invariance_check: tail bound {quartic:.3e} above {tail_tol:.3e}; "
            f"need i_max >= {needed}"
        )
    return InvarianceResult(
        interval=interval,
        pullback_mass=total,
        direct_mass=direct,
        residual=abs(total - direct),
        branches_used=count,
        tail_estimate=quartic,
    )


def invariance_suite(tol: float = 1e-9, i_max: int = 20_001) -> list[InvarianceResult]:
    """The fixed 20-interval invariance suite used by tests and the CLI."""
    intervals = [Interval(0.0, k / 10.0) for k in range(1, 11)]
    intervals += [Interval(k / 20.0, (k + 7) / 20.0) for k in range(1, 11)]
    return [t_invariance_check(iv, tol=tol, i_max=i_max) for iv in intervals]
