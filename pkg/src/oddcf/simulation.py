"""Monte Carlo verification of the limit laws via exact dyadic orbits.

Starting points are drawn as k/2^64 with k a 64-bit hash of (seed,
index), so every orbit is an exact rational and the whole pipeline is
deterministic and schedule-independent: workers only split the index
range, and per-sample values depend on (seed, index) alone.  Orbit
arithmetic runs on reduced integer pairs (the map preserves lowest
terms, so no gcd is ever needed after the initial reduction); floats
appear only when values enter an empirical CDF.

A dyadic orbit terminates once its denominator (which strictly
decreases) reaches 1; samples that have terminated by step n are
dropped from the row-n statistics and counted instead.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from multiprocessing import Pool

import numpy as np

from .constants import G, INV_NORM, g_squared
from .core import Digit

TWO64 = 1 << 64


# -- vectorized reference CDFs (scalar twins live in measures) ----------------


def limit_H_arr(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return INV_NORM * np.log((G + 1.0) * (G - 1.0 + x) / ((G - 1.0) * (G + 1.0 - x)))


def xi_cdf_arr(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return INV_NORM * np.where(
        w < g_squared,
        np.log((1.0 + w) / np.where(w < g_squared, 1.0 - w, 1.0)),
        np.log((1.0 + w) / (1.0 - g_squared)),
    )


# -- exact orbit kernels -------------------------------------------------------


def _derive_numerator(seed: int, index: int) -> int:
    """The 64-bit starting numerator for sample ``index`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def _orbit_step(p: int, q: int) -> tuple[int, int, int, int]:
    """One map step on x = p/q in lowest terms; returns (a, eps, p', q').

    The new pair is again in lowest terms: both branches produce a
    numerator congruent to +-q modulo p, so the gcd carries over.
    """
    m = q // p
    if m & 1:
        return m, 1, q - m * p, p
    return m + 1, -1, (m + 1) * p - q, p


@dataclass(frozen=True)
class OrbitSample:
    """One exact trajectory: rows (T^n x, digit_n, s_n) for n = 1..len."""

    seed: int
    index: int
    x0: Fraction
    trajectory: tuple[tuple[Fraction, Digit, Fraction], ...]
    terminated: bool


def sample_orbits(seed: int, samples: int, steps: int) -> list[OrbitSample]:
    """Exact orbits as Fractions, for inspection and invariant testing.

    Use simulate_statistics for large sample counts; this keeps whole
    trajectories alive.
    """
    out = []
    for index in range(samples):
        k = _derive_numerator(seed, index)
        x0 = Fraction(k, TWO64)
        rows = []
        p, q = x0.numerator, x0.denominator
        q_prev, q_cur = 0, 1
        eps_prev = 1
        for _ in range(steps):
            if p == 0:
                break
            a, eps, p, q = _orbit_step(p, q)
            q_prev, q_cur = q_cur, a * q_cur + eps_prev * q_prev
            eps_prev = eps
            rows.append((Fraction(p, q) if p else Fraction(0), Digit(a, eps), Fraction(q_prev, q_cur)))
        out.append(OrbitSample(seed, index, x0, tuple(rows), terminated=(p == 0)))
    return out


def _simulate_chunk(args) -> tuple[int, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    seed, start, stop, steps, report_ns = args
    count = stop - start
    ns = sorted(report_ns)
    t_vals = np.full((len(ns), count), np.nan)
    s_vals = np.full((len(ns), count), np.nan)
    x0s = np.empty(count)
    term_step = np.full(count, steps + 1, dtype=np.int64)
    col = {n: j for j, n in enumerate(ns)}
    for offset in range(count):
        k = _derive_numerator(seed, start + offset)
        x0s[offset] = k / TWO64
        p, q = (0, 1) if k == 0 else (k >> _tz(k), TWO64 >> _tz(k))
        if 0 in col and p != 0:
            t_vals[col[0], offset] = p / q
            s_vals[col[0], offset] = 0.0
        if p == 0:
            term_step[offset] = 0
            continue
        q_prev, q_cur = 0, 1
        eps_prev = 1
        for n in range(1, steps + 1):
            a, eps, p, q = _orbit_step(p, q)
            q_prev, q_cur = q_cur, a * q_cur + eps_prev * q_prev
            eps_prev = eps
            if p == 0:
                term_step[offset] = n
                break
            if n in col:
                t_vals[col[n], offset] = p / q
                s_vals[col[n], offset] = q_prev / q_cur
    return start, t_vals, s_vals, x0s, term_step


def _tz(k: int) -> int:
    return (k & -k).bit_length() - 1


@dataclass(frozen=True)
class SimulationResult:
    """Per-n float samples of T^n x and s_n, plus termination bookkeeping."""

    seed: int
    samples: int
    steps: int
    report_ns: tuple[int, ...]
    x0: np.ndarray
    t_values: dict[int, np.ndarray]
    s_values: dict[int, np.ndarray]
    termination_step: np.ndarray

    def surviving_t(self, n: int) -> np.ndarray:
        vals = self.t_values[n]
        return vals[~np.isnan(vals)]

    def surviving_s(self, n: int) -> np.ndarray:
        vals = self.s_values[n]
        return vals[~np.isnan(vals)]

    def terminated_count(self, n: int) -> int:
        return int((self.termination_step <= n).sum())


def simulate_statistics(
    seed: int,
    samples: int,
    steps: int = 30,
    report_ns: tuple[int, ...] = (0, 1, 5, 10, 12),
    threads: int | None = None,
    chunk: int = 50_000,
) -> SimulationResult:
    """Run ``samples`` exact orbits and collect float samples at the rows in report_ns.

    Deterministic for a fixed seed regardless of ``threads``; the merge
    is by index range, so results are bit-identical across schedules.
    """
    report_ns = tuple(sorted(set(report_ns)))
    if any(n < 0 or n > steps for n in report_ns):
        raise ValueError("simulate_statistics: report_ns must lie in [0, steps]")
    if threads is None:
        threads = _default_threads()
    bounds = list(range(0, samples, chunk)) + [samples]
    jobs = [
        (seed, lo, hi, steps, report_ns)
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    if threads > 1 and len(jobs) > 1:
        with Pool(processes=min(threads, len(jobs))) as pool:
            parts = pool.map(_simulate_chunk, jobs)
    else:
        parts = [_simulate_chunk(job) for job in jobs]
    parts.sort(key=lambda item: item[0])
    ns = sorted(report_ns)
    t_all = np.concatenate([part[1] for part in parts], axis=1)
    s_all = np.concatenate([part[2] for part in parts], axis=1)
    x0 = np.concatenate([part[3] for part in parts])
    term = np.concatenate([part[4] for part in parts])
    return SimulationResult(
        seed=seed,
        samples=samples,
        steps=steps,
        report_ns=tuple(ns),
        x0=x0,
        t_values={n: t_all[j] for j, n in enumerate(ns)},
        s_values={n: s_all[j] for j, n in enumerate(ns)},
        termination_step=term,
    )


def _default_threads() -> int:
    env = os.environ.get("OCF_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# -- empirical statistics ------------------------------------------------------


@dataclass(frozen=True)
class KsResult:
    """Supremum distance between an empirical CDF and a reference CDF."""

    statistic: float
    sample_count: int
    reference: str


def ks_statistic(values: np.ndarray, cdf) -> float:
    """One-sample Kolmogorov-Smirnov statistic against a vectorized CDF."""
    xs = np.sort(np.asarray(values, dtype=float))
    n = xs.size
    if n == 0:
        raise ValueError("ks_statistic: empty sample")
    ref = np.asarray(cdf(xs), dtype=float)
    upper = (np.arange(1, n + 1) / n - ref).max()
    lower = (ref - np.arange(0, n) / n).max()
    return float(max(upper, lower))


def empirical_Hn(result: SimulationResult, n: int) -> KsResult:
    """KS distance of the row-n orbit sample from the limit CDF."""
    if n not in result.t_values:
        raise ValueError(f"empirical_Hn: row {n} was not collected")
    vals = result.surviving_t(n)
    ref = limit_H_arr if n > 0 else (lambda x: np.asarray(x, dtype=float))
    return KsResult(ks_statistic(vals, ref), vals.size, "limit_H" if n > 0 else "uniform")


def empirical_s_law(result: SimulationResult, n: int) -> KsResult:
    """KS distance of the row-n past-ratio sample from the stationary law."""
    if n not in result.s_values:
        raise ValueError(f"empirical_s_law: row {n} was not collected")
    vals = result.surviving_s(n)
    return KsResult(ks_statistic(vals, xi_cdf_arr), vals.size, "xi_on_0G")


def r1_exceedance(result: SimulationResult, t: float) -> float:
    """Empirical fraction of samples with 1/x0 > t (limit value 1/t)."""
    if t < 1.0:
        raise ValueError("r1_exceedance: t must be >= 1")
    return float((result.x0 < 1.0 / t).mean())


def rate_fit(errors, ns=None) -> float:
    """Least-squares geometric rate of a positive error sequence.

    Fits log(err) against n and returns exp(slope).  Nonpositive
    entries are excluded; at least four usable points are required.
    """
    errors = np.asarray(errors, dtype=float)
    ns = np.arange(errors.size) if ns is None else np.asarray(ns, dtype=float)
    keep = errors > 0
    if keep.sum() < 4:
        raise ValueError("rate_fit: need at least 4 positive error values")
    slope = np.polyfit(ns[keep], np.log(errors[keep]), 1)[0]
    return float(math.exp(slope))
