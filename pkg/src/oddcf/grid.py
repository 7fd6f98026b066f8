"""Sampled functions on an interval, the carrier type for CDF and density iterates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .constants import G, g_squared


@dataclass(frozen=True)
class Interval:
    """A subinterval [lo, hi] (openness only matters for measure-zero bookkeeping)."""

    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self) -> None:
        if not self.lo <= self.hi:
            raise ValueError(f"interval bounds out of order: [{self.lo}, {self.hi}]")


class GridFunction:
    """A function known at strictly increasing nodes, with an interpolation rule.

    ``interp`` is "linear" or "pchip" (monotone cubic).  Node values are
    reproduced exactly; between nodes the interpolant is piecewise
    monotone, so total variation is the sum of node-value differences.
    Instances are immutable by convention: no method mutates nodes or
    values.
    """

    __slots__ = ("nodes", "values", "interp", "_pchip")

    def __init__(self, nodes, values, interp: str = "linear"):
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("need at least two 1-D nodes")
        if nodes.shape != values.shape:
            raise ValueError("nodes and values must have matching shape")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if interp not in ("linear", "pchip"):
            raise ValueError(f"unknown interpolation rule {interp!r}")
        self.nodes = nodes
        self.values = values
        self.interp = interp
        self._pchip = None

    @classmethod
    def from_callable(cls, f, nodes, interp: str = "linear") -> "GridFunction":
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, np.asarray([f(t) for t in nodes], dtype=float), interp)

    @property
    def lo(self) -> float:
        return float(self.nodes[0])

    @property
    def hi(self) -> float:
        return float(self.nodes[-1])

    def __call__(self, x):
        """Evaluate at scalar or array x; clamps to the domain endpoints."""
        if self.interp == "linear":
            return np.interp(x, self.nodes, self.values)
        if self._pchip is None:
            self._pchip = PchipInterpolator(self.nodes, self.values, extrapolate=False)
        x = np.clip(x, self.nodes[0], self.nodes[-1])
        return self._pchip(x)

    def with_values(self, values) -> "GridFunction":
        """Same nodes and rule, new values."""
        return GridFunction(self.nodes, values, self.interp)


def refine_with(base: np.ndarray, extra) -> np.ndarray:
    """Sorted union of base nodes and extra points, clipped to the base span."""
    extra = np.asarray(extra, dtype=float)
    extra = extra[(extra >= base[0]) & (extra <= base[-1])]
    return np.unique(np.concatenate([base, extra]))


def unit_grid(n: int = 4097) -> np.ndarray:
    """Uniform n-node grid on [0, 1]."""
    if n < 2:
        raise ValueError("grid needs at least 2 nodes")
    return np.linspace(0.0, 1.0, n)


def state_grid(n: int = 4097, extra=()) -> np.ndarray:
    """n+ node grid on [0, G] with the breakpoint g^2 (and any extras) inserted.

    The kernel and the stationary law change formula at g^2, so it is
    always an exact node.
    """
    base = np.linspace(0.0, G, n)
    return refine_with(base, np.concatenate([[g_squared], np.asarray(extra, dtype=float)]))
