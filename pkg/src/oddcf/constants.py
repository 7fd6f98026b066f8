"""Golden-ratio constants and the contraction bounds used across the package.

Everything is derived from sqrt(5) at full double precision; no decimal
literals for G, g, or log G appear anywhere else.  The contraction
constants THETA1/THETA2/THETA (bounded-variation contraction of the
transition operator) and the reference values for the derivative-ratio
constant eta are fixed targets that the test harnesses falsify against,
not quantities this package derives.
"""

from __future__ import annotations

import math

#: Golden ratio G = (sqrt(5) + 1) / 2, the positive root of t^2 - t - 1.
G = (math.sqrt(5.0) + 1.0) / 2.0

#: Golden ratio conjugate g = G - 1 = 1/G, the positive root of t^2 + t - 1.
g = G - 1.0

#: g^2 = 1 - g, the breakpoint splitting the state space [0, G].
g_squared = 1.0 - g

#: log G, so that 3*log G normalizes the invariant density.
LOG_G = math.log(G)

#: 1 / (3 log G), the normalization constant of the invariant measure.
INV_NORM = 1.0 / (3.0 * LOG_G)

#: Variation-contraction coefficient of the transition operator.
THETA1 = 0.4270508

#: Supremum coefficient of the transition operator variation bound.
THETA2 = 0.396312

#: One-step contraction constant THETA1 + THETA2 for the operator iterates.
THETA = 0.8233628

#: Reference value of the derivative-ratio contraction constant
#: eta = 4 g * sum over odd i of 1/((G+i) i (i+2)).
ETA_REFERENCE = 0.372929

#: Reference value of the inner series sum over odd i of 1/((G+i) i (i+2)).
ETA_INNER_SUM_REFERENCE = 0.150853


def constants_dict() -> dict[str, float]:
    """All named constants, for the CLI ``constants`` subcommand."""
    return {
        "G": G,
        "g": g,
        "g_squared": g_squared,
        "log_G": LOG_G,
        "inv_norm": INV_NORM,
        "theta1": THETA1,
        "theta2": THETA2,
        "theta": THETA,
        "eta_reference": ETA_REFERENCE,
        "eta_inner_sum_reference": ETA_INNER_SUM_REFERENCE,
    }
