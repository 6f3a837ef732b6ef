"""SplitMix64 and the polar Gaussian transform used by the detection noise model.

The generator is functional: every draw takes a 64-bit state and returns the
new state alongside the value, so noise streams are bit-reproducible from the
scenario seed alone.  Reference SplitMix64 step:

    state' = (state + 0x9E3779B97F4A7C15) mod 2^64
    z = state'
    z = ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z = ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output = z XOR (z >> 31)

Unit doubles are ``output >> 11`` times 2**-53, uniform in [0, 1).  Gaussians
use the Marsaglia polar method: draw unit pairs (u1, u2), map to
v = 2u - 1, accept when 0 < s = v1^2 + v2^2 < 1, then
g1 = v1 * sqrt(-2 ln(s) / s) and g2 = v2 * sqrt(-2 ln(s) / s).  Callers that
need a single Gaussian discard g2 rather than caching it, so the consumed
stream depends only on the documented draw order.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


def splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step: (new_state, 64-bit output)."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return state, z ^ (z >> 31)


def next_unit(state: int) -> tuple[int, float]:
    """Uniform double in [0, 1) from the top 53 bits of one SplitMix64 output."""
    state, bits = splitmix64(state)
    return state, (bits >> 11) * _INV_2_53


def next_gaussian_pair(state: int) -> tuple[int, float, float]:
    """Two standard Gaussians via the polar method (variable uniform consumption)."""
    while True:
        state, u1 = next_unit(state)
        state, u2 = next_unit(state)
        v1 = 2.0 * u1 - 1.0
        v2 = 2.0 * u2 - 1.0
        s = v1 * v1 + v2 * v2
        if 0.0 < s < 1.0:
            factor = math.sqrt(-2.0 * math.log(s) / s)
            return state, v1 * factor, v2 * factor
