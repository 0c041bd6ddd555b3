"""Seeded pseudo-random stream for reproducible initial data.

64-bit linear congruential generator

    x_{k+1} = (a x_k + c) mod 2^64,  a = 6364136223846793005,
                                     c = 1442695040888963407 (Knuth MMIX)

uniforms take the top 53 bits: u = (x >> 11) * 2^-53.  Normals use the
Box-Muller transform on consecutive uniforms.  The recurrence and constants
are fixed so any implementation language reproduces the same stream.
"""

from __future__ import annotations

import numpy as np

LCG_A = 6364136223846793005
LCG_C = 1442695040888963407
MASK = (1 << 64) - 1


class LCG64:
    def __init__(self, seed: int):
        self.state = seed & MASK

    def next_raw(self) -> int:
        self.state = (LCG_A * self.state + LCG_C) & MASK
        return self.state

    def uniform(self) -> float:
        return (self.next_raw() >> 11) * 2.0 ** -53

    def normal(self) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        u1 = max(u1, 2.0 ** -53)
        return float(np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2))

    def normals(self, n: int) -> np.ndarray:
        return np.array([self.normal() for _ in range(n)])
