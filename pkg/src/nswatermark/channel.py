"""Insertion/deletion/substitution channel: sampler and emission probabilities.

Symbols are integers 0..3 (the quaternary alphabet); the nucleotide mapping is
applied outside this module.  Symbol 4 marks an unknown base (``N``) in reads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import kernels

N_SYMBOL = 4

# emission table columns
MISMATCH, MATCH, UNKNOWN = 0, 1, 2


@dataclass(frozen=True)
class IdsParams:
    """Channel probabilities.

    ``p_t`` is derived as ``1 - p_i - p_d``: per incoming base the channel
    picks insert / delete / transmit with probabilities ``p_i, p_d, p_t`` and
    after ``max_ins`` insertions only delete / transmit remain, with
    ``p_d, 1 - p_d``.
    """

    p_i: float
    p_d: float
    p_s: float
    max_ins: int = 2

    def __post_init__(self):
        for name in ("p_i", "p_d", "p_s"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name}={v} outside [0, 1)")
        if self.p_i + self.p_d >= 1.0:
            raise ValueError("p_i + p_d must be < 1")
        if self.max_ins < 0:
            raise ValueError("max_ins must be >= 0")

    @property
    def p_t(self) -> float:
        return 1.0 - self.p_i - self.p_d

    @classmethod
    def smrt(cls, max_ins: int = 2) -> "IdsParams":
        return cls(0.055, 0.055, 0.01, max_ins)

    @classmethod
    def from_pmut(cls, p_mut: float, max_ins: int = 2) -> "IdsParams":
        """Equal insertion, deletion and substitution rates summing to ``p_mut``."""
        p = p_mut / 3.0
        return cls(p, p, p, max_ins)

    @property
    def noiseless(self) -> bool:
        return self.p_i == 0.0 and self.p_d == 0.0 and self.p_s == 0.0


def emission_prob(rho, t: int, params: IdsParams) -> float:
    """Probability of receiving the string ``rho`` when symbol ``t`` is sent."""
    mu = len(rho)
    I = params.max_ins
    pi4 = params.p_i / 4.0
    pd, pt, ps = params.p_d, params.p_t, params.p_s
    if mu == 0:
        return pd
    if mu > I + 1:
        return 0.0
    match = rho[-1] == t
    if mu < I + 1:
        last = pt * (1.0 - ps) if match else pt * ps / 3.0
        return pi4**mu * pd + pi4 ** (mu - 1) * last
    last = (1.0 - pd) * (1.0 - ps) if match else (1.0 - pd) * ps / 3.0
    return pi4**I * last


def emission_table(params: IdsParams) -> np.ndarray:
    """``E[mu, kind]`` for mu = 0..I+1 and kind in (mismatch, match, unknown).

    The emission depends on the received string only through its length and
    whether its last symbol equals the sent one.  An unknown final symbol gets
    the average over the four possible bases.
    """
    I = params.max_ins
    E = np.zeros((I + 2, 3))
    for mu in range(I + 2):
        if mu == 0:
            E[0, :] = params.p_d
            continue
        hit = emission_prob([0] * mu, 0, params)
        miss = emission_prob([0] * (mu - 1) + [1], 0, params)
        E[mu, MATCH] = hit
        E[mu, MISMATCH] = miss
        E[mu, UNKNOWN] = (hit + 3.0 * miss) / 4.0
    return E


def all_receivable(params: IdsParams):
    """Every string the channel can emit for one incoming symbol."""
    yield ()
    for mu in range(1, params.max_ins + 2):
        yield from itertools.product(range(4), repeat=mu)


def uniforms_per_base(max_ins: int) -> int:
    return 2 * (max_ins + 1)


def transmit(seq, params: IdsParams, rng: np.random.Generator) -> np.ndarray:
    """Pass a symbol sequence through the channel."""
    seq = np.asarray(seq, dtype=np.int8)
    u = rng.random((seq.size, uniforms_per_base(params.max_ins)))
    return kernels.transmit(seq, u, params.p_i, params.p_d, params.p_s, params.max_ins)
