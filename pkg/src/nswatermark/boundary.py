"""Drift distributions at the barcode boundaries from the known flanking context.

The read layout is ``left flank | barcode | consensus | insert``.  Drift is
the number of received symbols minus the number of sent symbols consumed so
far, counted from the first base of the left flank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import IdsParams, emission_table

# 12 nt after the primer annealing site and the 30 nt consensus that follows
# the barcode.  Placeholders with balanced composition; override per experiment.
DEFAULT_LEFT_FLANK = "ACACATCAAGCC"
DEFAULT_CONSENSUS = "ACTGCGACCAACCTACCATCTGATAGAACT"

# extra drift states kept on each side when initialising past the consensus
CONSENSUS_MARGIN = 4

MODES = ("context", "uniform", "point")


class BoundaryLost(ValueError):
    """Raised when no drift in the window is compatible with the read."""


@dataclass(frozen=True)
class DriftDistribution:
    """Normalised weights over drifts ``xmin .. xmin + len(weights) - 1``.

    ``anchor`` is the position (in sent symbols) the drift refers to and
    ``log_scale`` the log of the mass removed by normalisation.
    """

    weights: np.ndarray
    xmin: int
    anchor: int
    log_scale: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0 or (w < 0).any() or not w.sum() > 0:
            raise BoundaryLost("drift distribution has no mass")
        object.__setattr__(self, "weights", w)

    @property
    def xmax(self) -> int:
        return self.xmin + self.weights.size - 1

    @property
    def drifts(self) -> np.ndarray:
        return np.arange(self.xmin, self.xmax + 1)

    @property
    def mode(self) -> int:
        return int(self.xmin + np.argmax(self.weights))

    def mean(self) -> float:
        return float(self.drifts @ self.weights / self.weights.sum())

    def __getitem__(self, x: int) -> float:
        j = x - self.xmin
        return float(self.weights[j]) if 0 <= j < self.weights.size else 0.0

    @classmethod
    def point(cls, x: int, xmin: int, xmax: int, anchor: int) -> "DriftDistribution":
        w = np.zeros(xmax - xmin + 1)
        if not xmin <= x <= xmax:
            raise BoundaryLost(f"drift {x} outside window [{xmin}, {xmax}]")
        w[x - xmin] = 1.0
        return cls(w, xmin, anchor)

    @classmethod
    def uniform(cls, xmin: int, xmax: int, anchor: int, read_len: int | None = None) -> "DriftDistribution":
        """Flat over the window, restricted to drifts that land inside the read."""
        x = np.arange(xmin, xmax + 1)
        w = np.ones(x.size)
        if read_len is not None:
            w[(anchor + x < 0) | (anchor + x > read_len)] = 0.0
        if not w.any():
            raise BoundaryLost("no drift in the window lands inside the read")
        return cls(w / w.sum(), xmin, anchor, float(np.log(w.sum())))


def _emit(E, r, end, mu, t):
    if mu == 0:
        return E[0, 0]
    c = r[end - 1]
    if c == 4:
        return E[mu, 2]
    return E[mu, 1] if c == t else E[mu, 0]


def forward_step(f, lo, r, pos, t, E, I, nr=None):
    """Push drift weights ``f`` (over ``lo..``) through sent symbol ``t`` at ``pos``.

    The output covers the same drift range; mass leaving the range is dropped.
    """
    nr = len(r) if nr is None else nr
    out = np.zeros_like(f)
    for ix in range(f.size):
        x = lo + ix
        end = pos + 1 + x
        if end < 0 or end > nr:
            continue
        acc = 0.0
        for xm in range(max(x - I, lo), min(x + 1, lo + f.size - 1) + 1):
            fv = f[xm - lo]
            if fv == 0.0 or pos + xm < 0:
                continue
            acc += fv * _emit(E, r, end, x - xm + 1, t)
        out[ix] = acc
    return out


def backward_step(g, lo, r, pos, t, E, I, nr=None):
    """Pull drift weights ``g`` after sent symbol ``t`` at ``pos`` back to before it."""
    nr = len(r) if nr is None else nr
    out = np.zeros_like(g)
    for ix in range(g.size):
        x = lo + ix
        start = pos + x
        if start < 0 or start > nr:
            continue
        acc = 0.0
        for xp in range(max(x - 1, lo), min(x + I, lo + g.size - 1) + 1):
            gv = g[xp - lo]
            end = pos + 1 + xp
            if gv == 0.0 or end > nr:
                continue
            acc += gv * _emit(E, r, end, xp - x + 1, t)
        out[ix] = acc
    return out


def estimate_left(r, flank, params: IdsParams, xmin: int, xmax: int, nr=None) -> DriftDistribution:
    """Forward pass over the left flank starting from drift 0 at its first base.

    ``r`` and ``flank`` are symbol arrays (0..3, 4 = unknown in ``r``).
    The result is anchored at the first barcode position.
    """
    r = np.asarray(r)
    flank = np.asarray(flank)
    E = emission_table(params)
    f = np.zeros(xmax - xmin + 1)
    f[-xmin] = 1.0
    for j, t in enumerate(flank):
        f = forward_step(f, xmin, r, j, int(t), E, params.max_ins, nr)
    tot = f.sum()
    if not tot > 0:
        raise BoundaryLost("no drift after the left flank is compatible with the read")
    return DriftDistribution(f / tot, xmin, len(flank), float(np.log(tot)))


def estimate_right(r, consensus, barcode_end: int, params: IdsParams, xmin: int, xmax: int,
                   nr=None, margin: int = CONSENSUS_MARGIN,
                   end_span: tuple[int, int] | None = None) -> DriftDistribution:
    """Backward pass over the consensus from a flat start past its last base.

    ``barcode_end`` is the sent position right after the barcode (flank + l).
    The flat start covers drifts ``end_span`` (default: the window widened by
    ``margin`` on both sides); the result is clipped back to ``xmin..xmax``.
    """
    r = np.asarray(r)
    consensus = np.asarray(consensus)
    nr = len(r) if nr is None else nr
    E = emission_table(params)
    elo, ehi = end_span if end_span is not None else (xmin - margin, xmax + margin)
    lo, hi = min(xmin, elo), max(xmax, ehi)
    end = barcode_end + len(consensus)
    g = DriftDistribution.uniform(lo, hi, end, nr).weights.copy()
    g[:elo - lo] = 0.0
    g[ehi - lo + 1:] = 0.0
    for j in range(len(consensus) - 1, -1, -1):
        g = backward_step(g, lo, r, barcode_end + j, int(consensus[j]), E, params.max_ins, nr)
    g = g[xmin - lo: xmin - lo + xmax - xmin + 1]
    tot = g.sum()
    if not tot > 0:
        raise BoundaryLost("no drift before the consensus is compatible with the read")
    return DriftDistribution(g / tot, xmin, barcode_end, float(np.log(tot)))
