"""Inner decoding: per-symbol likelihoods from a raw read.

Two hidden Markov models are stacked.  At the symbol level the hidden state
is the drift at the start of each outer symbol's block of ``u`` bases; the
transition weight for block ``s`` under hypothesis ``a`` is the probability of
the received block given the watermark-imprinted inner word, which is itself
a forward pass over ``u`` bases at the nucleotide level.

The compiled kernel does the work for real reads.  The functions below that
take a precomputed tensor ``T[s, a, x-, x+]`` are small numpy versions of the
same recursions, used for inspection and testing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .boundary import (CONSENSUS_MARGIN, DriftDistribution, forward_step)
from .channel import IdsParams, emission_table

STATUS_NAMES = {kernels.OK: "ok", kernels.BOUNDARY_LOST: "boundary_lost",
                kernels.ZERO_MASS: "zero_mass", kernels.TOO_MANY_N: "too_many_n"}
MODE_CODES = {"context": kernels.CONTEXT, "uniform": kernels.UNIFORM, "point": kernels.POINT}

MAX_N_FRACTION = 0.2


@dataclass(frozen=True)
class DriftWindow:
    """Outer drift space ``xmin..xmax`` and per-block local drift ``dmin..dmax``."""

    xmin: int
    xmax: int
    dmin: int
    dmax: int

    def __post_init__(self):
        if not self.xmin <= 0 <= self.xmax:
            raise ValueError("outer window must contain drift 0")
        if self.dmin > -1 or self.dmax < 0:
            raise ValueError("inner window must contain -1..0")

    @property
    def size(self) -> int:
        return self.xmax - self.xmin + 1

    @classmethod
    def default(cls, l: int, u: int, params: IdsParams, flank_len: int = 0) -> "DriftWindow":
        # seven standard deviations of the random walk up to the barcode end;
        # narrower windows still move L by more than 1e-6 on a few reads per thousand
        steps = (flank_len + l) * (params.p_i + params.p_d)
        x = max(6, math.ceil(7.0 * math.sqrt(steps)))
        return cls(-x, x, -u, u * params.max_ins)


def decode_window(flank_len: int, l: int, cons_len: int, window: DriftWindow) -> int:
    """Read prefix length the decoder looks at."""
    return flank_len + l + cons_len + window.xmax + CONSENSUS_MARGIN


def block_likelihood(r_s, t_s, params: IdsParams) -> float:
    """P(received block | sent block) with drift 0 at the block start.

    The whole of ``r_s`` must be produced by the ``len(t_s)`` sent symbols.
    """
    r_s = np.asarray(r_s)
    t_s = np.asarray(t_s)
    u = len(t_s)
    I = params.max_ins
    d = len(r_s) - u
    if not -u <= d <= u * I:
        return 0.0
    E = emission_table(params)
    lo = -u
    f = np.zeros(u * (I + 1) + 1)
    f[-lo] = 1.0
    for y, t in enumerate(t_s):
        f = forward_step(f, lo, r_s, y, int(t), E, I)
    return float(f[d - lo])


def block_tensor(r, blocks, params: IdsParams, window: DriftWindow, offset: int, nr=None) -> np.ndarray:
    """``T[s, a, x-, x+]`` from :func:`block_likelihood` on each received slice.

    ``offset`` is the sent position of the first barcode base.  Slow; meant
    for small instances.
    """
    r = np.asarray(r)
    nr = len(r) if nr is None else nr
    n, q, u = blocks.shape
    X = window.size
    T = np.zeros((n, q, X, X))
    for s in range(n):
        P = offset + s * u
        for ix in range(X):
            xm = window.xmin + ix
            for jx in range(X):
                xp = window.xmin + jx
                d = xp - xm
                a0, a1 = P + xm, P + u + xp
                if not window.dmin <= d <= window.dmax or a0 < 0 or a1 > nr or a1 < a0:
                    continue
                for a in range(q):
                    T[s, a, ix, jx] = block_likelihood(r[a0:a1], blocks[s, a], params)
    return T


def forward_pass(T, F1: np.ndarray):
    """Forward recursion with uniform symbol prior; returns (F, logF) normalised per step."""
    n, q, X, _ = T.shape
    F = np.zeros((n + 1, X))
    logF = np.zeros(n + 1)
    tot = F1.sum()
    F[0] = F1 / tot
    logF[0] = np.log(tot)
    for s in range(n):
        f = np.einsum("x,axy->y", F[s], T[s]) / q
        tot = f.sum()
        if not tot > 0:
            raise ValueError(f"forward mass vanished after block {s}")
        F[s + 1] = f / tot
        logF[s + 1] = logF[s] + np.log(tot)
    return F, logF


def backward_pass(T, Bn: np.ndarray):
    n, q, X, _ = T.shape
    B = np.zeros((n + 1, X))
    logB = np.zeros(n + 1)
    tot = Bn.sum()
    B[n] = Bn / tot
    logB[n] = np.log(tot)
    for s in range(n - 1, -1, -1):
        b = np.einsum("axy,y->x", T[s], B[s + 1]) / q
        tot = b.sum()
        if not tot > 0:
            raise ValueError(f"backward mass vanished before block {s}")
        B[s] = b / tot
        logB[s] = logB[s + 1] + np.log(tot)
    return B, logB


def symbol_likelihoods(T, F, logF, B, logB):
    """Row-normalised ``L[s, a]`` and the log row scales."""
    L = np.einsum("sx,saxy,sy->sa", F[:-1], T, B[1:])
    tot = L.sum(axis=1)
    if not (tot > 0).all():
        raise ValueError("zero likelihood row")
    return L / tot[:, None], np.log(tot) + logF[:-1] + logB[1:]


@dataclass
class InnerResult:
    status: int
    loglik: float
    L: np.ndarray | None  # n x q, rows sum to 1
    logL: np.ndarray | None  # log of each row's scale
    left: DriftDistribution | None = None
    right: DriftDistribution | None = None

    @property
    def ok(self) -> bool:
        return self.status == kernels.OK

    @property
    def status_name(self) -> str:
        return STATUS_NAMES[self.status]


class InnerDecoder:
    """Everything read-independent the inner decoder needs, prepared once.

    ``blocks[s, a]`` are the ``u`` symbols sent for block ``s`` if outer
    symbol ``s`` were ``a`` (inner word plus the watermark slice).  ``flank``
    and ``consensus`` are symbol arrays in the same alphabet as reads.
    """

    def __init__(self, blocks, flank, consensus, params: IdsParams, window: DriftWindow | None = None,
                 left_mode: str = "context", right_mode: str = "context",
                 max_n_fraction: float = MAX_N_FRACTION):
        self.blocks = np.ascontiguousarray(blocks, dtype=np.int8)
        if self.blocks.ndim != 3:
            raise ValueError("blocks must be n x q x u")
        self.n, self.q, self.u = self.blocks.shape
        self.flank = np.ascontiguousarray(flank, dtype=np.int8)
        self.consensus = np.ascontiguousarray(consensus, dtype=np.int8)
        self.params = params
        self.E = emission_table(params)
        self.window = window or DriftWindow.default(self.n * self.u, self.u, params, len(self.flank))
        if self.window.dmin != -self.u or self.window.dmax != self.u * params.max_ins:
            raise ValueError("inner window must be -u .. u*I")
        for m in (left_mode, right_mode):
            if m not in ("context", "uniform"):
                raise ValueError(f"unknown boundary mode {m!r}")
        if left_mode == "context" and self.flank.size == 0:
            left_mode = "uniform"
        self.left_mode, self.right_mode = left_mode, right_mode
        self.max_n_fraction = max_n_fraction
        self.read_window = decode_window(self.flank.size, self.n * self.u, self.consensus.size, self.window)
        # the flat start past the consensus is a prior, so it follows the layout, not the chosen window
        d = DriftWindow.default(self.n * self.u, self.u, params, len(self.flank))
        self.end_span = (d.xmin - CONSENSUS_MARGIN, d.xmax + CONSENSUS_MARGIN)

    @property
    def l(self) -> int:
        return self.n * self.u

    def _modes(self):
        return MODE_CODES[self.left_mode], MODE_CODES[self.right_mode]

    def decode(self, r, *, left_point: int | None = None, right_point: int | None = None,
               keep_tensors: bool = False) -> InnerResult:
        """Decode one read given as symbols (0..3, 4 = unknown).

        ``left_point``/``right_point`` pin the boundary drift instead of
        estimating it.
        """
        r = np.ascontiguousarray(r, dtype=np.int8)
        lm, rm = self._modes()
        if left_point is not None:
            lm = kernels.POINT
        if right_point is not None:
            rm = kernels.POINT
        w = self.window
        st, ll, T, F, logF, B, logB, L, logL = kernels.decode_one(
            r, self.flank, self.consensus, self.blocks, self.E, self.params.max_ins, w.xmin, w.xmax,
            lm, int(left_point or 0), rm, int(right_point or 0), float(self.max_n_fraction),
            self.read_window, *self.end_span)
        if st != kernels.OK:
            return InnerResult(int(st), float(ll), None, None)
        res = InnerResult(int(st), float(ll), np.array(L), np.array(logL),
                          DriftDistribution(np.array(F[0]), w.xmin, self.flank.size, float(logF[0])),
                          DriftDistribution(np.array(B[self.n]), w.xmin, self.flank.size + self.l,
                                            float(logB[self.n])))
        if keep_tensors:
            res.tensors = (np.array(T), np.array(F), np.array(logF), np.array(B), np.array(logB))
        return res

    def decode_batch(self, reads: np.ndarray, offsets: np.ndarray):
        """Decode concatenated reads; returns (L[R, n, q], loglik, status, drift[R, 2])."""
        lm, rm = self._modes()
        w = self.window
        return kernels.decode_batch(
            np.ascontiguousarray(reads, dtype=np.int8), np.ascontiguousarray(offsets, dtype=np.int64),
            self.flank, self.consensus, self.blocks, self.E, self.params.max_ins, w.xmin, w.xmax,
            lm, rm, float(self.max_n_fraction), self.read_window, *self.end_span)
