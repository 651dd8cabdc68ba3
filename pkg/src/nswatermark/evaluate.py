"""Monte Carlo estimates of read-loss and misassignment probabilities."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .barcode_set import BarcodeSet
from .channel import IdsParams
from .inner import MAX_N_FRACTION

INSERT_LEN = 64
DEFAULT_CHUNK = 4096


def confidence_interval(p: float, N: int) -> tuple[float, float]:
    """Two-sigma interval on the log scale; zero counts use 1 - exp(-2/N) as upper bound."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("rate must lie in [0, 1]")
    if p == 0.0:
        return 0.0, -math.expm1(-2.0 / N)
    sigma = math.sqrt((1.0 - p) / (N * p))
    return p * math.exp(-2.0 * sigma), p * math.exp(2.0 * sigma)


@dataclass(frozen=True)
class MonteCarloReport:
    N: int
    correct: int
    misassigned: int
    discarded: int
    unassignable: int
    # misassignments whose decoded codeword is not in the filtered set
    misassigned_unused: int
    p_i: float
    p_d: float
    p_s: float
    max_ins: int
    max_iters: int
    seed: int
    B: int
    M: int
    l: int

    def __post_init__(self):
        if self.correct + self.misassigned + self.discarded + self.unassignable != self.N:
            raise ValueError("report counts must sum to N")

    @property
    def lost(self) -> int:
        return self.discarded + self.unassignable

    @property
    def pe(self) -> float:
        return self.lost / self.N

    @property
    def pu(self) -> float:
        return self.misassigned / self.N

    @property
    def pe_ci(self):
        return confidence_interval(self.pe, self.N)

    @property
    def pu_ci(self):
        return confidence_interval(self.pu, self.N)

    @property
    def p_mut(self) -> float:
        return self.p_i + self.p_d + self.p_s

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(pe=self.pe, pe_lo=self.pe_ci[0], pe_hi=self.pe_ci[1],
                 pu=self.pu, pu_lo=self.pu_ci[0], pu_hi=self.pu_ci[1])
        return d

    def to_text(self) -> str:
        d = self.as_dict()
        rows = [f"{k}\t{_fmt(v)}" for k, v in d.items()]
        return "\n".join(rows) + "\n# summary " + json.dumps(d, sort_keys=True) + "\n"


SWEEP_COLUMNS = ("p_mut", "pe", "pe_lo", "pe_hi", "pu", "pu_lo", "pu_hi", "N", "discarded", "misassigned")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def sweep_tsv(reports) -> str:
    lines = ["\t".join(SWEEP_COLUMNS)]
    for r in reports:
        d = r.as_dict()
        d["p_mut"] = r.p_mut
        lines.append("\t".join(_fmt(d[c]) for c in SWEEP_COLUMNS))
    return "\n".join(lines) + "\n"


class _Experiment:
    def __init__(self, bset: BarcodeSet, params: IdsParams, seed: int, max_iters: int,
                 left_mode: str, right_mode: str):
        if bset.B == 0:
            raise ValueError("barcode set has no samples")
        self.templates = np.ascontiguousarray(bset.templates(), dtype=np.int8)
        self.expected = np.array([s.index for s in bset.samples], dtype=np.int64)
        in_set = np.zeros(bset.M, dtype=bool)
        in_set[self.expected] = True
        self.in_set = in_set
        self.decoder = bset.decoder(params, left_mode=left_mode, right_mode=right_mode,
                                    max_n_fraction=MAX_N_FRACTION)
        self.bp = bset.code.bp_structure
        self.params = params
        self.seed = seed
        self.max_iters = max_iters
        k, q = bset.params.k, bset.params.q
        self.k = k
        self.weights = q ** np.arange(k - 1, -1, -1, dtype=np.int64)

    def chunk(self, start: int, count: int) -> np.ndarray:
        """Counts (correct, misassigned, discarded, unassignable, misassigned_unused)."""
        p = self.params
        reads, offsets, which = kernels.simulate_batch(self.templates, int(self.seed), start, count,
                                                       INSERT_LEN, p.p_i, p.p_d, p.p_s, p.max_ins)
        Ls, _, status, _ = self.decoder.decode_batch(reads, offsets)
        status = np.asarray(status)
        good = status == kernels.OK
        hard, _, ok = kernels.bp_batch(Ls, good, *self.bp, self.max_iters)
        ok = np.asarray(ok) & good
        msg = np.asarray(hard)[:, : self.k] @ self.weights
        truth = self.expected[np.asarray(which)]
        correct = ok & (msg == truth)
        wrong = ok & (msg != truth)
        unused = wrong & ~self.in_set[np.where(wrong, msg, 0)]
        return np.array([correct.sum(), wrong.sum(), (good & ~ok).sum(), (~good).sum(), unused.sum()],
                        dtype=np.int64)


def run_experiment(bset: BarcodeSet, params: IdsParams, N: int, seed: int = 0, max_iters: int = 10, *,
                   threads: int | None = 1, chunk_size: int = DEFAULT_CHUNK,
                   left_mode: str = "context", right_mode: str = "context") -> MonteCarloReport:
    """Simulate ``N`` reads cycling over the set's barcodes and decode them.

    Read ``i`` depends only on ``(seed, i)``, so the result does not depend
    on ``threads`` or ``chunk_size``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    exp = _Experiment(bset, params, seed, max_iters, left_mode, right_mode)
    starts = range(0, N, chunk_size)
    jobs = [(s, min(chunk_size, N - s)) for s in starts]
    workers = threads or os.cpu_count() or 1
    if workers == 1:
        parts = [exp.chunk(s, c) for s, c in jobs]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda j: exp.chunk(*j), jobs))
    tot = np.sum(parts, axis=0)
    return MonteCarloReport(N, int(tot[0]), int(tot[1]), int(tot[2]), int(tot[3]), int(tot[4]),
                            params.p_i, params.p_d, params.p_s, params.max_ins, max_iters, seed,
                            bset.B, bset.M, bset.l)


def pmut_grid(lo: float, hi: float, steps: int) -> list[float]:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if steps == 1:
        return [lo]
    return [float(v) for v in np.linspace(lo, hi, steps)]


def sweep(bset: BarcodeSet, p_muts, N: int, seed: int = 0, max_iters: int = 10, max_ins: int = 2,
          **kw) -> list[MonteCarloReport]:
    """One experiment per mutation probability with equal insertion, deletion and substitution rates."""
    return [run_experiment(bset, IdsParams.from_pmut(p, max_ins), N, seed, max_iters, **kw) for p in p_muts]
