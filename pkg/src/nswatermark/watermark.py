"""Watermark choice by iterated local search on the number of filtered barcodes."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .barcodes import InnerCodebook, expand, nucleotide_codes, DEFAULT_MAPPING
from .chemistry import FilterThresholds, count_survivors
from .outer import OuterCode

log = logging.getLogger(__name__)


def perturbation_size(l: int) -> int:
    return max(2, math.ceil(l / 8))


class WatermarkObjective:
    """Barcodes lost to filtering for a given watermark, memoised."""

    def __init__(self, code: OuterCode, codebook: InnerCodebook, adapters=(),
                 thresholds: FilterThresholds = FilterThresholds(), mapping: str = DEFAULT_MAPPING):
        self.carriers = expand(code.codebook, codebook)
        self.M, self.l = self.carriers.shape
        self.codes = nucleotide_codes(mapping)
        self.adapters = tuple(adapters)
        self.thresholds = thresholds
        self.cache: dict[bytes, int] = {}
        self.evaluations = 0

    def survivors(self, w) -> int:
        w = np.asarray(w, dtype=np.int8)
        key = w.tobytes()
        hit = self.cache.get(key)
        if hit is None:
            self.evaluations += 1
            nuc = self.codes[np.bitwise_xor(self.carriers, w)]
            hit = count_survivors(nuc, self.adapters, self.thresholds)
            self.cache[key] = hit
        return hit

    def cost(self, w) -> int:
        return self.M - self.survivors(w)


@dataclass
class SearchResult:
    watermark: np.ndarray
    cost: int
    survivors: int
    history: list[tuple[int, int, int]] = field(default_factory=list)  # (step, cost, best)
    passes: int = 0
    infeasible: bool = False

    def trace_tsv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(["step", "cost", "best_cost"])
        w.writerows(self.history)
        return buf.getvalue()


def local_pass(w, objective: WatermarkObjective, on_move=None):
    """One left-to-right sweep; returns (new watermark, improved, cost).

    At each position the three other bases are tried and the cheapest kept;
    the incumbent wins ties.
    """
    w = np.array(w, dtype=np.int8, copy=True)
    current = objective.cost(w)
    improved = False
    for pos in range(w.size):
        keep = w[pos]
        best_sym, best_cost = keep, current
        for sym in range(4):
            if sym == keep:
                continue
            w[pos] = sym
            c = objective.cost(w)
            if c < best_cost:
                best_sym, best_cost = sym, c
        w[pos] = best_sym
        if best_sym != keep:
            improved = True
            current = best_cost
            if on_move is not None:
                on_move(current)
    return w, improved, current


def ils_optimize(code: OuterCode, codebook: InnerCodebook, adapters=(),
                 thresholds: FilterThresholds = FilterThresholds(), seed: int = 0,
                 budget: int = 20, perturb: int | None = None, mapping: str = DEFAULT_MAPPING,
                 initial=None) -> SearchResult:
    """Iterated local search over watermarks.

    ``budget`` is the number of perturb-and-descend restarts after the first
    descent.  The best watermark ever visited is returned.
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    objective = WatermarkObjective(code, codebook, adapters, thresholds, mapping)
    rng = np.random.default_rng(seed)
    l = objective.l
    p = perturb if perturb is not None else perturbation_size(l)
    if p < 1:
        raise ValueError("perturbation size must be >= 1")
    w = rng.integers(0, 4, l).astype(np.int8) if initial is None else np.asarray(initial, np.int8).copy()

    best_w = w.copy()
    best_cost = objective.cost(w)
    history = [(0, best_cost, best_cost)]

    def record(cost):
        history.append((len(history), cost, min(cost, history[-1][2])))

    passes = 0
    for restart in range(budget + 1):
        if restart:
            record(objective.cost(w))
        while True:
            w, improved, cost = local_pass(w, objective, record)
            passes += 1
            if cost < best_cost:
                best_w, best_cost = w.copy(), cost
            if not improved:
                break
        if best_cost == 0 or restart == budget:
            break
        # perturb the incumbent best; each chosen base moves to a different one
        w = best_w.copy()
        for pos in rng.choice(l, size=min(p, l), replace=False):
            w[pos] = (w[pos] + rng.integers(1, 4)) % 4
    survivors = objective.M - best_cost
    if survivors == 0:
        log.warning("no watermark visited lets any barcode pass the filter")
    log.info("watermark search: %d passes, %d evaluations, %d/%d survivors",
             passes, objective.evaluations, survivors, objective.M)
    return SearchResult(best_w, best_cost, survivors, history, passes, survivors == 0)
