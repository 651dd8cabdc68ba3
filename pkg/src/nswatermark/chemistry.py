"""Chemical suitability filter for candidate barcodes.

Pairing is perfect Watson-Crick complementarity (no mismatches, no G-T
wobble).  A barcode is rejected for the first rule it violates, checked in the
order gc, homopolymer, hairpin, self_dimer, adapter, cross.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .barcodes import NUCLEOTIDES, CandidateSet

# largest k-mer the cross pass indexes with a dense table (4**11 entries)
_DENSE_KMER_LIMIT = 11


class FilterError(RuntimeError):
    pass


@dataclass(frozen=True)
class FilterThresholds:
    gc_min: float = 0.35
    gc_max: float = 0.65
    max_homopolymer: float = 5
    max_heteroduplex: float = 6
    max_hairpin: float = 6
    min_hairpin_loop: int = 3
    # greedy barcode-vs-barcode heteroduplex pass in ascending message order
    cross_pairs: bool = True

    def __post_init__(self):
        if not 0.0 <= self.gc_min <= self.gc_max <= 1.0:
            raise ValueError("need 0 <= gc_min <= gc_max <= 1")
        for name in ("max_homopolymer", "max_heteroduplex", "max_hairpin"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.min_hairpin_loop < 0:
            raise ValueError("min_hairpin_loop must be >= 0")

    @classmethod
    def permissive(cls) -> "FilterThresholds":
        return cls(0.0, 1.0, math.inf, math.inf, math.inf, 0, cross_pairs=False)

    def threshold_for(self, rule: str) -> float:
        return {
            "gc": (self.gc_min, self.gc_max),
            "homopolymer": self.max_homopolymer,
            "hairpin": self.max_hairpin,
            "self_dimer": self.max_heteroduplex,
            "adapter": self.max_heteroduplex,
            "cross": self.max_heteroduplex,
        }[rule]


def _codes(seq: str) -> np.ndarray:
    try:
        return np.array([NUCLEOTIDES.index(c) for c in seq.upper()], dtype=np.int8)
    except ValueError:
        raise ValueError(f"invalid nucleotide in {seq!r}") from None


def gc_content(seq: str) -> float:
    if not seq:
        raise ValueError("empty sequence")
    s = _codes(seq)
    return float(np.isin(s, (1, 2)).sum()) / s.size


def max_homopolymer(seq: str) -> int:
    if not seq:
        raise ValueError("empty sequence")
    best = run = 1
    for a, b in zip(seq, seq[1:]):
        run = run + 1 if a == b else 1
        best = max(best, run)
    _codes(seq)
    return best


def hairpin_len(seq: str, min_loop: int = 3) -> int:
    """Longest perfectly paired stem with at least ``min_loop`` unpaired bases."""
    from .kernels import _numpy

    return _numpy._hairpin(_codes(seq), min_loop)


def heteroduplex_len(a: str, b: str) -> int:
    """Longest substring of ``a`` whose reverse complement occurs in ``b``."""
    from .kernels import _numpy

    return _numpy._heteroduplex(_codes(a), _codes(b))


@dataclass(frozen=True)
class Rejection:
    index: int
    rule: str
    value: float
    threshold: object


@dataclass
class FilterResult:
    survivors: np.ndarray  # candidate indices, ascending
    rejections: list[Rejection] = field(default_factory=list)

    @property
    def B(self) -> int:
        return int(self.survivors.size)

    def report_tsv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(["index", "rule", "value", "threshold"])
        for r in self.rejections:
            thr = r.threshold
            if isinstance(thr, tuple):
                thr = f"{thr[0]:g}-{thr[1]:g}"
            w.writerow([r.index, r.rule, f"{r.value:g}", thr if isinstance(thr, str) else f"{thr:g}"])
        return buf.getvalue()


def _adapter_arrays(adapters) -> tuple[np.ndarray, np.ndarray]:
    parts = [_codes(a) for a in adapters]
    ptr = np.zeros(len(parts) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([p.size for p in parts])
    flat = np.concatenate(parts) if parts else np.zeros(0, np.int8)
    return flat.astype(np.int8), ptr


def _cross(nuc: np.ndarray, ok: np.ndarray, max_het: float) -> np.ndarray:
    k = int(max_het) + 1
    if k > nuc.shape[1]:
        return np.full(len(nuc), -1, dtype=np.int64)
    if k <= _DENSE_KMER_LIMIT:
        return kernels.cross_scan(nuc, ok, k)
    from .kernels import _numpy

    return _numpy.cross_scan(nuc, ok, k)


def scan(nuc: np.ndarray, adapters=(), thresholds: FilterThresholds = FilterThresholds()):
    """Rule code per barcode (0 = pass, 6 = cross) and the measured value.

    ``nuc`` holds ACGT indices (complement = 3 - code), one barcode per row.
    """
    flat, ptr = _adapter_arrays(adapters)
    t = thresholds
    rule, value = kernels.chem_scan(
        np.ascontiguousarray(nuc, dtype=np.int8), flat, ptr, float(t.gc_min), float(t.gc_max),
        float(t.max_homopolymer), float(t.max_hairpin), float(t.max_heteroduplex),
        int(t.min_hairpin_loop))
    rule = np.asarray(rule, dtype=np.int8)
    value = np.asarray(value)
    conflict = None
    if t.cross_pairs and math.isfinite(t.max_heteroduplex):
        conflict = _cross(nuc, rule == 0, t.max_heteroduplex)
        rule[conflict >= 0] = 6
    return rule, value, conflict


RULES = kernels.RULE_NAMES + ("cross",)


def count_survivors(nuc: np.ndarray, adapters=(), thresholds: FilterThresholds = FilterThresholds()) -> int:
    rule, _, _ = scan(nuc, adapters, thresholds)
    return int(np.count_nonzero(rule == 0))


def filter_set(candidates: CandidateSet | np.ndarray, adapters=(),
               thresholds: FilterThresholds = FilterThresholds()) -> FilterResult:
    """Keep the chemically suitable candidates.

    ``candidates`` is a :class:`CandidateSet` or an array of ACGT codes.
    Raises :class:`FilterError` if nothing survives.
    """
    nuc = candidates.nucleotide_codes() if isinstance(candidates, CandidateSet) else np.asarray(candidates)
    rule, value, conflict = scan(nuc, adapters, thresholds)
    if conflict is not None:
        cross = conflict >= 0
        value = value.copy()
        value[cross] = kernels.pair_heteroduplex(np.ascontiguousarray(nuc, dtype=np.int8), conflict)[cross]
    rejections = []
    for i in np.flatnonzero(rule):
        name = RULES[rule[i]]
        v = value[i]
        rejections.append(Rejection(int(i), name, float(v), thresholds.threshold_for(name)))
    survivors = np.flatnonzero(rule == 0)
    if survivors.size == 0:
        raise FilterError("no candidate survived filtering; re-optimise the watermark or relax thresholds")
    return FilterResult(survivors, rejections)
