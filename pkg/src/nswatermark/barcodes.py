"""Candidate barcode construction: inner codebook, expansion, watermark, mapping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .outer import OuterCode

NUCLEOTIDES = "ACGT"
DEFAULT_MAPPING = "ACGT"  # symbol 0 -> A, 1 -> C, 2 -> G, 3 -> T


class BarcodeError(ValueError):
    pass


def hamming(a, b) -> int:
    return int(np.count_nonzero(np.asarray(a) != np.asarray(b)))


def min_pairwise_distance(words) -> int:
    words = np.asarray(words)
    if len(words) < 2:
        return words.shape[1] if words.ndim == 2 else 0
    d = (words[:, None, :] != words[None, :, :]).sum(axis=2)
    iu = np.triu_indices(len(words), 1)
    return int(d[iu].min())


def singleton_bound(q: int, u: int) -> int:
    """Largest distance a q-word code of length u over 4 symbols can reach."""
    d = u
    while d > 1 and 4 ** (u - d + 1) < q:
        d -= 1
    return d


@dataclass(frozen=True)
class InnerCodebook:
    words: np.ndarray  # q x u, symbols 0..3
    min_distance: int

    def __post_init__(self):
        w = np.asarray(self.words, dtype=np.int8)
        if w.ndim != 2 or len({tuple(r) for r in w}) != len(w):
            raise BarcodeError("inner codebook words must be distinct and of equal length")
        object.__setattr__(self, "words", w)
        w.setflags(write=False)

    @classmethod
    def from_words(cls, words) -> "InnerCodebook":
        words = np.asarray(words, dtype=np.int8)
        return cls(words, min_pairwise_distance(words))

    @property
    def q(self) -> int:
        return self.words.shape[0]

    @property
    def u(self) -> int:
        return self.words.shape[1]


def build_inner_codebook(q: int, u: int, seed: int = 0, *, restarts: int = 64,
                         samples: int = 4096) -> InnerCodebook:
    """Randomised greedy search for q quaternary words with large pairwise distance.

    Each restart grows the set one word at a time, picking among ``samples``
    random words the one farthest from the words already kept.
    """
    if q > 4**u:
        raise BarcodeError(f"cannot pick {q} distinct words of length {u} over 4 symbols")
    rng = np.random.default_rng(seed)
    target = singleton_bound(q, u)
    exhaustive = 4**u <= samples
    if exhaustive:
        universe = np.array(np.unravel_index(np.arange(4**u), (4,) * u)).T.astype(np.int8)
    best, best_d = None, -1
    for _ in range(max(1, restarts)):
        if exhaustive:
            pool = universe[rng.permutation(len(universe))]
            kept = [pool[0]]
            dist = (pool != pool[0]).sum(axis=1)
            while len(kept) < q:
                pick = int(np.argmax(dist))
                if dist[pick] == 0:
                    break
                kept.append(pool[pick])
                dist = np.minimum(dist, (pool != pool[pick]).sum(axis=1))
        else:
            kept = [rng.integers(0, 4, u).astype(np.int8)]
            while len(kept) < q:
                cand = rng.integers(0, 4, (samples, u)).astype(np.int8)
                dist = np.min([(cand != w).sum(axis=1) for w in kept], axis=0)
                pick = int(np.argmax(dist))
                if dist[pick] == 0:
                    break
                kept.append(cand[pick])
        if len(kept) < q:
            continue
        words = np.array(kept, dtype=np.int8)
        d = min_pairwise_distance(words)
        if d > best_d:
            best, best_d = words, d
            if d >= target:
                break
    if best is None:
        raise BarcodeError(f"search failed to find {q} distinct words of length {u}")
    return InnerCodebook(best, best_d)


def expand(d, codebook: InnerCodebook) -> np.ndarray:
    d = np.asarray(d, dtype=np.int64)
    if d.size and (d.min() < 0 or d.max() >= codebook.q):
        raise BarcodeError("codeword symbol outside the inner codebook")
    return codebook.words[d].reshape(*d.shape[:-1], -1)


def imprint(c, w) -> np.ndarray:
    c = np.asarray(c, dtype=np.int8)
    w = np.asarray(w, dtype=np.int8)
    if c.shape[-1] != w.shape[-1]:
        raise BarcodeError(f"carrier length {c.shape[-1]} != watermark length {w.shape[-1]}")
    return np.bitwise_xor(c, w)


unimprint = imprint


def _check_mapping(mapping: str) -> str:
    if len(mapping) != 4 or set(mapping) != set(NUCLEOTIDES):
        raise BarcodeError(f"mapping must be a permutation of ACGT, got {mapping!r}")
    return mapping


def nucleotide_codes(mapping: str = DEFAULT_MAPPING) -> np.ndarray:
    """Index into ``ACGT`` (complement = 3 - code) for each symbol."""
    _check_mapping(mapping)
    return np.array([NUCLEOTIDES.index(ch) for ch in mapping], dtype=np.int8)


def to_nucleotides(b, mapping: str = DEFAULT_MAPPING) -> str:
    _check_mapping(mapping)
    return "".join(mapping[int(s)] for s in np.asarray(b).ravel())


def from_nucleotides(seq: str, mapping: str = DEFAULT_MAPPING, *, allow_n: bool = False) -> np.ndarray:
    """Map a nucleotide string back to symbols; ``N`` becomes 4 when allowed."""
    _check_mapping(mapping)
    lut = np.full(256, -1, dtype=np.int8)
    for sym, ch in enumerate(mapping):
        lut[ord(ch)] = sym
        lut[ord(ch.lower())] = sym
    if allow_n:
        lut[ord("N")] = lut[ord("n")] = 4
    raw = np.frombuffer(seq.encode("ascii", errors="replace"), dtype=np.uint8)
    out = lut[raw]
    if (out < 0).any():
        bad = seq[int(np.flatnonzero(out < 0)[0])]
        raise BarcodeError(f"invalid nucleotide {bad!r}")
    return out


def reverse_complement(seq: str) -> str:
    return seq.translate(str.maketrans("ACGTNacgtn", "TGCANtgcan"))[::-1]


@dataclass(frozen=True)
class CodeParams:
    q: int
    k: int
    n: int
    u: int
    code_seed: int = 0
    inner_seed: int = 0

    def __post_init__(self):
        if self.q not in (4, 8, 16):
            raise BarcodeError(f"q must be 4, 8 or 16, got {self.q}")
        if not 1 <= self.k < self.n:
            raise BarcodeError(f"need 1 <= k < n, got k={self.k}, n={self.n}")
        if self.u < 1 or 4**self.u < self.q:
            raise BarcodeError(f"u={self.u} too short for q={self.q}")

    @property
    def l(self) -> int:
        return self.n * self.u

    @property
    def m(self) -> int:
        return self.n - self.k

    @property
    def M(self) -> int:
        return self.q**self.k

    @classmethod
    def from_length(cls, q: int, k: int, l: int, u: int, **seeds) -> "CodeParams":
        if l % u:
            raise BarcodeError(f"barcode length {l} is not a multiple of u={u}")
        return cls(q=q, k=k, n=l // u, u=u, **seeds)


@dataclass(frozen=True)
class CandidateBarcode:
    sample: int  # message index
    carrier: np.ndarray
    imprinted: np.ndarray
    nucleotides: str


class CandidateSet:
    """All q^k candidates, row i encoding message index i."""

    def __init__(self, code: OuterCode, codebook: InnerCodebook, watermark, mapping: str = DEFAULT_MAPPING):
        watermark = np.asarray(watermark, dtype=np.int8)
        l = code.n * codebook.u
        if watermark.shape != (l,):
            raise BarcodeError(f"watermark length {watermark.size} != n*u = {l}")
        if codebook.q != code.q:
            raise BarcodeError("inner codebook size must equal the outer field order")
        self.code = code
        self.codebook = codebook
        self.watermark = watermark
        self.mapping = _check_mapping(mapping)
        self.carriers = expand(code.codebook, codebook)
        self.symbols = imprint(self.carriers, watermark)

    def __len__(self) -> int:
        return self.symbols.shape[0]

    @property
    def length(self) -> int:
        return self.symbols.shape[1]

    def nucleotide_codes(self) -> np.ndarray:
        return nucleotide_codes(self.mapping)[self.symbols]

    def sequence(self, i: int) -> str:
        return to_nucleotides(self.symbols[i], self.mapping)

    def __getitem__(self, i: int) -> CandidateBarcode:
        return CandidateBarcode(i, self.carriers[i], self.symbols[i], self.sequence(i))

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def build_candidate_set(code: OuterCode, codebook: InnerCodebook, watermark,
                        mapping: str = DEFAULT_MAPPING) -> CandidateSet:
    cands = CandidateSet(code, codebook, watermark, mapping)
    # encode, expand and imprint are injective, so duplicates mean a broken input
    if len(np.unique(cands.symbols, axis=0)) != len(cands):
        raise BarcodeError("duplicate candidate barcodes")
    return cands


def block_hypotheses(codebook: InnerCodebook, watermark, n: int) -> np.ndarray:
    """``t[s, a]``: the u symbols sent for block s if its outer symbol were a."""
    w = np.asarray(watermark, dtype=np.int8).reshape(n, 1, codebook.u)
    return np.bitwise_xor(codebook.words[None, :, :], w)
