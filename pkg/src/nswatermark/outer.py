"""Short LDPC outer codes over GF(q): construction, encoding and decoding."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .gf import GaloisField

log = logging.getLogger(__name__)

ML_GUARD = 1 << 20


class CodeConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class DecodeOutcome:
    decoded: bool
    message: np.ndarray | None
    codeword: np.ndarray
    iterations: int

    @property
    def status(self) -> str:
        return "decoded" if self.decoded else "failure"


class OuterCode:
    """Linear code over GF(q) given by an m x n parity-check matrix.

    The last ``m`` columns of ``H`` must be invertible so that the first ``k``
    codeword symbols carry the message verbatim.
    """

    def __init__(self, field: GaloisField, H, seed: int | None = None):
        H = np.asarray(H, dtype=np.int64)
        if H.ndim != 2 or H.shape[0] >= H.shape[1]:
            raise ValueError(f"parity-check matrix must be m x n with m < n, got {H.shape}")
        if H.min() < 0 or H.max() >= field.q:
            raise ValueError("parity-check entries outside the field")
        self.field = field
        self.H = H
        self.H.setflags(write=False)
        self.m, self.n = H.shape
        self.k = self.n - self.m
        self.seed = seed
        B = H[:, self.k:]
        try:
            Binv = field.inverse_matrix(B)
        except Exception as exc:
            raise CodeConstructionError("parity part of H is singular; code is not systematic") from exc
        # H [x; p] = A x + B p = 0  =>  p = B^-1 A x
        P = field.matmul(Binv, H[:, : self.k])
        self.G = np.hstack([np.eye(self.k, dtype=np.int64), P.T])
        self.G.setflags(write=False)

        rows, cols = np.nonzero(H)
        self._chk_ptr = np.searchsorted(rows, np.arange(self.m + 1)).astype(np.int64)
        self._chk_var = cols.astype(np.int64)
        self._chk_coef = H[rows, cols].astype(np.int64)
        order = np.argsort(self._chk_var, kind="stable")
        self._var_edge = order.astype(np.int64)
        self._var_ptr = np.searchsorted(self._chk_var[order], np.arange(self.n + 1)).astype(np.int64)

    @classmethod
    def from_generator(cls, field: GaloisField, G) -> "OuterCode":
        """Build from a systematic generator ``[I_k | P]``."""
        G = np.asarray(G, dtype=np.int64)
        k, n = G.shape
        if not np.array_equal(G[:, :k], np.eye(k, dtype=np.int64)):
            raise ValueError("generator must be systematic")
        # characteristic 2: H = [P^T | I_m]
        H = np.hstack([G[:, k:].T, np.eye(n - k, dtype=np.int64)])
        return cls(field, H)

    def __repr__(self) -> str:
        return f"OuterCode(q={self.field.q}, n={self.n}, k={self.k}, seed={self.seed})"

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def size(self) -> int:
        return self.q**self.k

    @property
    def bp_structure(self):
        return (self._chk_ptr, self._chk_var, self._chk_coef, self._var_ptr, self._var_edge,
                self.field.mul_table)

    # -- messages -----------------------------------------------------------

    def message_from_index(self, index: int) -> np.ndarray:
        if not 0 <= index < self.size:
            raise ValueError(f"message index {index} out of range")
        digits = np.zeros(self.k, dtype=np.int64)
        for j in range(self.k - 1, -1, -1):
            index, digits[j] = divmod(index, self.q)
        return digits

    def index_from_message(self, x) -> int:
        idx = 0
        for d in np.asarray(x, dtype=np.int64):
            idx = idx * self.q + int(d)
        return idx

    def encode(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if x.shape != (self.k,) or x.min(initial=0) < 0 or x.max(initial=0) >= self.q:
            raise ValueError(f"message must be {self.k} symbols of GF({self.q})")
        return self.field.matmul(x[None, :], self.G)[0]

    def syndrome(self, d) -> np.ndarray:
        return self.field.matmul(self.H, np.asarray(d, dtype=np.int64))

    def is_codeword(self, d) -> bool:
        return not self.syndrome(d).any()

    @cached_property
    def codebook(self) -> np.ndarray:
        """All codewords, row ``i`` encoding message index ``i``."""
        if self.size > ML_GUARD:
            raise ValueError(f"{self.size} codewords exceed the enumeration guard {ML_GUARD}")
        idx = np.arange(self.size)
        msgs = np.empty((self.size, self.k), dtype=np.int64)
        for j in range(self.k - 1, -1, -1):
            idx, msgs[:, j] = np.divmod(idx, self.q)
        out = np.zeros((self.size, self.n), dtype=np.int64)
        for j in range(self.k):
            out ^= self.field.mul_table[msgs[:, j][:, None], self.G[j][None, :]]
        return out

    @cached_property
    def weight_profile(self) -> tuple[int, int]:
        """(minimum distance, number of minimum-weight codewords)."""
        w = np.count_nonzero(self.codebook[1:], axis=1)
        dmin = int(w.min())
        return dmin, int(np.count_nonzero(w == dmin))

    @property
    def min_distance(self) -> int:
        return self.weight_profile[0]

    # -- decoding -----------------------------------------------------------

    def _check_L(self, L) -> np.ndarray:
        L = np.asarray(L, dtype=np.float64)
        if L.shape != (self.n, self.q):
            raise ValueError(f"likelihood matrix must be {self.n} x {self.q}, got {L.shape}")
        return L

    def bp_decode(self, L, max_iters: int = 10) -> DecodeOutcome:
        L = self._check_L(L)
        if max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        hard, it, ok = kernels.bp_decode(L, *self.bp_structure, max_iters)
        hard = np.asarray(hard, dtype=np.int64)
        return DecodeOutcome(bool(ok), hard[: self.k].copy() if ok else None, hard, int(it))

    def ml_decode(self, L) -> np.ndarray:
        """Exhaustive maximum-likelihood decoding; ties go to the lowest index."""
        L = self._check_L(L)
        with np.errstate(divide="ignore"):
            logL = np.log(L)
        scores = logL[np.arange(self.n)[None, :], self.codebook].sum(axis=1)
        return self.message_from_index(int(np.argmax(scores)))


def _random_parity_check(field: GaloisField, n: int, m: int, col_weight: int, rng) -> np.ndarray:
    H = np.zeros((m, n), dtype=np.int64)
    supports: list[frozenset] = []
    degree = np.zeros(m, dtype=np.int64)
    for j in range(n):
        choice = None
        for attempt in range(200):
            if attempt < 100:
                # favour light rows to keep row weights regular
                key = degree + rng.random(m)
                rows = np.argsort(key)[:col_weight] if attempt == 0 else rng.choice(
                    np.argsort(key)[: min(m, col_weight + 2)], col_weight, replace=False)
            else:
                rows = rng.choice(m, col_weight, replace=False)
            s = frozenset(int(r) for r in rows)
            if all(len(s & t) < 2 for t in supports):
                choice = s
                break
        if choice is None:
            # short codes cannot always avoid 4-cycles; settle for an unused support
            unused = [s for s in (frozenset(int(r) for r in rng.choice(m, col_weight, replace=False))
                                  for _ in range(50)) if s not in supports]
            choice = unused[0] if unused else frozenset(int(r) for r in rng.choice(m, col_weight, replace=False))
        supports.append(choice)
        for r in choice:
            H[r, j] = rng.integers(1, field.q)
            degree[r] += 1
    return H


def _valid_parity_check(field: GaloisField, H: np.ndarray) -> bool:
    m, n = H.shape
    if not H.any(axis=1).all() or not H.any(axis=0).all():
        return False
    if len({tuple(c) for c in H.T}) < n:
        return False
    return field.rank(H[:, n - m:]) == m


def construct_code(field: GaloisField, n: int, k: int, seed: int = 0, *,
                   attempts: int = 16, col_weight: int = 2,
                   max_tries: int = 2000) -> OuterCode:
    """Random column-regular LDPC code; the best of ``attempts`` valid draws.

    Draws are ranked by minimum distance, then by the number of minimum
    weight codewords (fewer is better), when the code is small enough to
    enumerate.
    """
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    m = n - k
    if col_weight < 1:
        raise ValueError("col_weight must be >= 1")
    # weight-2 columns: sparse graphs decode closest to ML over GF(16)
    col_weight = min(col_weight, m)
    rng = np.random.default_rng(seed)
    scorable = field.q**k <= ML_GUARD
    best, best_score = None, None
    valid = 0
    for _ in range(max_tries):
        H = _random_parity_check(field, n, m, col_weight, rng)
        if not _valid_parity_check(field, H):
            continue
        code = OuterCode(field, H, seed)
        valid += 1
        if not scorable:
            return code
        dmin, mult = code.weight_profile
        score = (dmin, -mult)
        if best_score is None or score > best_score:
            best, best_score = code, score
        if valid >= attempts:
            break
    if best is None:
        raise CodeConstructionError(
            f"no full-rank parity-check matrix found for n={n}, k={k}, q={field.q} "
            f"after {max_tries} draws; try another seed")
    log.debug("outer code n=%d k=%d: dmin=%d (%d words)", n, k, *best_score)
    return best
