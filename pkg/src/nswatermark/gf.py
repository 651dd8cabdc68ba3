"""Arithmetic over GF(2^p) with exp/log lookup tables.

Elements are small unsigned integers whose bit patterns are polynomial
coefficients, so addition is XOR.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

DEFAULT_POLYS = {4: 0b111, 8: 0b1011, 16: 0b10011}


class FieldError(ValueError):
    pass


def _poly_mulmod(a: int, b: int, poly: int, p: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> p:
            a ^= poly
    return out


def _is_irreducible(poly: int, p: int) -> bool:
    # trial division by every polynomial of degree 1..p//2
    for d in range(1, p // 2 + 1):
        for g in range(1 << d, 1 << (d + 1)):
            r = poly
            while r.bit_length() >= g.bit_length():
                r ^= g << (r.bit_length() - g.bit_length())
            if r == 0:
                return False
    return True


class GaloisField:
    """GF(q) for q in {4, 8, 16}.

    >>> gf = GaloisField(8)
    >>> gf.mul(2, 2)
    4
    """

    def __init__(self, q: int, poly: int | None = None):
        if q not in DEFAULT_POLYS:
            raise FieldError(f"unsupported field order {q}; expected one of 4, 8, 16")
        p = q.bit_length() - 1
        if poly is None:
            poly = DEFAULT_POLYS[q]
        if poly.bit_length() - 1 != p:
            raise FieldError(f"polynomial {poly:#b} does not have degree {p}")
        if not _is_irreducible(poly, p):
            raise FieldError(f"polynomial {poly:#b} is reducible")
        self.q = q
        self.p = p
        self.poly = poly

        mul = np.zeros((q, q), dtype=np.int64)
        for a in range(q):
            for b in range(q):
                mul[a, b] = _poly_mulmod(a, b, poly, p)
        # an irreducible poly need not be primitive, so search for a generator
        for g in range(2, q) if q > 2 else [1]:
            seen = {1}
            x = 1
            for _ in range(q - 2):
                x = int(mul[x, g])
                seen.add(x)
            if len(seen) == q - 1:
                break
        else:  # pragma: no cover - every finite field has a generator
            raise FieldError("no multiplicative generator found")
        exp = np.zeros(2 * (q - 1), dtype=np.int64)
        log = np.full(q, -1, dtype=np.int64)
        x = 1
        for i in range(q - 1):
            exp[i] = x
            log[x] = i
            x = int(mul[x, g])
        exp[q - 1:] = exp[: q - 1]
        inv = np.zeros(q, dtype=np.int64)
        for a in range(1, q):
            inv[a] = exp[(q - 1 - log[a]) % (q - 1)]

        self.generator = g
        self.exp = exp
        self.log = log
        self.mul_table = mul
        self.inv_table = inv
        for arr in (exp, log, mul, inv):
            arr.setflags(write=False)

    def __repr__(self) -> str:
        return f"GaloisField(q={self.q}, poly={self.poly:#b})"

    def __eq__(self, other) -> bool:
        return isinstance(other, GaloisField) and (self.q, self.poly) == (other.q, other.poly)

    def __hash__(self) -> int:
        return hash((self.q, self.poly))

    def _check(self, *elems: int) -> None:
        for e in elems:
            if not 0 <= e < self.q:
                raise FieldError(f"{e} is not an element of GF({self.q})")

    def add(self, a: int, b: int) -> int:
        self._check(a, b)
        return a ^ b

    sub = add

    def mul(self, a: int, b: int) -> int:
        self._check(a, b)
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        self._check(a)
        if a == 0:
            raise ZeroDivisionError("0 has no multiplicative inverse")
        return int(self.inv_table[a])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        self._check(a)
        if a == 0:
            return 0 if e > 0 else 1
        return int(self.exp[(self.log[a] * e) % (self.q - 1)])

    @cached_property
    def elements(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.int64)

    # vectorised helpers used by the linear algebra below

    def vmul(self, a, b) -> np.ndarray:
        return self.mul_table[np.asarray(a), np.asarray(b)]

    def matmul(self, A, B) -> np.ndarray:
        """Matrix product over the field."""
        A = np.atleast_2d(np.asarray(A, dtype=np.int64))
        B = np.asarray(B, dtype=np.int64)
        vec = B.ndim == 1
        B = B.reshape(B.shape[0], -1)
        out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
        for j in range(A.shape[1]):
            out ^= self.mul_table[A[:, j][:, None], B[j][None, :]]
        return out[:, 0] if vec else out

    def row_reduce(self, A) -> tuple[np.ndarray, list[int]]:
        """Reduced row echelon form; returns (matrix, pivot columns)."""
        M = np.array(A, dtype=np.int64, copy=True)
        rows, cols = M.shape
        pivots: list[int] = []
        r = 0
        for c in range(cols):
            if r == rows:
                break
            nz = np.nonzero(M[r:, c])[0]
            if nz.size == 0:
                continue
            pr = r + int(nz[0])
            M[[r, pr]] = M[[pr, r]]
            M[r] = self.mul_table[self.inv_table[M[r, c]], M[r]]
            for rr in range(rows):
                if rr != r and M[rr, c]:
                    M[rr] ^= self.mul_table[M[rr, c], M[r]]
            pivots.append(c)
            r += 1
        return M, pivots

    def rank(self, A) -> int:
        return len(self.row_reduce(A)[1])

    def inverse_matrix(self, A) -> np.ndarray:
        A = np.asarray(A, dtype=np.int64)
        n = A.shape[0]
        R, piv = self.row_reduce(np.hstack([A, np.eye(n, dtype=np.int64)]))
        if piv[:n] != list(range(n)):
            raise FieldError("matrix is singular")
        return R[:, n:]
