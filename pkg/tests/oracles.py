"""Slow, independent reference implementations used only by the tests.

Nothing here imports the package's numeric code paths: probabilities come
from the sampler's event description, chemistry from plain string search,
field arithmetic from carry-less polynomial multiplication.
"""

import itertools
from functools import lru_cache

import numpy as np

COMP = {"A": "T", "C": "G", "G": "C", "T": "A"}


# -- finite field --------------------------------------------------------------


def poly_mul(a, b, poly, p):
    """Carry-less multiply then reduce modulo ``poly`` (degree p)."""
    acc = 0
    for i in range(p):
        if b >> i & 1:
            acc ^= a << i
    for d in range(2 * p - 2, p - 1, -1):
        if acc >> d & 1:
            acc ^= poly << (d - p)
    return acc


# -- channel -------------------------------------------------------------------


def base_events(t, p_i, p_d, p_s, I):
    """Every outcome of sending symbol ``t``: list of (received tuple, probability).

    Follows the sampler step by step: up to I times choose insert (uniform
    symbol), delete or transmit; after I insertions only delete or transmit.
    Duplicated strings are kept as separate events.
    """
    p_t = 1.0 - p_i - p_d
    out = []

    def rec(prefix, prob, s):
        if s < I:
            if p_i > 0:
                for sym in range(4):
                    rec(prefix + (sym,), prob * p_i / 4.0, s + 1)
            pd, pt = p_d, p_t
        else:
            pd, pt = p_d, 1.0 - p_d
        out.append((prefix, prob * pd))
        for sym in range(4):
            ps = (1.0 - p_s) if sym == t else p_s / 3.0
            out.append((prefix + (sym,), prob * pt * ps))

    rec((), 1.0, 0)
    return out


def sequence_likelihood(r, t, params, n_symbol=4):
    """P(channel turns t into exactly r), summed over every event sequence.

    Reads may hold the unknown symbol, which matches any sent base with the
    average over the four bases.  Memoised on (base, read position) only to
    keep the enumeration tractable; every event sequence is still visited.
    """
    r = tuple(int(c) for c in r)
    t = tuple(int(c) for c in t)
    ev = {sym: base_events(sym, params.p_i, params.p_d, params.p_s, params.max_ins) for sym in set(t)}

    def match(rho, pos):
        # probability weight that the received symbols rho line up with r[pos:]
        if pos + len(rho) > len(r):
            return 0.0
        w = 1.0
        for a, b in zip(rho, r[pos:pos + len(rho)]):
            if b == n_symbol:
                w *= 0.25
            elif a != b:
                return 0.0
        return w

    @lru_cache(maxsize=None)
    def go(j, pos):
        if j == len(t):
            return 1.0 if pos == len(r) else 0.0
        tot = 0.0
        for rho, p in ev[t[j]]:
            if p == 0.0:
                continue
            w = match(rho, pos)
            if w:
                tot += p * w * go(j + 1, pos + len(rho))
        return tot

    return go(0, 0)


def sequence_likelihood_naive(r, t, params):
    """Unmemoised enumeration of all event sequences; tiny inputs only."""
    r = tuple(int(c) for c in r)
    per_base = [base_events(int(s), params.p_i, params.p_d, params.p_s, params.max_ins) for s in t]
    tot = 0.0
    for combo in itertools.product(*per_base):
        out = tuple(itertools.chain.from_iterable(rho for rho, _ in combo))
        if out == r:
            p = 1.0
            for _, pe in combo:
                p *= pe
            tot += p
    return tot


def symbol_likelihoods_enum(r, blocks, prefix, suffix, params, starts, ends):
    """Unnormalised L[s, a] = sum over every symbol sequence d with d_s = a of
    q^-n * sum over (start, end) of P(r[start:end] | prefix b(d) suffix).

    Also returns the total (the read likelihood under uniform symbols).
    """
    n, q, u = blocks.shape
    L = np.zeros((n, q))
    total = 0.0
    for d in itertools.product(range(q), repeat=n):
        t = list(prefix) + [int(c) for s in range(n) for c in blocks[s, d[s]]] + list(suffix)
        p = sum(sequence_likelihood(r[a:e], t, params) for a in starts for e in ends if a <= e) / q**n
        total += p
        for s in range(n):
            L[s, d[s]] += p
    return L, total


# -- chemistry -----------------------------------------------------------------


def revcomp(s):
    return "".join(COMP[c] for c in reversed(s))


def brute_gc(s):
    return sum(c in "GC" for c in s) / len(s)


def brute_homopolymer(s):
    best = 0
    for i in range(len(s)):
        for j in range(i + 1, len(s) + 1):
            if len(set(s[i:j])) == 1:
                best = max(best, j - i)
    return best


def brute_heteroduplex(a, b):
    """Longest substring of a whose reverse complement is a substring of b."""
    best = 0
    for i in range(len(a)):
        for j in range(i + 1, len(a) + 1):
            if revcomp(a[i:j]) in b:
                best = max(best, j - i)
    return best


def brute_hairpin(s, min_loop):
    """Longest stem: s[i:i+k] pairs with s[j-k+1:j+1] reversed, loop >= min_loop."""
    best = 0
    L = len(s)
    for i in range(L):
        for j in range(i + 1, L):
            for k in range(1, L):
                inner_a, inner_b = i + k - 1, j - k + 1
                if inner_b - inner_a - 1 < min_loop:
                    break
                stem = s[i:i + k]
                if revcomp(stem) != s[inner_b:j + 1]:
                    break
                best = max(best, k)
    return best


def brute_filter(seqs, adapters, th):
    """First failed rule per sequence (name or None), then the greedy cross pass."""
    first = []
    for s in seqs:
        gc = brute_gc(s)
        if gc < th.gc_min or gc > th.gc_max:
            first.append("gc")
        elif brute_homopolymer(s) > th.max_homopolymer:
            first.append("homopolymer")
        elif brute_hairpin(s, th.min_hairpin_loop) > th.max_hairpin:
            first.append("hairpin")
        elif brute_heteroduplex(s, s) > th.max_heteroduplex:
            first.append("self_dimer")
        elif any(brute_heteroduplex(s, a) > th.max_heteroduplex for a in adapters if a):
            first.append("adapter")
        else:
            first.append(None)
    if th.cross_pairs:
        kept = []
        for i, s in enumerate(seqs):
            if first[i] is not None:
                continue
            if any(brute_heteroduplex(s, seqs[j]) > th.max_heteroduplex for j in kept):
                first[i] = "cross"
            else:
                kept.append(i)
    return first


# -- outer code ----------------------------------------------------------------


def brute_codewords(gf, H):
    """All d in GF(q)^n with H d = 0, by scanning the whole space."""
    m, n = H.shape
    out = []
    for d in itertools.product(range(gf.q), repeat=n):
        ok = True
        for row in H:
            acc = 0
            for h, x in zip(row, d):
                acc ^= poly_mul(int(h), x, gf.poly, gf.p)
            if acc:
                ok = False
                break
        if ok:
            out.append(d)
    return np.array(out)


def brute_ml(codewords, L):
    """Codeword maximising the product of per-symbol likelihoods (first wins ties)."""
    best, best_p = None, -1.0
    for c in codewords:
        p = float(np.prod([L[i, c[i]] for i in range(len(c))]))
        if p > best_p:
            best, best_p = c, p
    return np.asarray(best)
