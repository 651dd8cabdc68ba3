import functools

import numba as nb
import numpy as np

njit = functools.partial(nb.njit, cache=True, nogil=True)

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_STEP = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


# ---------------------------------------------------------------- random draws


@njit
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit
def _read_key(seed, idx):
    return _mix64(np.uint64(seed) * _GOLD + np.uint64(idx))


@njit
def _uniform(key, j):
    z = _mix64(key + np.uint64(j) * _STEP)
    return np.float64(z >> _S11) * _INV53


@njit
def keyed_uniforms(seed, idx, count):
    key = _read_key(seed, idx)
    out = np.empty(count)
    for j in range(count):
        out[j] = _uniform(key, j)
    return out


# --------------------------------------------------------------------- channel


@njit
def _transmit_core(seq, u, pi, pd, ps, I, out, pos):
    for b in range(seq.size):
        t = seq[b]
        s = 0
        while True:
            d = u[b, 2 * s]
            v = u[b, 2 * s + 1]
            if s < I:
                if d < pi:
                    k = int(v * 4.0)
                    out[pos] = 3 if k > 3 else k
                    pos += 1
                    s += 1
                    continue
                deleted = d < pi + pd
            else:
                deleted = d < pd
            if not deleted:
                if v < ps:
                    k = int(v / ps * 3.0)
                    if k > 2:
                        k = 2
                    out[pos] = (t + 1 + k) % 4
                else:
                    out[pos] = t
                pos += 1
            break
    return pos


@njit
def transmit(seq, u, pi, pd, ps, I):
    out = np.empty(seq.size * (I + 1), dtype=np.int8)
    pos = _transmit_core(seq, u, pi, pd, ps, I, out, 0)
    return out[:pos].copy()


@njit
def simulate_batch(templates, seed, start, count, insert_len, pi, pd, ps, I):
    nb_templates, lt = templates.shape
    S = 2 * (I + 1)
    ltot = lt + insert_len
    seqbuf = np.empty(ltot, dtype=np.int8)
    ubuf = np.empty((ltot, S))
    out = np.empty(count * ltot * (I + 1), dtype=np.int8)
    offsets = np.zeros(count + 1, dtype=np.int64)
    which = np.empty(count, dtype=np.int64)
    pos = 0
    for r in range(count):
        i = start + r
        key = _read_key(seed, i)
        b = i % nb_templates
        which[r] = b
        seqbuf[:lt] = templates[b]
        for j in range(insert_len):
            k = int(_uniform(key, j) * 4.0)
            seqbuf[lt + j] = 3 if k > 3 else k
        for p in range(ltot):
            for s in range(S):
                ubuf[p, s] = _uniform(key, insert_len + p * S + s)
        pos = _transmit_core(seqbuf, ubuf, pi, pd, ps, I, out, pos)
        offsets[r + 1] = pos
    return out[:pos].copy(), offsets, which


# ---------------------------------------------------------------- inner decoder


@njit
def _emit(E, r, end, mu, t):
    if mu == 0:
        return E[0, 0]
    c = r[end - 1]
    if c == 4:
        return E[mu, 2]
    if c == t:
        return E[mu, 1]
    return E[mu, 0]


@njit
def _nuc_forward(fp, lo_p, fn, lo_n, r, nr, pos, t, E, I):
    """One nucleotide step forward: drift x- before base ``pos`` -> x after."""
    for ix in range(fn.size):
        x = lo_n + ix
        end = pos + 1 + x
        acc = 0.0
        if end >= 0 and end <= nr:
            for xm in range(x - I, x + 2):
                j = xm - lo_p
                if j < 0 or j >= fp.size:
                    continue
                fv = fp[j]
                if fv == 0.0 or pos + xm < 0:
                    continue
                acc += fv * _emit(E, r, end, x - xm + 1, t)
        fn[ix] = acc


@njit
def _nuc_backward(gn, lo_n, gp, lo_p, r, nr, pos, t, E, I):
    """One nucleotide step backward: drift x+ after base ``pos`` -> x before."""
    for ix in range(gp.size):
        x = lo_p + ix
        start = pos + x
        acc = 0.0
        if start >= 0 and start <= nr:
            for xp in range(x - 1, x + I + 1):
                j = xp - lo_n
                if j < 0 or j >= gn.size:
                    continue
                gv = gn[j]
                end = pos + 1 + xp
                if gv == 0.0 or end > nr:
                    continue
                acc += gv * _emit(E, r, end, xp - x + 1, t)
        gp[ix] = acc


@njit
def _block_tensor(r, nr, lf, blocks, E, I, xmin, X, T, fa, fb):
    """Banded ``T[s, x-, d, a]`` with local drift ``d = x+ - x-`` offset by u.

    ``fa``/``fb`` are (u(I+1)+1) x q scratch.  The hypotheses a run in the
    innermost loop so it vectorises.
    """
    n, q, u = blocks.shape
    dlo = -u
    bt = np.empty((n, u, q), dtype=np.int8)
    for s in range(n):
        for a in range(q):
            for y in range(u):
                bt[s, y, a] = blocks[s, a, y]
    for s in range(n):
        P = lf + s * u
        for ix in range(X):
            xm = xmin + ix
            cur = fa
            nxt = fb
            cur[-dlo, :] = 1.0
            for y in range(u):
                pos = P + xm + y
                sym = bt[s, y]
                # reachable local drift after y+1 bases
                for d in range(-(y + 1), (y + 1) * I + 1):
                    row = nxt[d - dlo]
                    row[:] = 0.0
                    end = pos + 1 + d
                    if end < 0 or end > nr:
                        continue
                    lo = d - I
                    if lo < -y:
                        lo = -y
                    hi = d + 1
                    if hi > y * I:
                        hi = y * I
                    for dm in range(lo, hi + 1):
                        if pos + dm < 0:
                            continue
                        src = cur[dm - dlo]
                        mu = d - dm + 1
                        if mu == 0:
                            e = E[0, 0]
                            for a in range(q):
                                row[a] += src[a] * e
                            continue
                        c = r[end - 1]
                        if c == 4:
                            e = E[mu, 2]
                            for a in range(q):
                                row[a] += src[a] * e
                            continue
                        e1 = E[mu, 1]
                        e0 = E[mu, 0]
                        for a in range(q):
                            row[a] += src[a] * (e1 if sym[a] == c else e0)
                tmp = cur
                cur = nxt
                nxt = tmp
            # after u bases every local drift -u..uI has been written
            T[s, ix] = cur


@njit
def _decode_core(r, nr, flank, cons, blocks, E, I, xmin, xmax,
                 left_mode, left_point, right_mode, right_point, max_n_frac, end_lo, end_hi,
                 T, S, F, logF, B, logB, L, logL, fa, fb, ga, gb):
    n, q, u = blocks.shape
    lf = flank.size
    lc = cons.size
    X = xmax - xmin + 1
    nN = 0
    for i in range(nr):
        if r[i] == 4:
            nN += 1
    if nN > max_n_frac * nr:
        return 3, -np.inf

    # left boundary F_1
    F1 = F[0]
    F1[:] = 0.0
    if left_mode == 2:
        if left_point >= xmin and left_point <= xmax:
            F1[left_point - xmin] = 1.0
    elif left_mode == 1:
        for ix in range(X):
            p = lf + xmin + ix
            if p >= 0 and p <= nr:
                F1[ix] = 1.0
    else:
        F1[-xmin] = 1.0
        for j in range(lf):
            _nuc_forward(F1, xmin, ga[:X], xmin, r, nr, j, flank[j], E, I)
            F1[:] = ga[:X]
    tot = F1.sum()
    if not tot > 0.0:
        return 1, -np.inf
    F1 /= tot
    logF[0] = np.log(tot)

    # right boundary B_{n+1}
    pC = lf + n * u
    Bn = B[n]
    Bn[:] = 0.0
    if right_mode == 2:
        if right_point >= xmin and right_point <= xmax:
            Bn[right_point - xmin] = 1.0
    elif right_mode == 1 or lc == 0:
        for ix in range(X):
            p = pC + xmin + ix
            if p >= 0 and p <= nr:
                Bn[ix] = 1.0
    else:
        # flat start over end_lo..end_hi, carried on a range that also covers the window
        wlo = min(xmin, end_lo)
        W = max(xmax, end_hi) - wlo + 1
        g = ga[:W]
        g2 = gb[:W]
        pD = pC + lc
        for ix in range(W):
            d = wlo + ix
            p = pD + d
            g[ix] = 1.0 if (p >= 0 and p <= nr and d >= end_lo and d <= end_hi) else 0.0
        for j in range(lc - 1, -1, -1):
            _nuc_backward(g, wlo, g2, wlo, r, nr, pC + j, cons[j], E, I)
            g[:] = g2
        for ix in range(X):
            Bn[ix] = g[ix + xmin - wlo]
    tot = Bn.sum()
    if not tot > 0.0:
        return 1, -np.inf
    Bn /= tot
    logB[n] = np.log(tot)

    _block_tensor(r, nr, lf, blocks, E, I, xmin, X, T, fa, fb)

    invq = 1.0 / q
    D = T.shape[2]
    dlo = -u
    # hypothesis-marginal transitions, shared by both passes
    for s in range(n):
        for ix in range(X):
            for dd in range(D):
                acc = 0.0
                jx = ix + dd + dlo
                if jx >= 0 and jx < X:
                    for a in range(q):
                        acc += T[s, ix, dd, a]
                S[s, ix, dd] = acc
    for s in range(n):
        Fn = F[s + 1]
        Fn[:] = 0.0
        for ix in range(X):
            fv = F[s, ix]
            if fv == 0.0:
                continue
            for dd in range(D):
                jx = ix + dd + dlo
                if jx >= 0 and jx < X:
                    Fn[jx] += fv * S[s, ix, dd]
        tot = Fn.sum() * invq
        if not tot > 0.0:
            return 2, -np.inf
        for jx in range(X):
            Fn[jx] = Fn[jx] * invq / tot
        logF[s + 1] = logF[s] + np.log(tot)

    for s in range(n - 1, -1, -1):
        Bs = B[s]
        for ix in range(X):
            acc = 0.0
            for dd in range(D):
                jx = ix + dd + dlo
                if jx >= 0 and jx < X:
                    acc += S[s, ix, dd] * B[s + 1, jx]
            Bs[ix] = acc
        tot = Bs.sum() * invq
        if not tot > 0.0:
            return 2, -np.inf
        for ix in range(X):
            Bs[ix] = Bs[ix] * invq / tot
        logB[s] = logB[s + 1] + np.log(tot)

    inner = fa[0]
    for s in range(n):
        Ls = L[s]
        Ls[:] = 0.0
        for ix in range(X):
            fv = F[s, ix]
            if fv == 0.0:
                continue
            inner[:] = 0.0
            for dd in range(D):
                jx = ix + dd + dlo
                if jx >= 0 and jx < X:
                    bv = B[s + 1, jx]
                    for a in range(q):
                        inner[a] += T[s, ix, dd, a] * bv
            for a in range(q):
                Ls[a] += fv * inner[a]
        tot = 0.0
        for a in range(q):
            tot += Ls[a]
        if not tot > 0.0:
            return 2, -np.inf
        for a in range(q):
            Ls[a] /= tot
        logL[s] = np.log(tot) + logF[s] + logB[s + 1]

    tot = 0.0
    for ix in range(X):
        tot += F[n, ix] * B[n, ix]
    return 0, np.log(tot) + logF[n] + logB[n]


@njit
def _alloc(n, q, u, I, xmin, xmax, end_lo, end_hi):
    X = xmax - xmin + 1
    D = u * (I + 1) + 1
    W = max(xmax, end_hi) - min(xmin, end_lo) + 1
    T = np.zeros((n, X, D, q))
    S = np.zeros((n, X, D))
    F = np.zeros((n + 1, X))
    B = np.zeros((n + 1, X))
    logF = np.zeros(n + 1)
    logB = np.zeros(n + 1)
    L = np.zeros((n, q))
    logL = np.zeros(n)
    return T, S, F, logF, B, logB, L, logL, np.zeros((D, q)), np.zeros((D, q)), np.zeros(W), np.zeros(W)


@njit
def decode_one(r, flank, cons, blocks, E, I, xmin, xmax,
               left_mode, left_point, right_mode, right_point, max_n_frac, window, end_lo, end_hi):
    n, q, u = blocks.shape
    T, S, F, logF, B, logB, L, logL, fa, fb, ga, gb = _alloc(n, q, u, I, xmin, xmax, end_lo, end_hi)
    nr = min(r.size, window)
    status, loglik = _decode_core(r, nr, flank, cons, blocks, E, I, xmin, xmax,
                                  left_mode, left_point, right_mode, right_point, max_n_frac,
                                  end_lo, end_hi, T, S, F, logF, B, logB, L, logL, fa, fb, ga, gb)
    return status, loglik, _dense(T, u), F, logF, B, logB, L, logL


@njit
def _dense(T, u):
    """Banded ``T[s, x-, d, a]`` back to ``T[s, a, x-, x+]``."""
    n, X, D, q = T.shape
    out = np.zeros((n, q, X, X))
    for s in range(n):
        for ix in range(X):
            for dd in range(D):
                jx = ix + dd - u
                if jx >= 0 and jx < X:
                    for a in range(q):
                        out[s, a, ix, jx] = T[s, ix, dd, a]
    return out


@njit
def _argmax(v):
    best = 0
    for i in range(1, v.size):
        if v[i] > v[best]:
            best = i
    return best


@njit
def decode_batch(reads, offsets, flank, cons, blocks, E, I, xmin, xmax,
                 left_mode, right_mode, max_n_frac, window, end_lo, end_hi):
    n, q, u = blocks.shape
    R = offsets.size - 1
    Ls = np.zeros((R, n, q))
    loglik = np.full(R, -np.inf)
    status = np.zeros(R, dtype=np.int8)
    drift = np.zeros((R, 2), dtype=np.int64)
    T, S, F, logF, B, logB, L, logL, fa, fb, ga, gb = _alloc(n, q, u, I, xmin, xmax, end_lo, end_hi)
    for i in range(R):
        r = reads[offsets[i]:offsets[i + 1]]
        nr = min(r.size, window)
        st, ll = _decode_core(r, nr, flank, cons, blocks, E, I, xmin, xmax,
                              left_mode, 0, right_mode, 0, max_n_frac, end_lo, end_hi,
                              T, S, F, logF, B, logB, L, logL, fa, fb, ga, gb)
        status[i] = st
        loglik[i] = ll
        if st == 0:
            Ls[i] = L
            drift[i, 0] = xmin + _argmax(F[0])
            drift[i, 1] = xmin + _argmax(B[n])
    return Ls, loglik, status, drift


# ------------------------------------------------------------------ BP decoder


@njit
def _wht(v):
    q = v.size
    h = 1
    while h < q:
        for i in range(0, q, 2 * h):
            for j in range(i, i + h):
                x = v[j]
                y = v[j + h]
                v[j] = x + y
                v[j + h] = x - y
        h *= 2


@njit
def _normalize(v):
    tot = v.sum()
    if tot > 0.0:
        v /= tot
    else:
        v[:] = 1.0 / v.size


@njit
def _syndrome_ok(hard, chk_ptr, chk_var, chk_coef, mul):
    m = chk_ptr.size - 1
    for c in range(m):
        acc = 0
        for e in range(chk_ptr[c], chk_ptr[c + 1]):
            acc ^= mul[chk_coef[e], hard[chk_var[e]]]
        if acc != 0:
            return False
    return True


@njit
def _hard_decide(P, hard):
    for v in range(P.shape[0]):
        hard[v] = _argmax(P[v])


@njit
def _bp_core(L, chk_ptr, chk_var, chk_coef, var_ptr, var_edge, mul, max_iters,
             hard, vc, cv, W, post, tmp):
    n, q = L.shape
    m = chk_ptr.size - 1
    _hard_decide(L, hard)
    if _syndrome_ok(hard, chk_ptr, chk_var, chk_coef, mul):
        return 0, True
    cv[:] = 1.0 / q
    for it in range(1, max_iters + 1):
        for v in range(n):
            for k in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edge[k]
                for a in range(q):
                    tmp[a] = L[v, a]
                for k2 in range(var_ptr[v], var_ptr[v + 1]):
                    e2 = var_edge[k2]
                    if e2 != e:
                        for a in range(q):
                            tmp[a] *= cv[e2, a]
                _normalize(tmp)
                vc[e] = tmp
        for c in range(m):
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                h = chk_coef[e]
                for a in range(q):
                    W[e, mul[h, a]] = vc[e, a]
                _wht(W[e])
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                for a in range(q):
                    tmp[a] = 1.0
                for e2 in range(chk_ptr[c], chk_ptr[c + 1]):
                    if e2 != e:
                        for a in range(q):
                            tmp[a] *= W[e2, a]
                _wht(tmp)
                h = chk_coef[e]
                for a in range(q):
                    val = tmp[mul[h, a]]
                    cv[e, a] = val if val > 0.0 else 0.0
                _normalize(cv[e])
        for v in range(n):
            for a in range(q):
                post[v, a] = L[v, a]
            for k in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edge[k]
                for a in range(q):
                    post[v, a] *= cv[e, a]
            _normalize(post[v])
        _hard_decide(post, hard)
        if _syndrome_ok(hard, chk_ptr, chk_var, chk_coef, mul):
            return it, True
    return max_iters, False


@njit
def bp_decode(L, chk_ptr, chk_var, chk_coef, var_ptr, var_edge, mul, max_iters):
    n, q = L.shape
    ne = chk_var.size
    hard = np.zeros(n, dtype=np.int64)
    it, ok = _bp_core(L, chk_ptr, chk_var, chk_coef, var_ptr, var_edge, mul, max_iters,
                      hard, np.zeros((ne, q)), np.zeros((ne, q)), np.zeros((ne, q)),
                      np.zeros((n, q)), np.zeros(q))
    return hard, it, ok


@njit
def bp_batch(Ls, active, chk_ptr, chk_var, chk_coef, var_ptr, var_edge, mul, max_iters):
    R, n, q = Ls.shape
    ne = chk_var.size
    hard = np.zeros((R, n), dtype=np.int64)
    iters = np.zeros(R, dtype=np.int64)
    ok = np.zeros(R, dtype=np.bool_)
    vc = np.zeros((ne, q))
    cv = np.zeros((ne, q))
    W = np.zeros((ne, q))
    post = np.zeros((n, q))
    tmp = np.zeros(q)
    h = np.zeros(n, dtype=np.int64)
    for i in range(R):
        if not active[i]:
            continue
        it, good = _bp_core(Ls[i], chk_ptr, chk_var, chk_coef, var_ptr, var_edge, mul,
                            max_iters, h, vc, cv, W, post, tmp)
        hard[i] = h
        iters[i] = it
        ok[i] = good
    return hard, iters, ok


# ------------------------------------------------------------------- chemistry


@njit
def _max_run(s):
    best = 1 if s.size else 0
    run = 1
    for i in range(1, s.size):
        if s[i] == s[i - 1]:
            run += 1
            if run > best:
                best = run
        else:
            run = 1
    return best


@njit
def _hairpin(s, min_loop):
    L = s.size
    best = 0
    for i in range(L):
        for j in range(L - 1, i, -1):
            k = 0
            while True:
                a = i + k
                b = j - k
                if b - a - 1 < min_loop or s[a] + s[b] != 3:
                    break
                k += 1
            if k > best:
                best = k
    return best


@njit
def _heteroduplex(a, b, prev, cur):
    la = a.size
    lb = b.size
    best = 0
    prev[: lb + 1] = 0
    for i in range(la):
        cur[0] = 0
        for j in range(lb):
            if a[i] + b[lb - 1 - j] == 3:
                v = prev[j] + 1
                cur[j + 1] = v
                if v > best:
                    best = v
            else:
                cur[j + 1] = 0
        prev[: lb + 1] = cur[: lb + 1]
    return best


@njit
def chem_scan(nuc, adapters, adapter_ptr, gc_min, gc_max, max_hp, max_hairpin, max_het, min_loop):
    M, l = nuc.shape
    rule = np.zeros(M, dtype=np.int8)
    value = np.zeros(M)
    width = l
    for k in range(adapter_ptr.size - 1):
        w = adapter_ptr[k + 1] - adapter_ptr[k]
        if w > width:
            width = w
    prev = np.zeros(width + 1, dtype=np.int64)
    cur = np.zeros(width + 1, dtype=np.int64)
    for i in range(M):
        s = nuc[i]
        gc = 0
        for c in s:
            if c == 1 or c == 2:
                gc += 1
        frac = gc / l
        if frac < gc_min or frac > gc_max:
            rule[i] = 1
            value[i] = frac
            continue
        hp = _max_run(s)
        if hp > max_hp:
            rule[i] = 2
            value[i] = hp
            continue
        hpn = _hairpin(s, min_loop)
        if hpn > max_hairpin:
            rule[i] = 3
            value[i] = hpn
            continue
        sd = _heteroduplex(s, s, prev, cur)
        if sd > max_het:
            rule[i] = 4
            value[i] = sd
            continue
        worst = 0
        for k in range(adapter_ptr.size - 1):
            ad = adapters[adapter_ptr[k]:adapter_ptr[k + 1]]
            if ad.size == 0:
                continue
            h = _heteroduplex(s, ad, prev, cur)
            if h > worst:
                worst = h
        if worst > max_het:
            rule[i] = 5
            value[i] = worst
    return rule, value


@njit
def cross_scan(nuc, candidate, k):
    """Greedy pairwise pass: a barcode survives if none of its k-mers is the
    reverse complement of a k-mer of an already kept barcode.  Returns the
    index of the first conflicting kept barcode, or -1 when kept."""
    M, l = nuc.shape
    seen = np.full(1 << (2 * k), -1, dtype=np.int64)
    conflict = np.full(M, -1, dtype=np.int64)
    mask = (1 << (2 * k)) - 1
    for i in range(M):
        if not candidate[i]:
            continue
        code = 0
        hit = -1
        for j in range(l):
            code = ((code << 2) | nuc[i, j]) & mask
            if j >= k - 1 and seen[code] >= 0:
                if hit < 0 or seen[code] < hit:
                    hit = seen[code]
        if hit >= 0:
            conflict[i] = hit
            continue
        # register reverse-complement k-mers of the kept barcode
        code = 0
        for j in range(l - 1, -1, -1):
            code = ((code << 2) | (3 - nuc[i, j])) & mask
            if l - 1 - j >= k - 1 and seen[code] < 0:
                seen[code] = i
    return conflict


@njit
def pair_heteroduplex(nuc, other):
    """Heteroduplex length of row i against row other[i] (0 where other < 0)."""
    M, l = nuc.shape
    out = np.zeros(M, dtype=np.int64)
    prev = np.zeros(l + 1, dtype=np.int64)
    cur = np.zeros(l + 1, dtype=np.int64)
    for i in range(M):
        j = other[i]
        if j >= 0:
            out[i] = _heteroduplex(nuc[i], nuc[j], prev, cur)
    return out
