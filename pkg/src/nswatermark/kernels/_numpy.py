import numpy as np

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_STEP = np.uint64(0xD1B54A32D192ED03)
_INV53 = 1.0 / 9007199254740992.0


# ---------------------------------------------------------------- random draws


def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _read_keys(seed, idx):
    with np.errstate(over="ignore"):
        return _mix64(np.asarray([seed], dtype=np.uint64) * _GOLD + np.asarray(idx, dtype=np.uint64))


def _uniform_matrix(seed, idx, count):
    keys = _read_keys(seed, idx)
    j = np.arange(count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix64(keys[:, None] + j[None, :] * _STEP)
    return (z >> np.uint64(11)).astype(np.float64) * _INV53


def keyed_uniforms(seed, idx, count):
    return _uniform_matrix(seed, np.array([idx]), count)[0]


# --------------------------------------------------------------------- channel


def transmit(seq, u, pi, pd, ps, I):
    seq = np.asarray(seq, dtype=np.int8)
    L = seq.size
    d = u[:, 0::2]
    v = u[:, 1::2]
    ins = d[:, :I] < pi
    # number of leading insertions per base
    k = np.argmin(np.concatenate([ins, np.zeros((L, 1), bool)], axis=1), axis=1)
    rows = np.arange(L)
    dk = d[rows, k]
    vk = v[rows, k]
    deleted = np.where(k < I, dk < pi + pd, dk < pd)
    sub = vk < ps
    offset = np.minimum((vk / ps * 3.0).astype(np.int64) if ps > 0 else np.zeros(L, np.int64), 2)
    final = np.where(sub, (seq.astype(np.int64) + 1 + offset) % 4, seq)
    slots = np.minimum((v * 4.0).astype(np.int64), 3)
    slots[rows, k] = final
    cols = np.arange(I + 1)[None, :]
    emit = (cols < k[:, None]) | ((cols == k[:, None]) & ~deleted[:, None])
    return slots[emit].astype(np.int8)


def simulate_batch(templates, seed, start, count, insert_len, pi, pd, ps, I):
    nb_templates, lt = templates.shape
    S = 2 * (I + 1)
    ltot = lt + insert_len
    idx = np.arange(start, start + count)
    which = idx % nb_templates
    out = []
    offsets = np.zeros(count + 1, dtype=np.int64)
    for r in range(count):
        u = _uniform_matrix(seed, idx[r:r + 1], insert_len + ltot * S)[0]
        insert = np.minimum((u[:insert_len] * 4.0).astype(np.int64), 3)
        seq = np.concatenate([templates[which[r]], insert.astype(np.int8)])
        rx = transmit(seq, u[insert_len:].reshape(ltot, S), pi, pd, ps, I)
        out.append(rx)
        offsets[r + 1] = offsets[r] + rx.size
    reads = np.concatenate(out) if out else np.zeros(0, np.int8)
    return reads.astype(np.int8), offsets, which.astype(np.int64)


# ---------------------------------------------------------------- inner decoder


def _emission_lookup(E, r, nr, end, mu, t):
    """Vectorised emission for received r[end-mu:end] given sent symbol t."""
    last = r[np.clip(end - 1, 0, max(nr - 1, 0))] if nr else np.zeros_like(end)
    kind = np.where(last == 4, 2, np.where(last == t, 1, 0))
    e = E[np.clip(mu, 0, E.shape[0] - 1), kind]
    valid = (end >= 0) & (end <= nr) & (end - mu >= 0) & (mu >= 0) & (mu < E.shape[0])
    return np.where(valid, e, 0.0)


def _nuc_pass_forward(f, lo, r, nr, pos, t, E, I):
    """Nucleotide step forward on a window starting at drift ``lo``."""
    size = f.size
    x = lo + np.arange(size)
    out = np.zeros(size)
    for o in range(-1, I + 1):  # x = x- + o
        src = np.arange(size) - o
        ok = (src >= 0) & (src < size)
        fv = np.where(ok, f[np.clip(src, 0, size - 1)], 0.0)
        end = pos + 1 + x
        out += fv * _emission_lookup(E, r, nr, end, np.full(size, o + 1), t)
    return out


def _nuc_pass_backward(g, lo, r, nr, pos, t, E, I):
    size = g.size
    x = lo + np.arange(size)
    out = np.zeros(size)
    for o in range(-1, I + 1):  # x+ = x + o
        dst = np.arange(size) + o
        ok = (dst >= 0) & (dst < size)
        gv = np.where(ok, g[np.clip(dst, 0, size - 1)], 0.0)
        end = pos + 1 + x + o
        start_ok = pos + x >= 0
        out += gv * np.where(start_ok, _emission_lookup(E, r, nr, end, np.full(size, o + 1), t), 0.0)
    return out


def _block_tensor(r, nr, lf, blocks, E, I, xmin, X):
    n, q, u = blocks.shape
    dlo, dhi = -u, u * I
    D = dhi - dlo + 1
    d = dlo + np.arange(D)
    xm = xmin + np.arange(X)
    T = np.zeros((n, q, X, X))
    for s in range(n):
        P = lf + s * u
        f = np.zeros((q, X, D))
        f[:, :, -dlo] = 1.0
        for y in range(u):
            t = blocks[s, :, y][:, None, None]
            pos = P + xm[:, None] + y
            new = np.zeros_like(f)
            for o in range(-1, I + 1):
                src = np.arange(D) - o
                ok = (src >= 0) & (src < D)
                fv = np.where(ok[None, None, :], f[:, :, np.clip(src, 0, D - 1)], 0.0)
                end = pos + 1 + d[None, :]
                mu = o + 1
                last = r[np.clip(end - 1, 0, max(nr - 1, 0))] if nr else np.zeros_like(end)
                kind = np.where(last[None] == 4, 2, np.where(last[None] == t, 1, 0))
                e = E[mu, kind] if mu > 0 else np.full(kind.shape, E[0, 0])
                valid = (end >= 0) & (end <= nr) & (end - mu >= 0)
                new += fv * np.where(valid[None], e, 0.0)
            f = new
        # scatter the local drift d = x+ - x- into the outer window
        jx = np.arange(X)
        delta = jx[None, :] - np.arange(X)[:, None]
        inside = (delta >= dlo) & (delta <= dhi)
        idx = np.clip(delta - dlo, 0, D - 1)
        gathered = f[:, np.arange(X)[:, None], idx]
        T[s] = np.where(inside[None], gathered, 0.0)
    return T


def decode_one(r, flank, cons, blocks, E, I, xmin, xmax,
               left_mode, left_point, right_mode, right_point, max_n_frac, window, end_lo, end_hi):
    r = np.asarray(r, dtype=np.int8)
    n, q, u = blocks.shape
    lf, lc = flank.size, cons.size
    X = xmax - xmin + 1
    nr = min(r.size, window)
    r = r[:nr]
    T = np.zeros((n, q, X, X))
    F = np.zeros((n + 1, X))
    B = np.zeros((n + 1, X))
    logF = np.zeros(n + 1)
    logB = np.zeros(n + 1)
    L = np.zeros((n, q))
    logL = np.zeros(n)

    def out(status, ll):
        return status, ll, T, F, logF, B, logB, L, logL

    if np.count_nonzero(r == 4) > max_n_frac * nr:
        return out(3, -np.inf)

    xs = xmin + np.arange(X)
    if left_mode == 2:
        if xmin <= left_point <= xmax:
            F[0, left_point - xmin] = 1.0
    elif left_mode == 1:
        F[0] = ((lf + xs >= 0) & (lf + xs <= nr)).astype(float)
    else:
        f = np.zeros(X)
        f[-xmin] = 1.0
        for j in range(lf):
            f = _nuc_pass_forward(f, xmin, r, nr, j, flank[j], E, I)
        F[0] = f
    tot = F[0].sum()
    if not tot > 0:
        return out(1, -np.inf)
    F[0] /= tot
    logF[0] = np.log(tot)

    pC = lf + n * u
    if right_mode == 2:
        if xmin <= right_point <= xmax:
            B[n, right_point - xmin] = 1.0
    elif right_mode == 1 or lc == 0:
        B[n] = ((pC + xs >= 0) & (pC + xs <= nr)).astype(float)
    else:
        # flat start over end_lo..end_hi, carried on a range that also covers the window
        wlo = min(xmin, end_lo)
        W = max(xmax, end_hi) - wlo + 1
        d = wlo + np.arange(W)
        p = pC + lc + d
        g = ((p >= 0) & (p <= nr) & (d >= end_lo) & (d <= end_hi)).astype(float)
        for j in range(lc - 1, -1, -1):
            g = _nuc_pass_backward(g, wlo, r, nr, pC + j, cons[j], E, I)
        B[n] = g[xmin - wlo:xmin - wlo + X]
    tot = B[n].sum()
    if not tot > 0:
        return out(1, -np.inf)
    B[n] /= tot
    logB[n] = np.log(tot)

    T[:] = _block_tensor(r, nr, lf, blocks, E, I, xmin, X)
    Tsum = T.sum(axis=1) / q  # marginalise the hypothesised symbol
    for s in range(n):
        nxt = F[s] @ Tsum[s]
        tot = nxt.sum()
        if not tot > 0:
            return out(2, -np.inf)
        F[s + 1] = nxt / tot
        logF[s + 1] = logF[s] + np.log(tot)
    for s in range(n - 1, -1, -1):
        prv = Tsum[s] @ B[s + 1]
        tot = prv.sum()
        if not tot > 0:
            return out(2, -np.inf)
        B[s] = prv / tot
        logB[s] = logB[s + 1] + np.log(tot)
    for s in range(n):
        row = np.einsum("x,axy,y->a", F[s], T[s], B[s + 1])
        tot = row.sum()
        if not tot > 0:
            return out(2, -np.inf)
        L[s] = row / tot
        logL[s] = np.log(tot) + logF[s] + logB[s + 1]
    return out(0, np.log(F[n] @ B[n]) + logF[n] + logB[n])


def decode_batch(reads, offsets, flank, cons, blocks, E, I, xmin, xmax,
                 left_mode, right_mode, max_n_frac, window, end_lo, end_hi):
    n, q, u = blocks.shape
    R = offsets.size - 1
    Ls = np.zeros((R, n, q))
    loglik = np.full(R, -np.inf)
    status = np.zeros(R, dtype=np.int8)
    drift = np.zeros((R, 2), dtype=np.int64)
    for i in range(R):
        r = reads[offsets[i]:offsets[i + 1]]
        st, ll, T, F, logF, B, logB, L, logL = decode_one(
            r, flank, cons, blocks, E, I, xmin, xmax, left_mode, 0, right_mode, 0, max_n_frac, window,
            end_lo, end_hi)
        status[i] = st
        loglik[i] = ll
        if st == 0:
            Ls[i] = L
            drift[i] = (xmin + np.argmax(F[0]), xmin + np.argmax(B[n]))
    return Ls, loglik, status, drift


# ------------------------------------------------------------------ BP decoder


def _hadamard(q):
    H = np.array([[1.0]])
    while H.shape[0] < q:
        H = np.block([[H, H], [H, -H]])
    return H


def _normalize_rows(P):
    tot = P.sum(axis=-1, keepdims=True)
    uniform = np.full_like(P, 1.0 / P.shape[-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(tot > 0, P / np.where(tot > 0, tot, 1.0), uniform)


def _syndrome_ok(hard, chk_ptr, chk_var, chk_coef, mul):
    terms = mul[chk_coef, hard[chk_var]]
    for c in range(chk_ptr.size - 1):
        if np.bitwise_xor.reduce(terms[chk_ptr[c]:chk_ptr[c + 1]]) != 0:
            return False
    return True


def bp_decode(L, chk_ptr, chk_var, chk_coef, var_ptr, var_edge, mul, max_iters):
    L = np.asarray(L, dtype=np.float64)
    n, q = L.shape
    ne = chk_var.size
    Hq = _hadamard(q)
    hard = np.argmax(L, axis=1)
    if _syndrome_ok(hard, chk_ptr, chk_var, chk_coef, mul):
        return hard, 0, True
    # scatter index: y = h * a  for every edge
    scatter = mul[chk_coef][:, np.arange(q)]
    cv = np.full((ne, q), 1.0 / q)
    edge_check = np.repeat(np.arange(chk_ptr.size - 1), np.diff(chk_ptr))
    for it in range(1, max_iters + 1):
        vc = np.empty((ne, q))
        for v in range(n):
            es = var_edge[var_ptr[v]:var_ptr[v + 1]]
            for e in es:
                others = es[es != e]
                vc[e] = L[v] * np.prod(cv[others], axis=0)
        vc = _normalize_rows(vc)
        Y = np.zeros((ne, q))
        np.put_along_axis(Y, scatter, vc, axis=1)
        Wt = Y @ Hq
        new = np.empty((ne, q))
        for e in range(ne):
            c = edge_check[e]
            others = np.arange(chk_ptr[c], chk_ptr[c + 1])
            others = others[others != e]
            conv = (np.prod(Wt[others], axis=0) @ Hq) / q
            new[e] = np.maximum(conv[scatter[e]], 0.0)
        cv = _normalize_rows(new)
        post = L.copy()
        for v in range(n):
            post[v] *= np.prod(cv[var_edge[var_ptr[v]:var_ptr[v + 1]]], axis=0)
        post = _normalize_rows(post)
        hard = np.argmax(post, axis=1)
        if _syndrome_ok(hard, chk_ptr, chk_var, chk_coef, mul):
            return hard, it, True
    return hard, max_iters, False


def bp_batch(Ls, active, chk_ptr, chk_var, chk_coef, var_ptr, var_edge, mul, max_iters):
    R, n, q = Ls.shape
    hard = np.zeros((R, n), dtype=np.int64)
    iters = np.zeros(R, dtype=np.int64)
    ok = np.zeros(R, dtype=bool)
    for i in np.flatnonzero(active):
        hard[i], iters[i], ok[i] = bp_decode(Ls[i], chk_ptr, chk_var, chk_coef, var_ptr, var_edge,
                                             mul, max_iters)
    return hard, iters, ok


# ------------------------------------------------------------------- chemistry


def _max_run(s):
    if s.size == 0:
        return 0
    change = np.flatnonzero(np.diff(s) != 0)
    bounds = np.concatenate([[-1], change, [s.size - 1]])
    return int(np.diff(bounds).max())


def _hairpin(s, min_loop):
    # pair[a, b]: bases a and b are Watson-Crick complements
    L = s.size
    pair = (s[:, None] + s[None, :]) == 3
    best = 0
    for i in range(L):
        for j in range(i + 1, L):
            k = 0
            while True:
                a, b = i + k, j - k
                if b - a - 1 < min_loop or not pair[a, b]:
                    break
                k += 1
            best = max(best, k)
    return best


def _heteroduplex(a, b):
    if a.size == 0 or b.size == 0:
        return 0
    rcb = 3 - b[::-1]
    eq = a[:, None] == rcb[None, :]
    run = np.zeros(rcb.size + 1, dtype=np.int64)
    best = 0
    for i in range(a.size):
        run = np.concatenate([[0], np.where(eq[i], run[:-1] + 1, 0)])
        best = max(best, int(run.max()))
    return best


def chem_scan(nuc, adapters, adapter_ptr, gc_min, gc_max, max_hp, max_hairpin, max_het, min_loop):
    M, l = nuc.shape
    rule = np.zeros(M, dtype=np.int8)
    value = np.zeros(M)
    frac = np.isin(nuc, (1, 2)).sum(axis=1) / l
    bad = (frac < gc_min) | (frac > gc_max)
    rule[bad] = 1
    value[bad] = frac[bad]
    ads = [adapters[adapter_ptr[k]:adapter_ptr[k + 1]] for k in range(adapter_ptr.size - 1)]
    for i in np.flatnonzero(~bad):
        s = nuc[i]
        hp = _max_run(s)
        if hp > max_hp:
            rule[i], value[i] = 2, hp
            continue
        hpn = _hairpin(s, min_loop)
        if hpn > max_hairpin:
            rule[i], value[i] = 3, hpn
            continue
        sd = _heteroduplex(s, s)
        if sd > max_het:
            rule[i], value[i] = 4, sd
            continue
        worst = max([_heteroduplex(s, ad) for ad in ads], default=0)
        if worst > max_het:
            rule[i], value[i] = 5, worst
    return rule, value


def cross_scan(nuc, candidate, k):
    M, l = nuc.shape
    conflict = np.full(M, -1, dtype=np.int64)
    weights = 4 ** np.arange(k - 1, -1, -1)
    seen: dict[int, int] = {}
    windows = np.lib.stride_tricks.sliding_window_view(nuc.astype(np.int64), k, axis=1)
    codes = windows @ weights
    rc_codes = np.lib.stride_tricks.sliding_window_view(3 - nuc[:, ::-1].astype(np.int64), k, axis=1) @ weights
    for i in range(M):
        if not candidate[i]:
            continue
        hits = [seen[c] for c in codes[i].tolist() if c in seen]
        if hits:
            conflict[i] = min(hits)
            continue
        for c in rc_codes[i].tolist():
            seen.setdefault(c, i)
    return conflict


def pair_heteroduplex(nuc, other):
    out = np.zeros(len(nuc), dtype=np.int64)
    for i in np.flatnonzero(other >= 0):
        out[i] = _heteroduplex(nuc[i], nuc[other[i]])
    return out
