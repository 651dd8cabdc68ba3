"""Time the numba kernels against the numpy fallback on an l=24 set.

    python benchmarks/bench_kernels.py [--reads 2000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from nswatermark import kernels
from nswatermark.barcode_set import build_set
from nswatermark.barcodes import CodeParams
from nswatermark.channel import IdsParams
from nswatermark.evaluate import INSERT_LEN


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reads", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--l", type=int, default=24, choices=(24, 48, 96))
    args = ap.parse_args(argv)

    p = IdsParams.smrt()
    w = np.random.default_rng(0).integers(0, 4, args.l)
    bset = build_set(CodeParams(16, 2, args.l // 4, 4, 7, 7), watermark=w).barcode_set
    dec = bset.decoder(p)
    win = dec.window
    tpl = np.ascontiguousarray(bset.templates(), np.int8)
    code = bset.code
    cands = bset.candidates().nucleotide_codes().astype(np.int8)
    adapters = np.concatenate([bset.symbols(bset.left_flank), bset.symbols(bset.consensus)]).astype(np.int8)
    ptr = np.array([0, len(bset.left_flank), adapters.size])
    t = bset.thresholds

    reads, offsets, _ = kernels.simulate_batch(tpl, 1, 0, args.reads, INSERT_LEN, p.p_i, p.p_d, p.p_s, p.max_ins)
    Ls, _, status, _ = dec.decode_batch(reads, offsets)
    active = np.asarray(status) == kernels.OK

    print(f"l={args.l} B={bset.B} reads={args.reads} window=({win.xmin},{win.xmax})")
    print(f"{'kernel':<16}{'numba s':>10}{'numpy s':>10}{'speedup':>9}")
    for name, call in (
        ("simulate_batch", lambda k: k.simulate_batch(tpl, 1, 0, args.reads, INSERT_LEN,
                                                      p.p_i, p.p_d, p.p_s, p.max_ins)),
        ("decode_batch", lambda k: k.decode_batch(reads, offsets, dec.flank, dec.consensus, dec.blocks, dec.E,
                                                  p.max_ins, win.xmin, win.xmax, kernels.CONTEXT, kernels.CONTEXT,
                                                  dec.max_n_fraction, dec.read_window, *dec.end_span)),
        ("bp_batch", lambda k: k.bp_batch(Ls, active, *code.bp_structure, 10)),
        ("chem_scan", lambda k: k.chem_scan(cands, adapters, ptr, t.gc_min, t.gc_max, t.max_homopolymer,
                                            t.max_hairpin, t.max_heteroduplex, t.min_hairpin_loop)),
    ):
        nb, npy = kernels.load("numba"), kernels.load("numpy")
        call(nb)  # compile outside the timing
        a = best_of(lambda: call(nb), args.repeat)
        b = best_of(lambda: call(npy), args.repeat)
        print(f"{name:<16}{a:>10.3f}{b:>10.3f}{b / a:>8.1f}x")


if __name__ == "__main__":
    main()
