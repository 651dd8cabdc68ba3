"""Command line interface: build, filter, simulate, demux, eval.

Options can also come from a JSON config file (``--config``): top-level keys
apply to every subcommand, a section named after the subcommand overrides
them, and flags given on the command line override both.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels, seqio
from .barcode_set import BarcodeSet, SetFormatError, build_set
from .barcodes import BarcodeError, CodeParams, from_nucleotides, to_nucleotides
from .boundary import DEFAULT_CONSENSUS, DEFAULT_LEFT_FLANK
from .channel import IdsParams, uniforms_per_base
from .chemistry import FilterError, FilterThresholds, filter_set
from .demux import DemuxOptions, demultiplex_file
from .evaluate import INSERT_LEN, pmut_grid, run_experiment, sweep, sweep_tsv
from .outer import CodeConstructionError

log = logging.getLogger("nswatermark")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# defaults live here rather than in argparse so that config files can sit
# between them and the command line
DEFAULTS = {
    "common": {"pi": 0.055, "pd": 0.055, "ps": 0.01, "max_ins": 2},
    "build": {"q": 16, "k": 2, "u": 4, "n": None, "l": None, "seed": 0, "code_seed": None, "inner_seed": None,
              "search_seed": None, "budget": 20, "mapping": "ACGT", "watermark": None,
              "left_flank": DEFAULT_LEFT_FLANK, "consensus": DEFAULT_CONSENSUS,
              "report": None, "trace": None, "out": None},
    "filter": {"input": None, "out": "-", "report": None,
               "left_flank": DEFAULT_LEFT_FLANK, "consensus": DEFAULT_CONSENSUS},
    "simulate": {"input": None, "set": None, "n": None, "seed": 0, "format": None, "out": "-",
                 "insert_len": INSERT_LEN},
    "demux": {"set": None, "reads": None, "max_iters": 10, "threads": None, "strict": False,
              "try_reverse_complement": False, "boundary": "context", "out": "-", "summary": None},
    "eval": {"set": None, "n": 100000, "seed": 0, "max_iters": 10, "threads": None, "sweep": None,
             "boundary": "context", "out": "-"},
}
THRESHOLD_DEFAULTS = {"gc_min": 0.35, "gc_max": 0.65, "max_homopolymer": 5, "max_heteroduplex": 6,
                      "max_hairpin": 6, "min_hairpin_loop": 3, "cross_pairs": True}
REQUIRED = {"build": ("out",), "filter": ("input",), "demux": ("set", "reads"), "eval": ("set",)}


def _channel_flags(p):
    g = p.add_argument_group("channel")
    g.add_argument("--pi", type=float, help="insertion probability (default 0.055)")
    g.add_argument("--pd", type=float, help="deletion probability (default 0.055)")
    g.add_argument("--ps", type=float, help="substitution probability (default 0.01)")
    g.add_argument("--max-ins", type=int, help="max insertions before each base (default 2)")


def _threshold_flags(p):
    g = p.add_argument_group("chemical filter")
    g.add_argument("--gc-min", type=float)
    g.add_argument("--gc-max", type=float)
    g.add_argument("--max-homopolymer", type=float)
    g.add_argument("--max-heteroduplex", type=float)
    g.add_argument("--max-hairpin", type=float)
    g.add_argument("--min-hairpin-loop", type=int)
    g.add_argument("--cross-pairs", dest="cross_pairs", action="store_true",
                   help="greedy barcode-vs-barcode heteroduplex pass (default)")
    g.add_argument("--no-cross-pairs", dest="cross_pairs", action="store_false",
                   help="individual checks only")
    g.add_argument("--left-flank", help="sequence left of the barcode")
    g.add_argument("--consensus", help="sequence right of the barcode")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nswatermark", description=__doc__.splitlines()[0],
                                     argument_default=argparse.SUPPRESS)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", help="more logging (repeatable)")
    parser.add_argument("--config", help="JSON file with option defaults")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("build", help="construct, optimise and filter a barcode set",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--q", type=int, help="outer field size: 4, 8 or 16 (default 16)")
    p.add_argument("--k", type=int, help="message length in GF(q) symbols (default 2)")
    p.add_argument("--n", type=int, help="outer code length")
    p.add_argument("--u", type=int, help="inner word length (default 4)")
    p.add_argument("--l", type=int, help="barcode length, n*u")
    p.add_argument("--seed", type=int, help="default for all seeds (default 0)")
    p.add_argument("--code-seed", type=int)
    p.add_argument("--inner-seed", type=int)
    p.add_argument("--search-seed", type=int)
    p.add_argument("--budget", type=int, help="watermark search restarts (default 20)")
    p.add_argument("--watermark", help="fixed watermark (ACGT or 0-3 digits); skips the search")
    p.add_argument("--mapping", help="nucleotides for symbols 0..3 (default ACGT)")
    _threshold_flags(p)
    p.add_argument("--out", help="barcode-set file to write")
    p.add_argument("--report", help="write filter rejections (TSV)")
    p.add_argument("--trace", help="write watermark search history (TSV)")

    p = sub.add_parser("filter", help="chemically filter candidate barcodes from a FASTA file",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--input", help="FASTA/FASTQ of candidate barcodes")
    _threshold_flags(p)
    p.add_argument("--out", help="FASTA of survivors (default stdout)")
    p.add_argument("--report", help="write rejections (TSV)")

    p = sub.add_parser("simulate", help="pass sequences through the IDS channel",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--input", help="FASTA of sequences to corrupt")
    p.add_argument("--set", help="instead of --input: simulate barcoded reads from a set")
    p.add_argument("--n", type=int, help="reads to simulate with --set (default B)")
    p.add_argument("--insert-len", type=int, help=f"random insert after the consensus (default {INSERT_LEN})")
    _channel_flags(p)
    p.add_argument("--seed", type=int, help="default 0")
    p.add_argument("--format", choices=("fasta", "fastq"), help="default from --out suffix")
    p.add_argument("--out", help="default stdout")

    p = sub.add_parser("demux", help="assign reads to samples", argument_default=argparse.SUPPRESS)
    p.add_argument("--set", help="barcode-set file")
    p.add_argument("--reads", help="FASTA/FASTQ reads ('-' for stdin)")
    _channel_flags(p)
    p.add_argument("--max-iters", type=int, help="BP iterations (default 10)")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p.add_argument("--strict", action="store_true", help="abort on malformed records")
    p.add_argument("--try-reverse-complement", action="store_true",
                   help="also decode the reverse complement, keep the likelier strand")
    p.add_argument("--boundary", choices=("context", "uniform"), help="boundary initialisation")
    p.add_argument("--out", help="TSV output (default stdout)")
    p.add_argument("--summary", help="JSON summary (default stderr)")

    p = sub.add_parser("eval", help="Monte Carlo read-loss and misassignment rates",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--set", help="barcode-set file")
    _channel_flags(p)
    p.add_argument("--n", type=int, help="reads per point (default 100000)")
    p.add_argument("--seed", type=int, help="default 0")
    p.add_argument("--max-iters", type=int, help="BP iterations (default 10)")
    p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    p.add_argument("--sweep", help="pmut:LO:HI:STEPS, equal insertion/deletion/substitution rates")
    p.add_argument("--boundary", choices=("context", "uniform"))
    p.add_argument("--out", help="report output (default stdout)")
    return parser


def _load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return cfg


def effective_options(ns: argparse.Namespace) -> dict:
    """Merge defaults < config file < command line for the chosen subcommand."""
    cmd = ns.command
    opts = dict(DEFAULTS["common"]) if cmd in ("simulate", "demux", "eval") else {}
    opts.update(DEFAULTS[cmd])
    if cmd in ("build", "filter"):
        opts.update(THRESHOLD_DEFAULTS)
    if getattr(ns, "config", None):
        cfg = _load_config(ns.config)
        sections = set(DEFAULTS) - {"common"}
        top = {k: v for k, v in cfg.items() if k not in sections}
        for src in (top, cfg.get(cmd, {})):
            for k, v in src.items():
                key = k.replace("-", "_")
                if key in opts:
                    opts[key] = v
                elif src is not top:
                    raise UsageError(f"unknown option {k!r} in config section {cmd!r}")
    given = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "verbose")}
    opts.update(given)
    missing = [k for k in REQUIRED.get(cmd, ()) if opts.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return opts


def _thresholds(o) -> FilterThresholds:
    try:
        return FilterThresholds(float(o["gc_min"]), float(o["gc_max"]), float(o["max_homopolymer"]),
                                float(o["max_heteroduplex"]), float(o["max_hairpin"]),
                                int(o["min_hairpin_loop"]), bool(o["cross_pairs"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _ids(o) -> IdsParams:
    try:
        return IdsParams(float(o["pi"]), float(o["pd"]), float(o["ps"]), int(o["max_ins"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _open_out(path):
    return seqio.open_text(path, "wt")


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _parse_watermark(s: str, mapping: str) -> np.ndarray:
    s = s.strip().upper()
    if set(s) <= set("0123"):
        return np.array([int(c) for c in s], dtype=np.int8)
    try:
        return from_nucleotides(s, mapping)
    except BarcodeError as exc:
        raise UsageError(f"--watermark: {exc}") from exc


# -- subcommands ---------------------------------------------------------------


def cmd_build(o) -> int:
    q, k, u = int(o["q"]), int(o["k"]), int(o["u"])
    n, l = o["n"], o["l"]
    if n is None and l is None:
        raise UsageError("give --n or --l")
    if l is not None and l % u:
        raise UsageError(f"--l {l} is not a multiple of --u {u}")
    if n is None:
        n = l // u
    if l is not None and n * u != l:
        raise UsageError(f"inconsistent lengths: n*u = {n * u} but --l {l}")
    seed = int(o["seed"])
    seeds = {name: seed if o[name] is None else int(o[name]) for name in ("code_seed", "inner_seed", "search_seed")}
    try:
        params = CodeParams(q, k, int(n), u, seeds["code_seed"], seeds["inner_seed"])
    except BarcodeError as exc:
        raise UsageError(str(exc)) from exc
    if int(o["budget"]) < 0:
        raise UsageError("--budget must be >= 0")
    wm = _parse_watermark(o["watermark"], o["mapping"]) if o["watermark"] else None
    if wm is not None and wm.size != params.l:
        raise UsageError(f"--watermark has {wm.size} symbols, need {params.l}")
    for name in ("left_flank", "consensus"):
        if set(str(o[name]).upper()) - set("ACGT"):
            raise UsageError(f"--{name.replace('_', '-')} must be ACGT")
    rep = build_set(params, left_flank=o["left_flank"].upper(), consensus=o["consensus"].upper(),
                    thresholds=_thresholds(o), mapping=o["mapping"], watermark=wm,
                    search_seed=seeds["search_seed"], budget=int(o["budget"]))
    summary = rep.summary()
    comments = {"built_by": f"nswatermark {__version__}", **summary}
    rep.barcode_set.save(o["out"], comments)
    if o["report"]:
        _write(o["report"], rep.filtering.report_tsv())
    if o["trace"] and rep.search is not None:
        _write(o["trace"], rep.search.trace_tsv())
    for key, v in summary.items():
        print(f"{key}\t{v}")
    return EXIT_OK


def cmd_filter(o) -> int:
    stats: dict = {}
    recs = list(seqio.read(o["input"], strict=True, stats=stats))
    if not recs:
        raise ValueError("no candidate barcodes in input")
    lengths = {len(r.seq) for r in recs}
    if len(lengths) != 1:
        raise ValueError("candidate barcodes must all have the same length")
    if any("N" in r.seq for r in recs):
        raise ValueError("candidate barcodes must be ACGT only")
    nuc = np.stack([from_nucleotides(r.seq) for r in recs])
    res = filter_set(nuc, (o["left_flank"].upper(), o["consensus"].upper()), _thresholds(o))
    with _open_out(o["out"]) as fh:
        for i in res.survivors:
            fh.write(seqio.format_fasta(recs[i]))
    if o["report"]:
        report = res.report_tsv().splitlines()
        head, rows = report[0], report[1:]
        lines = ["id\t" + head] + [f"{recs[int(r.split(chr(9))[0])].id}\t{r}" for r in rows]
        _write(o["report"], "\n".join(lines) + "\n")
    print(f"candidates\t{len(recs)}\nsurvivors\t{res.B}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(o) -> int:
    params = _ids(o)
    seed = int(o["seed"])
    if seed < 0:
        raise UsageError("--seed must be >= 0")
    if (o["input"] is None) == (o["set"] is None):
        raise UsageError("give exactly one of --input or --set")
    fmt = o["format"] or seqio.sniff_format(o["out"] if o["out"] != "-" else "x.fa")
    fmt_rec = seqio.format_fastq if fmt == "fastq" else seqio.format_fasta
    I = params.max_ins
    with _open_out(o["out"]) as fh:
        if o["set"] is not None:
            bset = BarcodeSet.load(o["set"])
            N = bset.B if o["n"] is None else int(o["n"])
            if N < 0 or int(o["insert_len"]) < 0:
                raise UsageError("--n and --insert-len must be >= 0")
            reads, offsets, which = kernels.simulate_batch(
                np.ascontiguousarray(bset.templates(), np.int8), seed, 0, N, int(o["insert_len"]),
                params.p_i, params.p_d, params.p_s, I)
            for i in range(N):
                s = bset.samples[int(which[i])]
                seq = to_nucleotides(reads[offsets[i]:offsets[i + 1]], bset.mapping)
                desc = f"sample={s.sample_id} index={s.index} seed={seed}"
                fh.write(fmt_rec(seqio.Record(f"read{i}", seq, None, desc)))
        else:
            for i, rec in enumerate(seqio.read(o["input"], strict=True)):
                if "N" in rec.seq:
                    raise ValueError(f"{rec.id}: input sequences must be ACGT only")
                sym = from_nucleotides(rec.seq)
                u = kernels.keyed_uniforms(seed, i, sym.size * uniforms_per_base(I)).reshape(sym.size, -1)
                out = kernels.transmit(sym, u, params.p_i, params.p_d, params.p_s, I)
                desc = f"source={rec.id} seed={seed} index={i}"
                fh.write(fmt_rec(seqio.Record(rec.id, to_nucleotides(out), None, desc)))
    return EXIT_OK


def _mode(o):
    return o["boundary"]


def cmd_demux(o) -> int:
    bset = BarcodeSet.load(o["set"])
    params = _ids(o)
    try:
        opts = DemuxOptions(int(o["max_iters"]), bool(o["try_reverse_complement"]), _mode(o), _mode(o),
                            None if o["threads"] is None else int(o["threads"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    with _open_out(o["out"]) as fh:
        summary = demultiplex_file(o["reads"], bset, params, opts, fh, strict=bool(o["strict"]))
    text = summary.to_json()
    if o["summary"]:
        Path(o["summary"]).write_text(text, encoding="utf-8")
    else:
        sys.stderr.write(text)
    return EXIT_OK


def cmd_eval(o) -> int:
    bset = BarcodeSet.load(o["set"])
    N, seed = int(o["n"]), int(o["seed"])
    if N < 1 or seed < 0:
        raise UsageError("--n must be >= 1 and --seed >= 0")
    threads = None if o["threads"] is None else int(o["threads"])
    kw = dict(threads=threads, left_mode=_mode(o), right_mode=_mode(o))
    if o["sweep"]:
        parts = str(o["sweep"]).split(":")
        if len(parts) != 4 or parts[0] != "pmut":
            raise UsageError("--sweep must look like pmut:LO:HI:STEPS")
        try:
            lo, hi, steps = float(parts[1]), float(parts[2]), int(parts[3])
            grid = pmut_grid(lo, hi, steps)
        except ValueError as exc:
            raise UsageError(f"--sweep: {exc}") from exc
        if not 0 <= lo <= hi or 2 * hi / 3 >= 1:
            raise UsageError("--sweep range must satisfy 0 <= LO <= HI < 1.5")
        reports = sweep(bset, grid, N, seed, int(o["max_iters"]), int(o["max_ins"]), **kw)
        text = sweep_tsv(reports)
    else:
        rep = run_experiment(bset, _ids(o), N, seed, int(o["max_iters"]), **kw)
        text = rep.to_text()
    _write(o["out"], text)
    return EXIT_OK


COMMANDS = {"build": cmd_build, "filter": cmd_filter, "simulate": cmd_simulate,
            "demux": cmd_demux, "eval": cmd_eval}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(getattr(ns, "verbose", 0) or 0, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = effective_options(ns)
        print("effective config: " + json.dumps({"command": ns.command, **opts}, sort_keys=True),
              file=sys.stderr)
        return COMMANDS[ns.command](opts)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"nswatermark: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, SetFormatError, FilterError, CodeConstructionError, BarcodeError,
            seqio.ParseError, ValueError) as exc:
        print(f"nswatermark: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
