"""Read demultiplexing: boundary estimation, inner decoding, BP outer decoding."""

from __future__ import annotations

import itertools
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels, seqio
from .barcode_set import BarcodeSet
from .barcodes import reverse_complement
from .channel import IdsParams
from .inner import STATUS_NAMES

log = logging.getLogger(__name__)

ASSIGNED = "assigned"
DISCARDED = "discarded"
UNASSIGNABLE = "unassignable"
STATUSES = (ASSIGNED, DISCARDED, UNASSIGNABLE)

TSV_HEADER = "read_id\tstatus\tsample_id\titerations\n"


@dataclass(frozen=True)
class DemuxOptions:
    max_iters: int = 10
    try_reverse_complement: bool = False
    left_mode: str = "context"
    right_mode: str = "context"
    threads: int | None = None
    chunk_size: int = 2048

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.threads is not None and self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")

    @property
    def workers(self) -> int:
        return self.threads or os.cpu_count() or 1


@dataclass(frozen=True)
class DemuxResult:
    read_id: str
    status: str
    sample_id: str | None = None
    iterations: int | None = None
    message_index: int | None = None
    reason: str = ""
    drift_left: int | None = None
    drift_right: int | None = None
    loglik: float = float("-inf")
    strand: str = "+"

    def tsv(self) -> str:
        it = "" if self.iterations is None else str(self.iterations)
        return f"{self.read_id}\t{self.status}\t{self.sample_id or ''}\t{it}\n"


class Demultiplexer:
    def __init__(self, bset: BarcodeSet, params: IdsParams, options: DemuxOptions = DemuxOptions()):
        self.set = bset
        self.params = params
        self.options = options
        self.decoder = bset.decoder(params, left_mode=options.left_mode, right_mode=options.right_mode)
        self.bp = bset.code.bp_structure
        self.k = bset.params.k
        self.q = bset.params.q
        self._weights = self.q ** np.arange(self.k - 1, -1, -1, dtype=np.int64)

    def _pack(self, seqs: list[str]):
        """Concatenate the decoded prefix of each read as symbols."""
        w = self.decoder.read_window
        parts = [self.set.symbols(s[:w], allow_n=True) for s in seqs]
        offsets = np.zeros(len(parts) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([p.size for p in parts])
        flat = np.concatenate(parts) if parts else np.zeros(0, np.int8)
        return flat.astype(np.int8), offsets

    def _decode(self, seqs: list[str]):
        reads, offsets = self._pack(seqs)
        Ls, loglik, status, drift = self.decoder.decode_batch(reads, offsets)
        hard, iters, ok = kernels.bp_batch(Ls, status == kernels.OK, *self.bp, self.options.max_iters)
        return dict(loglik=np.asarray(loglik), status=np.asarray(status), drift=np.asarray(drift),
                    hard=np.asarray(hard), iters=np.asarray(iters), ok=np.asarray(ok))

    def demultiplex_batch(self, records) -> list[DemuxResult]:
        records = list(records)
        seqs = [r.seq for r in records]
        fwd = self._decode(seqs)
        strand = np.zeros(len(records), dtype=bool)
        res = fwd
        if self.options.try_reverse_complement and records:
            rev = self._decode([reverse_complement(s) for s in seqs])
            # keep the orientation with the larger total likelihood
            strand = rev["loglik"] > fwd["loglik"]
            res = {k: np.where(strand.reshape((-1,) + (1,) * (v.ndim - 1)), rev[k], v) for k, v in fwd.items()}
        msg = res["hard"][:, : self.k] @ self._weights
        out = []
        for i, rec in enumerate(records):
            st = int(res["status"][i])
            sgn = "-" if strand[i] else "+"
            if st != kernels.OK:
                out.append(DemuxResult(rec.id, UNASSIGNABLE, reason=STATUS_NAMES[st], strand=sgn))
                continue
            dl, dr = (int(x) for x in res["drift"][i])
            ll = float(res["loglik"][i])
            it = int(res["iters"][i])
            if not res["ok"][i]:
                out.append(DemuxResult(rec.id, DISCARDED, None, it, None, "bp_failure", dl, dr, ll, sgn))
                continue
            idx = int(msg[i])
            sample = self.set.sample_for(idx)
            if sample is None:
                out.append(DemuxResult(rec.id, DISCARDED, None, it, idx, "unused_codeword", dl, dr, ll, sgn))
            else:
                out.append(DemuxResult(rec.id, ASSIGNED, sample.sample_id, it, idx, "", dl, dr, ll, sgn))
        return out

    def demultiplex_read(self, read) -> DemuxResult:
        """``read`` is a :class:`seqio.Record` or a bare nucleotide string."""
        if isinstance(read, str):
            read = seqio.Record("read", seqio._clean(read.upper(), "read"))
        return self.demultiplex_batch([read])[0]

    def run(self, records, sink=None):
        """Demultiplex an iterable of records in chunks; results come back in input order.

        ``sink`` is called with each chunk's results.  Returns the summary.
        """
        summary = Summary()
        chunks = _chunked(records, self.options.chunk_size)
        workers = self.options.workers

        def handle(batch):
            summary.add(batch)
            if sink is not None:
                sink(batch)

        if workers == 1:
            for chunk in chunks:
                handle(self.demultiplex_batch(chunk))
            return summary
        with ThreadPoolExecutor(workers) as pool:
            pending = []
            for chunk in chunks:
                pending.append(pool.submit(self.demultiplex_batch, chunk))
                # bounded look-ahead keeps memory flat on large inputs
                if len(pending) >= 2 * workers:
                    handle(pending.pop(0).result())
            for fut in pending:
                handle(fut.result())
        return summary


def _chunked(it, size):
    it = iter(it)
    while True:
        chunk = list(itertools.islice(it, size))
        if not chunk:
            return
        yield chunk


class Summary:
    def __init__(self):
        self.counts = {s: 0 for s in STATUSES}
        self.reasons: dict[str, int] = {}
        self.invalid = 0

    def add(self, results):
        for r in results:
            self.counts[r.status] += 1
            if r.reason:
                self.reasons[r.reason] = self.reasons.get(r.reason, 0) + 1

    @property
    def reads(self) -> int:
        return sum(self.counts.values())

    def as_dict(self) -> dict:
        n = self.reads
        rates = {f"{s}_rate": (self.counts[s] / n if n else 0.0) for s in STATUSES}
        return {"reads": n, **self.counts, **rates, "invalid_records": self.invalid,
                "reasons": dict(sorted(self.reasons.items()))}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=False) + "\n"


def demultiplex_file(reads_path, bset: BarcodeSet, params: IdsParams, options: DemuxOptions = DemuxOptions(),
                     out=None, *, strict: bool = False) -> Summary:
    """Write one TSV line per read to ``out`` (a text handle) and return the summary."""
    stats: dict = {}
    if out is not None:
        out.write(TSV_HEADER)

    def sink(batch):
        if out is not None:
            out.write("".join(r.tsv() for r in batch))

    with seqio.open_text(reads_path) as fh:
        summary = Demultiplexer(bset, params, options).run(seqio.parse(fh, strict=strict, stats=stats), sink)
    summary.invalid = stats.get("invalid", 0)
    return summary
