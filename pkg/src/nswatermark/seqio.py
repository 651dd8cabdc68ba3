"""Minimal FASTA/FASTQ reading and writing."""

from __future__ import annotations

import contextlib
import gzip
import io
import logging
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

log = logging.getLogger(__name__)

# IUPAC ambiguity codes are read as N
_AMBIGUOUS = "RYSWKMBDHVN"
_TRANSLATE = str.maketrans(_AMBIGUOUS + _AMBIGUOUS.lower() + "acgt", "N" * 2 * len(_AMBIGUOUS) + "ACGT")
_VALID = re.compile(r"[ACGTN]*")


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class Record:
    id: str
    seq: str
    qual: str | None = None
    description: str = ""


def open_text(path, mode: str = "rt"):
    """Context manager over a text file; ``-`` is stdin/stdout (left open on exit)."""
    path = str(path)
    if path == "-":
        return contextlib.nullcontext(sys.stdin if "r" in mode else sys.stdout)
    if path.endswith(".gz"):
        return gzip.open(path, mode, encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def _clean(seq: str, where: str) -> str:
    s = seq.translate(_TRANSLATE)
    if not _VALID.fullmatch(s):
        bad = next(c for c in s if c not in "ACGTN")
        raise ParseError(f"{where}: invalid sequence character {bad!r}")
    return s


def _header(line: str):
    head = line[1:].strip()
    if not head:
        raise ParseError("empty record header")
    rid, _, desc = head.partition(" ")
    return rid, desc


def parse(handle, *, strict: bool = False, stats: dict | None = None) -> Iterator[Record]:
    """Yield records from FASTA or FASTQ text (detected per record).

    Malformed records are skipped and counted in ``stats['invalid']`` unless
    ``strict`` is set, in which case :class:`ParseError` is raised.
    """
    if stats is None:
        stats = {}
    stats.setdefault("records", 0)
    stats.setdefault("invalid", 0)
    lines = iter(handle)
    pending = None
    lineno = 0

    def nxt():
        nonlocal lineno
        lineno += 1
        return next(lines).rstrip("\r\n")

    def fail(msg):
        if strict:
            raise ParseError(f"line {lineno}: {msg}")
        stats["invalid"] += 1
        log.warning("skipping malformed record at line %d: %s", lineno, msg)

    while True:
        if pending is None:
            try:
                line = nxt()
            except StopIteration:
                return
        else:
            line, pending = pending, None
        if not line.strip():
            continue
        if line.startswith(">"):
            try:
                rid, desc = _header(line)
            except ParseError as exc:
                rid = None
                err = str(exc)
            chunks = []
            while True:
                try:
                    line = nxt()
                except StopIteration:
                    break
                if line.startswith((">", "@")):
                    pending = line
                    break
                chunks.append(line.strip())
            if rid is None:
                fail(err)
                continue
            try:
                seq = _clean("".join(chunks), rid)
            except ParseError as exc:
                fail(str(exc))
                continue
            stats["records"] += 1
            yield Record(rid, seq, None, desc)
        elif line.startswith("@"):
            try:
                rid, desc = _header(line)
                seq = nxt().strip()
                plus = nxt()
                qual = nxt().strip()
            except ParseError as exc:
                fail(str(exc))
                continue
            except StopIteration:
                fail("truncated FASTQ record")
                return
            if not plus.startswith("+"):
                fail(f"{rid}: expected '+' separator line")
                continue
            if len(qual) != len(seq):
                fail(f"{rid}: quality length {len(qual)} != sequence length {len(seq)}")
                continue
            try:
                seq = _clean(seq, rid)
            except ParseError as exc:
                fail(str(exc))
                continue
            stats["records"] += 1
            yield Record(rid, seq, qual, desc)
        else:
            fail(f"unexpected line {line[:30]!r}")


def read(path, **kw) -> Iterator[Record]:
    with open_text(path) as fh:
        yield from parse(fh, **kw)


def parse_string(text: str, **kw) -> list[Record]:
    return list(parse(io.StringIO(text), **kw))


def format_fasta(rec: Record, width: int = 0) -> str:
    head = f">{rec.id}" + (f" {rec.description}" if rec.description else "")
    if width and len(rec.seq) > width:
        body = "\n".join(rec.seq[i:i + width] for i in range(0, len(rec.seq), width))
    else:
        body = rec.seq
    return f"{head}\n{body}\n"


def format_fastq(rec: Record, default_qual: str = "I") -> str:
    head = f"@{rec.id}" + (f" {rec.description}" if rec.description else "")
    qual = rec.qual if rec.qual is not None else default_qual * len(rec.seq)
    return f"{head}\n{rec.seq}\n+\n{qual}\n"


def sniff_format(path) -> str:
    name = Path(str(path)).name.lower().removesuffix(".gz")
    if name.endswith((".fq", ".fastq")):
        return "fastq"
    return "fasta"
