"""Barcode-set files: everything needed to regenerate and decode a set.

Line-oriented UTF-8 text, one ``key<TAB>value...`` record per line.  Lines
starting with ``#`` are comments.  The last line holds the sha256 of every
byte before it.  See docs/formats.md.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .barcodes import (BarcodeError, CodeParams, InnerCodebook, build_candidate_set, build_inner_codebook,
                       block_hypotheses, from_nucleotides, DEFAULT_MAPPING)
from .boundary import DEFAULT_CONSENSUS, DEFAULT_LEFT_FLANK
from .channel import IdsParams
from .chemistry import FilterResult, FilterThresholds, filter_set
from .gf import GaloisField
from .inner import DriftWindow, InnerDecoder
from .outer import OuterCode, construct_code
from .watermark import SearchResult, ils_optimize

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
MAGIC = "# nswatermark barcode set"


class SetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    sample_id: str
    index: int  # message index
    barcode: str


@dataclass
class BarcodeSet:
    params: CodeParams
    code: OuterCode
    codebook: InnerCodebook
    watermark: np.ndarray
    mapping: str = DEFAULT_MAPPING
    left_flank: str = DEFAULT_LEFT_FLANK
    consensus: str = DEFAULT_CONSENSUS
    thresholds: FilterThresholds = field(default_factory=FilterThresholds)
    samples: list[Sample] = field(default_factory=list)

    def __post_init__(self):
        self.watermark = np.asarray(self.watermark, dtype=np.int8)
        self._by_index = {s.index: s for s in self.samples}
        if len(self._by_index) != len(self.samples):
            raise SetFormatError("duplicate message index in sample list")
        if len({s.sample_id for s in self.samples}) != len(self.samples):
            raise SetFormatError("duplicate sample id")

    @property
    def B(self) -> int:
        return len(self.samples)

    @property
    def M(self) -> int:
        return self.params.M

    @property
    def l(self) -> int:
        return self.params.l

    def sample_for(self, index: int) -> Sample | None:
        return self._by_index.get(int(index))

    def candidates(self):
        return build_candidate_set(self.code, self.codebook, self.watermark, self.mapping)

    def blocks(self) -> np.ndarray:
        return block_hypotheses(self.codebook, self.watermark, self.params.n)

    def symbols(self, seq: str, allow_n: bool = False) -> np.ndarray:
        return from_nucleotides(seq, self.mapping, allow_n=allow_n)

    def templates(self) -> np.ndarray:
        """``flank | barcode | consensus`` as symbols, one row per sample."""
        fl = self.symbols(self.left_flank)
        co = self.symbols(self.consensus)
        return np.stack([np.concatenate([fl, self.symbols(s.barcode), co]) for s in self.samples]) \
            if self.samples else np.zeros((0, len(fl) + self.l + len(co)), np.int8)

    def decoder(self, params: IdsParams, window: DriftWindow | None = None, **kw) -> InnerDecoder:
        return InnerDecoder(self.blocks(), self.symbols(self.left_flank), self.symbols(self.consensus),
                            params, window, **kw)

    def validate(self) -> None:
        """Regenerate every stored barcode from its message index."""
        p = self.params
        if self.code.n != p.n or self.code.k != p.k or self.code.q != p.q:
            raise SetFormatError("parity-check matrix does not match q, n, k")
        if self.codebook.q != p.q or self.codebook.u != p.u:
            raise SetFormatError("inner codebook does not match q, u")
        if self.watermark.shape != (p.l,) or self.watermark.min(initial=0) < 0 or self.watermark.max(initial=0) > 3:
            raise SetFormatError("watermark must hold l symbols in 0..3")
        for seq, name in ((self.left_flank, "left flank"), (self.consensus, "consensus")):
            if set(seq) - set("ACGT"):
                raise SetFormatError(f"{name} must be ACGT only")
        try:
            cands = self.candidates()
        except BarcodeError as exc:
            raise SetFormatError(f"cannot regenerate candidates: {exc}") from exc
        for s in self.samples:
            if not 0 <= s.index < p.M:
                raise SetFormatError(f"sample {s.sample_id}: message index {s.index} out of range")
            if cands.sequence(s.index) != s.barcode:
                raise SetFormatError(f"sample {s.sample_id}: stored barcode does not match regeneration")

    # -- serialisation -------------------------------------------------------

    def to_text(self, comments: dict | None = None) -> str:
        p = self.params
        lines = [MAGIC, f"format\t{FORMAT_VERSION}"]
        for k, v in (comments or {}).items():
            lines.append(f"# {k}: {v}")
        lines += [
            f"q\t{p.q}", f"k\t{p.k}", f"n\t{p.n}", f"u\t{p.u}",
            f"code_seed\t{p.code_seed}", f"inner_seed\t{p.inner_seed}",
            f"poly\t{self.code.field.poly}",
            f"mapping\t{self.mapping}",
            f"left_flank\t{self.left_flank}",
            f"consensus\t{self.consensus}",
        ]
        t = self.thresholds
        for f in fields(t):
            v = getattr(t, f.name)
            v = int(v) if f.name in ("cross_pairs", "min_hairpin_loop") else repr(float(v))
            lines.append(f"threshold\t{f.name}\t{v}")
        lines.append("watermark\t" + "".join(str(int(c)) for c in self.watermark))
        for row in self.code.H:
            lines.append("H\t" + " ".join(str(int(c)) for c in row))
        for w in self.codebook.words:
            lines.append("inner\t" + "".join(str(int(c)) for c in w))
        for s in self.samples:
            lines.append(f"sample\t{s.sample_id}\t{s.index}\t{s.barcode}")
        body = "\n".join(lines) + "\n"
        return body + f"checksum\tsha256:{hashlib.sha256(body.encode()).hexdigest()}\n"

    def save(self, path, comments: dict | None = None) -> None:
        Path(path).write_text(self.to_text(comments), encoding="utf-8")

    @classmethod
    def from_text(cls, text: str) -> "BarcodeSet":
        if not text.endswith("\n"):
            raise SetFormatError("truncated file (no final newline)")
        body, _, last = text[:-1].rpartition("\n")
        body += "\n"
        if not last.startswith("checksum\tsha256:"):
            raise SetFormatError("missing checksum line")
        if hashlib.sha256(body.encode()).hexdigest() != last.split(":", 1)[1].strip():
            raise SetFormatError("checksum mismatch")
        scalars: dict[str, str] = {}
        thr: dict[str, str] = {}
        H, inner, samples = [], [], []
        for no, line in enumerate(body.splitlines(), 1):
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            key = parts[0]
            try:
                if key == "H":
                    H.append([int(c) for c in parts[1].split()])
                elif key == "inner":
                    inner.append([int(c) for c in parts[1]])
                elif key == "sample":
                    samples.append(Sample(parts[1], int(parts[2]), parts[3]))
                elif key == "threshold":
                    thr[parts[1]] = parts[2]
                else:
                    if len(parts) != 2:
                        raise ValueError("expected key and one value")
                    scalars[key] = parts[1]
            except (IndexError, ValueError) as exc:
                raise SetFormatError(f"line {no}: malformed {key!r} record: {exc}") from None
        try:
            version = int(scalars["format"])
            if version != FORMAT_VERSION:
                raise SetFormatError(f"unsupported format version {version}")
            params = CodeParams(int(scalars["q"]), int(scalars["k"]), int(scalars["n"]), int(scalars["u"]),
                                int(scalars["code_seed"]), int(scalars["inner_seed"]))
            gf = GaloisField(params.q, int(scalars["poly"]))
            code = OuterCode(gf, np.array(H, dtype=np.int64), params.code_seed)
            codebook = InnerCodebook.from_words(np.array(inner, dtype=np.int8))
            watermark = np.array([int(c) for c in scalars["watermark"]], dtype=np.int8)
            types = {f.name: f.type for f in fields(FilterThresholds)}
            kw = {}
            for name, v in thr.items():
                if name not in types:
                    raise SetFormatError(f"unknown threshold {name!r}")
                kw[name] = bool(int(v)) if name == "cross_pairs" else int(v) if name == "min_hairpin_loop" else float(v)
            out = cls(params, code, codebook, watermark, scalars["mapping"], scalars["left_flank"],
                      scalars["consensus"], FilterThresholds(**kw), samples)
        except SetFormatError:
            raise
        except KeyError as exc:
            raise SetFormatError(f"missing field {exc.args[0]!r}") from None
        except Exception as exc:
            raise SetFormatError(f"inconsistent barcode set: {exc}") from exc
        out.validate()
        return out

    @classmethod
    def load(cls, path) -> "BarcodeSet":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise SetFormatError(f"{path}: not UTF-8 text") from exc
        return cls.from_text(text)


@dataclass
class BuildReport:
    barcode_set: BarcodeSet
    search: SearchResult | None
    filtering: FilterResult

    def summary(self) -> dict:
        s = self.barcode_set
        out = {"M": s.M, "B": s.B, "l": s.l, "outer_dmin": s.code.min_distance if s.M <= 1 << 20 else None,
               "inner_distance": s.codebook.min_distance}
        if self.search is not None:
            out.update(watermark_cost=self.search.cost, watermark_passes=self.search.passes,
                       cost_first=self.search.history[0][1], cost_best=self.search.history[-1][2])
        return out


def sample_ids(indices, prefix: str = "bc") -> list[str]:
    width = max(4, len(str(len(indices))))
    return [f"{prefix}{j + 1:0{width}d}" for j in range(len(indices))]


def build_set(params: CodeParams, *, left_flank: str = DEFAULT_LEFT_FLANK, consensus: str = DEFAULT_CONSENSUS,
              thresholds: FilterThresholds = FilterThresholds(), mapping: str = DEFAULT_MAPPING,
              watermark=None, search_seed: int = 0, budget: int = 20, code_attempts: int = 16) -> BuildReport:
    """Outer code, inner codebook, watermark search and filtering in one go.

    A given ``watermark`` skips the search.
    """
    gf = GaloisField(params.q)
    code = construct_code(gf, params.n, params.k, params.code_seed, attempts=code_attempts)
    codebook = build_inner_codebook(params.q, params.u, params.inner_seed)
    adapters = (left_flank, consensus)
    search = None
    if watermark is None:
        search = ils_optimize(code, codebook, adapters, thresholds, search_seed, budget, mapping=mapping)
        watermark = search.watermark
    cands = build_candidate_set(code, codebook, watermark, mapping)
    filt = filter_set(cands, adapters, thresholds)
    ids = sample_ids(filt.survivors)
    samples = [Sample(sid, int(i), cands.sequence(int(i))) for sid, i in zip(ids, filt.survivors)]
    bset = BarcodeSet(params, code, codebook, np.asarray(watermark, np.int8), mapping, left_flank, consensus,
                      thresholds, samples)
    log.info("built set: M=%d B=%d", bset.M, bset.B)
    return BuildReport(bset, search, filt)
