import gzip

import pytest
from hypothesis import given, strategies as st

from nswatermark.seqio import (ParseError, Record, format_fasta, format_fastq, parse_string, read, sniff_format)

ids = st.text("abcXYZ0123_.-", min_size=1, max_size=12)
seqs = st.text("ACGTN", max_size=200)


def test_fasta_multiline_and_description():
    recs = parse_string(">r1 some desc\nACGT\nacgt\n\n>r2\nNNAC\n")
    assert recs == [Record("r1", "ACGTACGT", None, "some desc"), Record("r2", "NNAC")]


def test_fastq_records():
    recs = parse_string("@a x=1\nACGT\n+\nIIII\n@b\nAC\n+b\n##\n")
    assert recs[0] == Record("a", "ACGT", "IIII", "x=1")
    assert recs[1].qual == "##"


def test_mixed_and_crlf():
    recs = parse_string(">a\r\nAC\r\n@b\r\nGT\r\n+\r\nII\r\n")
    assert [r.id for r in recs] == ["a", "b"]
    assert recs[1].seq == "GT"


def test_iupac_becomes_n():
    assert parse_string(">a\nACRYKMSW\n")[0].seq == "ACNNNNNN"


@pytest.mark.parametrize("text,msg", [
    (">a\nACGU\n", "invalid sequence"),
    ("@a\nACGT\n+\nIII\n", "quality length"),
    ("@a\nACGT\nIIII\nIIII\n", "separator"),
    ("@a\nACGT\n+\n", "truncated"),
    ("hello\n", "unexpected line"),
    (">\nACGT\n", "empty record header"),
])
def test_malformed_records(text, msg):
    with pytest.raises(ParseError, match=msg):
        parse_string(text, strict=True)
    stats = {}
    assert parse_string(text, stats=stats) == []
    assert stats["invalid"] == 1


def test_bad_record_is_skipped_but_rest_is_read():
    stats = {}
    recs = parse_string(">a\nACGT\n>b\nAXGT\n>c\nGG\n", stats=stats)
    assert [r.id for r in recs] == ["a", "c"]
    assert stats == {"records": 2, "invalid": 1}


@given(st.lists(st.tuples(ids, seqs), max_size=8), st.sampled_from([0, 7, 60]))
def test_fasta_roundtrip(items, width):
    recs = [Record(i, s) for i, s in items]
    text = "".join(format_fasta(r, width) for r in recs)
    assert parse_string(text, strict=True) == recs


@given(st.lists(st.tuples(ids, seqs), max_size=8))
def test_fastq_roundtrip(items):
    recs = [Record(i, s, "I" * len(s), "d") for i, s in items]
    text = "".join(format_fastq(r) for r in recs)
    assert parse_string(text, strict=True) == recs


def test_fastq_default_quality():
    assert format_fastq(Record("x", "ACG")) == "@x\nACG\n+\nIII\n"


def test_read_plain_and_gzip(tmp_path):
    p = tmp_path / "r.fa"
    p.write_text(">a\nACGT\n")
    g = tmp_path / "r.fq.gz"
    with gzip.open(g, "wt") as fh:
        fh.write("@b\nGG\n+\nII\n")
    assert [r.id for r in read(p)] == ["a"]
    assert [r.seq for r in read(g)] == ["GG"]


def test_sniff_format():
    assert sniff_format("x.fastq.gz") == "fastq"
    assert sniff_format("x.FQ") == "fastq"
    assert sniff_format("x.fa") == "fasta"
    assert sniff_format("-") == "fasta"
