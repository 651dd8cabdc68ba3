import hashlib

import numpy as np
import pytest

from nswatermark.barcode_set import BarcodeSet, SetFormatError, build_set, sample_ids
from nswatermark.barcodes import CodeParams
from nswatermark.chemistry import FilterThresholds


def resign(body: str) -> str:
    """Replace the checksum line so only the semantic checks can object."""
    body = body[: body.rindex("checksum\t")]
    return body + f"checksum\tsha256:{hashlib.sha256(body.encode()).hexdigest()}\n"


def test_text_roundtrip(l24_set):
    text = l24_set.to_text()
    again = BarcodeSet.from_text(text)
    assert again.to_text() == text
    assert again.B == l24_set.B and again.samples == l24_set.samples
    assert np.array_equal(again.code.H, l24_set.code.H)
    assert np.array_equal(again.watermark, l24_set.watermark)
    assert again.thresholds == l24_set.thresholds


def test_save_load_with_comments(l24_set, tmp_path):
    p = tmp_path / "set.tsv"
    l24_set.save(p, comments={"built_by": "test"})
    assert "# built_by: test" in p.read_text()
    assert BarcodeSet.load(p).samples == l24_set.samples


def test_checksum_detects_edits(l24_set):
    text = l24_set.to_text().replace("sample\tbc0001", "sample\tbc000X", 1)
    with pytest.raises(SetFormatError, match="checksum"):
        BarcodeSet.from_text(text)
    with pytest.raises(SetFormatError, match="checksum"):
        BarcodeSet.from_text(l24_set.to_text().rsplit("checksum", 1)[0])
    with pytest.raises(SetFormatError, match="truncated"):
        BarcodeSet.from_text(l24_set.to_text()[:-1])


def test_validation_rejects_mismatched_barcode(l24_set):
    s = l24_set.samples[3]
    wrong = ("T" if s.barcode[0] != "T" else "A") + s.barcode[1:]
    text = resign(l24_set.to_text().replace(f"\t{s.barcode}\n", f"\t{wrong}\n"))
    with pytest.raises(SetFormatError, match="does not match regeneration"):
        BarcodeSet.from_text(text)


def test_validation_rejects_changed_watermark(l24_set):
    w = "".join(str(int(c)) for c in l24_set.watermark)
    w2 = str((int(w[0]) + 1) % 4) + w[1:]
    with pytest.raises(SetFormatError):
        BarcodeSet.from_text(resign(l24_set.to_text().replace(f"watermark\t{w}", f"watermark\t{w2}")))
    with pytest.raises(SetFormatError, match="watermark"):
        BarcodeSet.from_text(resign(l24_set.to_text().replace(f"watermark\t{w}", f"watermark\t{w[:-1]}")))


@pytest.mark.parametrize("old,new,msg", [
    ("format\t1", "format\t9", "version"),
    ("q\t16", "q\t15", "inconsistent"),
    ("threshold\tgc_min", "threshold\tgc_low", "unknown threshold"),
    ("mapping\tACGT", "mapping\tACGG", "regenerate"),
])
def test_header_errors(l24_set, old, new, msg):
    text = resign(l24_set.to_text().replace(old, new, 1))
    with pytest.raises(SetFormatError, match=msg):
        BarcodeSet.from_text(text)


def test_missing_field(l24_set):
    text = "".join(line + "\n" for line in l24_set.to_text().splitlines() if not line.startswith("poly\t"))
    with pytest.raises(SetFormatError, match="poly"):
        BarcodeSet.from_text(resign(text))


def test_duplicate_samples_rejected(l24_set):
    lines = l24_set.to_text().splitlines()
    first = next(line for line in lines if line.startswith("sample\t"))
    dup_index = first.replace("bc0001", "bc9999")
    with pytest.raises(SetFormatError, match="duplicate message index"):
        BarcodeSet.from_text(resign("\n".join(lines[:-1] + [dup_index, lines[-1]]) + "\n"))
    second = next(line for line in lines if line.startswith("sample\tbc0002"))
    dup_id = second.replace("bc0002", "bc0001")
    lines2 = [line for line in lines if line != second]
    with pytest.raises(SetFormatError, match="duplicate sample id"):
        BarcodeSet.from_text(resign("\n".join(lines2[:-1] + [dup_id, lines2[-1]]) + "\n"))


def test_malformed_record(l24_set):
    text = l24_set.to_text().replace("H\t", "H", 1)
    with pytest.raises(SetFormatError):
        BarcodeSet.from_text(resign(text))


def test_build_is_deterministic():
    a = build_set(CodeParams(16, 2, 6, 4, 3, 3), search_seed=3, budget=1)
    b = build_set(CodeParams(16, 2, 6, 4, 3, 3), search_seed=3, budget=1)
    assert a.barcode_set.to_text() == b.barcode_set.to_text()
    assert a.search.history == b.search.history


def test_given_watermark_skips_search():
    w = np.random.default_rng(0).integers(0, 4, 24)
    rep = build_set(CodeParams(16, 2, 6, 4, 1, 1), watermark=w, thresholds=FilterThresholds(cross_pairs=False))
    assert rep.search is None
    assert np.array_equal(rep.barcode_set.watermark, w)
    assert rep.filtering.B == rep.barcode_set.B
    s = rep.summary()
    assert s["M"] == 256 and s["l"] == 24 and "watermark_cost" not in s


def test_build_summary_and_samples(l24_build):
    bs = l24_build.barcode_set
    s = l24_build.summary()
    assert s["B"] == bs.B and s["cost_best"] == l24_build.search.cost
    assert [x.index for x in bs.samples] == l24_build.filtering.survivors.tolist()
    assert bs.samples[0].sample_id == "bc0001"
    cands = bs.candidates()
    for smp in bs.samples[:20]:
        assert cands.sequence(smp.index) == smp.barcode
        assert bs.sample_for(smp.index) is smp
    assert bs.sample_for(-1) is None
    t = bs.templates()
    assert t.shape == (bs.B, len(bs.left_flank) + 24 + len(bs.consensus))


def test_sample_ids_widen():
    assert sample_ids(range(3)) == ["bc0001", "bc0002", "bc0003"]
    assert sample_ids(range(12345))[-1] == "bc12345"
