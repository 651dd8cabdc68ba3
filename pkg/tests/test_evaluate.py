import json
import math

import numpy as np
import pytest

from nswatermark import kernels
from nswatermark.barcodes import to_nucleotides
from nswatermark.channel import IdsParams
from nswatermark.demux import DemuxOptions, Demultiplexer
from nswatermark.evaluate import (INSERT_LEN, MonteCarloReport, confidence_interval, pmut_grid, run_experiment,
                                  sweep, sweep_tsv)
from nswatermark.seqio import Record

SMRT = IdsParams.smrt()


def test_zero_count_interval():
    lo, hi = confidence_interval(0.0, 5 * 10**7)
    assert lo == 0.0
    assert hi == pytest.approx(4.0e-8, rel=1e-6)


def test_interval_is_symmetric_on_log_scale():
    lo, hi = confidence_interval(1e-3, 10**6)
    assert lo < 1e-3 < hi
    assert math.log(hi / 1e-3) == pytest.approx(math.log(1e-3 / lo))
    assert math.log(hi / 1e-3) == pytest.approx(2 * math.sqrt(0.999 / 1000))
    with pytest.raises(ValueError):
        confidence_interval(0.1, 0)
    with pytest.raises(ValueError):
        confidence_interval(1.5, 10)


def test_noiseless_experiment_is_perfect(l24_set):
    rep = run_experiment(l24_set, IdsParams(0, 0, 0, 2), 2000, seed=1)
    assert rep.correct == 2000 and rep.pe == 0.0 and rep.pu == 0.0
    assert rep.pu_ci == (0.0, pytest.approx(-math.expm1(-2 / 2000)))


def test_independent_of_threads_and_chunks(l24_set):
    a = run_experiment(l24_set, SMRT, 3000, seed=5, threads=1, chunk_size=4096)
    b = run_experiment(l24_set, SMRT, 3000, seed=5, threads=3, chunk_size=250)
    assert a == b
    assert a.to_text() == b.to_text()


def test_counts_match_the_demultiplexer(l24_set):
    N, seed = 3000, 9
    rep = run_experiment(l24_set, SMRT, N, seed=seed)
    reads, offsets, which = kernels.simulate_batch(l24_set.templates(), seed, 0, N, INSERT_LEN,
                                                   SMRT.p_i, SMRT.p_d, SMRT.p_s, SMRT.max_ins)
    recs = [Record(str(i), to_nucleotides(reads[offsets[i]:offsets[i + 1]], l24_set.mapping)) for i in range(N)]
    res = Demultiplexer(l24_set, SMRT, DemuxOptions(threads=1)).demultiplex_batch(recs)
    truth = [l24_set.samples[w].index for w in which]
    correct = sum(r.status == "assigned" and r.message_index == t for r, t in zip(res, truth))
    wrong = sum(r.message_index is not None and r.message_index != t for r, t in zip(res, truth))
    unused = sum(r.reason == "unused_codeword" and r.message_index != t for r, t in zip(res, truth))
    assert rep.correct == correct
    assert rep.misassigned == wrong
    assert rep.misassigned_unused == unused
    assert rep.discarded == sum(r.reason == "bp_failure" for r in res)
    assert rep.unassignable == sum(r.status == "unassignable" for r in res)


def test_report_fields(l24_set):
    rep = run_experiment(l24_set, SMRT, 1500, seed=2)
    assert rep.pe == (rep.discarded + rep.unassignable) / rep.N
    assert rep.pu == rep.misassigned / rep.N
    assert rep.misassigned_unused <= rep.misassigned
    assert rep.B == l24_set.B and rep.M == 256 and rep.l == 24
    assert rep.p_mut == pytest.approx(0.12)
    text = rep.to_text()
    summary = json.loads(text.rsplit("# summary ", 1)[1])
    assert summary["pe"] == rep.pe and summary["N"] == 1500
    assert "pe\t" in text and "pu_hi\t" in text


def test_report_counts_must_add_up():
    with pytest.raises(ValueError):
        MonteCarloReport(10, 5, 1, 1, 1, 0, .1, .1, .1, 2, 10, 0, 5, 16, 8)


def test_sweep_and_grid(l24_set):
    grid = pmut_grid(0.03, 0.15, 3)
    assert grid == pytest.approx([0.03, 0.09, 0.15])
    assert pmut_grid(0.05, 0.2, 1) == [0.05]
    with pytest.raises(ValueError):
        pmut_grid(0.1, 0.2, 0)
    reps = sweep(l24_set, grid, 800, seed=3)
    assert [r.p_mut for r in reps] == pytest.approx(grid)
    assert reps[0].p_i == reps[0].p_d == reps[0].p_s == pytest.approx(0.01)
    lines = sweep_tsv(reps).splitlines()
    assert lines[0].split("\t")[:3] == ["p_mut", "pe", "pe_lo"]
    assert len(lines) == 4
    assert reps[0].pe <= reps[-1].pe


def test_invalid_sizes(l24_set):
    with pytest.raises(ValueError):
        run_experiment(l24_set, SMRT, 0)


def test_reads_cycle_over_barcodes(l24_set):
    _, _, which = kernels.simulate_batch(l24_set.templates(), 0, 0, 2 * l24_set.B, 0, 0.0, 0.0, 0.0, 2)
    assert np.array_equal(which, np.arange(2 * l24_set.B) % l24_set.B)
