import numpy as np
import pytest
from hypothesis import given, strategies as st

from nswatermark import kernels
from nswatermark.gf import GaloisField
from nswatermark.outer import CodeConstructionError, OuterCode, construct_code

from oracles import brute_codewords, brute_ml


def noisy_L(code, rng, sharp=3.0, flips=1):
    """Likelihoods peaked on a random codeword with a few corrupted positions."""
    x = rng.integers(0, code.q, code.k)
    c = code.encode(x)
    L = rng.random((code.n, code.q))
    L[np.arange(code.n), c] += sharp
    for pos in rng.choice(code.n, flips, replace=False):
        L[pos, rng.integers(0, code.q)] += sharp * 1.5
    return L / L.sum(1, keepdims=True), x


@pytest.fixture(scope="module")
def gf8_code():
    return construct_code(GaloisField(8), 6, 2, seed=3)


def test_construction_is_deterministic():
    gf = GaloisField(16)
    a = construct_code(gf, 6, 2, seed=11)
    b = construct_code(gf, 6, 2, seed=11)
    assert np.array_equal(a.H, b.H)


@pytest.mark.parametrize("q,n,k", [(4, 4, 2), (8, 4, 2), (16, 6, 2), (16, 6, 3), (16, 12, 2), (16, 24, 4)])
def test_systematic_generator(q, n, k):
    code = construct_code(GaloisField(q), n, k, seed=1)
    assert code.H.shape == (n - k, n)
    assert np.array_equal(code.G[:, :k], np.eye(k, dtype=np.int64))
    assert not code.field.matmul(code.H, code.G.T).any()
    assert code.field.rank(code.H) == n - k
    assert (code.H != 0).any(axis=1).all()


@pytest.mark.parametrize("q,n,k", [(4, 4, 2), (4, 5, 2), (8, 4, 2)])
def test_codebook_equals_null_space_scan(q, n, k):
    code = construct_code(GaloisField(q), n, k, seed=2)
    brute = brute_codewords(code.field, code.H)
    assert len(brute) == q**k
    ours = {tuple(c) for c in code.codebook}
    assert ours == {tuple(c) for c in brute}
    w = np.count_nonzero(brute, axis=1)
    w = w[w > 0]
    assert code.weight_profile == (w.min(), int((w == w.min()).sum()))


def test_codebook_rows_follow_message_index():
    code = construct_code(GaloisField(16), 6, 2, seed=5)
    for i in (0, 1, 17, 255):
        assert np.array_equal(code.codebook[i], code.encode(code.message_from_index(i)))
        assert code.index_from_message(code.message_from_index(i)) == i


def test_best_of_draws_ranking():
    gf = GaloisField(16)
    single = construct_code(gf, 6, 2, seed=9, attempts=1)
    best = construct_code(gf, 6, 2, seed=9, attempts=16)
    assert (best.weight_profile[0], -best.weight_profile[1]) >= (single.weight_profile[0], -single.weight_profile[1])


def test_from_generator_roundtrip(gf8_code):
    code = OuterCode.from_generator(gf8_code.field, gf8_code.G)
    assert np.array_equal(code.codebook, gf8_code.codebook)


def test_singular_parity_part_rejected():
    gf = GaloisField(4)
    H = np.array([[1, 1, 1, 1], [1, 1, 1, 1]])
    with pytest.raises(CodeConstructionError):
        OuterCode(gf, H)


@pytest.mark.parametrize("k,n", [(0, 4), (4, 4), (5, 4)])
def test_bad_dimensions(k, n):
    with pytest.raises(ValueError):
        construct_code(GaloisField(4), n, k)


def test_encode_rejects_bad_message(gf8_code):
    with pytest.raises(ValueError):
        gf8_code.encode([8, 0])
    with pytest.raises(ValueError):
        gf8_code.encode([1, 2, 3])


@pytest.mark.parametrize("q,n,k", [(16, 6, 2), (16, 6, 3), (8, 6, 2), (4, 8, 4), (16, 12, 2)])
def test_zero_noise_identity_on_all_messages(q, n, k):
    code = construct_code(GaloisField(q), n, k, seed=4)
    for i, c in enumerate(code.codebook):
        L = np.full((n, q), 0.0)
        L[np.arange(n), c] = 1.0
        out = code.bp_decode(L)
        assert out.decoded and out.iterations == 0
        assert code.index_from_message(out.message) == i


@given(st.integers(0, 2**32 - 1), st.integers(0, 3))
def test_decoded_implies_valid(seed, flips):
    code = construct_code(GaloisField(16), 6, 2, seed=7)
    rng = np.random.default_rng(seed)
    L, _ = noisy_L(code, rng, sharp=rng.uniform(0.2, 4.0), flips=flips)
    out = code.bp_decode(L, max_iters=10)
    if out.decoded:
        assert code.is_codeword(out.codeword)
        assert np.array_equal(code.encode(out.message), out.codeword)


@given(st.integers(0, 2**32 - 1))
def test_more_iterations_never_undo_success(seed):
    code = construct_code(GaloisField(16), 12, 2, seed=7)
    rng = np.random.default_rng(seed)
    L, _ = noisy_L(code, rng, sharp=rng.uniform(0.3, 2.0), flips=3)
    done = [code.bp_decode(L, it) for it in range(0, 16)]
    for a, b in zip(done, done[1:]):
        if a.decoded:
            assert b.decoded and np.array_equal(a.codeword, b.codeword)
            assert b.iterations == a.iterations


def test_ml_matches_exhaustive_product(gf8_code, rng):
    for _ in range(200):
        L, _ = noisy_L(gf8_code, rng, sharp=1.0, flips=2)
        best = brute_ml(gf8_code.codebook, L)
        assert np.array_equal(gf8_code.encode(gf8_code.ml_decode(L)), best)


def test_bp_input_validation(gf8_code):
    with pytest.raises(ValueError):
        gf8_code.bp_decode(np.ones((5, 8)))
    with pytest.raises(ValueError):
        gf8_code.bp_decode(np.ones((6, 8)), max_iters=-1)


def test_bp_batch_matches_single(gf8_code, rng):
    Ls = np.stack([noisy_L(gf8_code, rng, 1.0, 2)[0] for _ in range(50)])
    active = np.ones(50, dtype=bool)
    active[7] = False
    hard, iters, ok = kernels.bp_batch(Ls, active, *gf8_code.bp_structure, 10)
    for i in range(50):
        if not active[i]:
            assert not ok[i]
            continue
        one = gf8_code.bp_decode(Ls[i])
        assert bool(ok[i]) == one.decoded
        assert np.array_equal(hard[i], one.codeword)
        assert iters[i] == one.iterations


@given(st.integers(0, 2**31), st.integers(0, 5), st.floats(1e-3, 1e3))
def test_row_scaling_leaves_bp_unchanged(seed, row, factor):
    code = construct_code(GaloisField(8), 6, 2, seed=3)
    L, _ = noisy_L(code, np.random.default_rng(seed), flips=2)
    scaled = L.copy()
    scaled[row] *= 2.0
    a, b = code.bp_decode(L), code.bp_decode(scaled)
    assert a.decoded == b.decoded and a.iterations == b.iterations
    assert np.array_equal(a.codeword, b.codeword)
    scaled[row] *= factor
    assert np.array_equal(code.bp_decode(scaled).codeword, a.codeword)
