import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import codebook, matrix_encode
from scos import codes
from scos.codes import CodeSpec, CrcSpec


def test_encode_examples():
    assert list(codes.encode_u(1, [0, 1])) == [1, 1]
    spec = CodeSpec(2, (1, 2, 3, 4), {})
    c = codes.encode(spec, [0, 1, 0, 0])
    assert list(c) == list(matrix_encode(2, [0, 1, 0, 0]))
    assert list(c) == [1, 0, 1, 0]
    assert not codes.encode(codes.pac_code(7, 64), np.zeros(64, np.uint8)).any()


def test_encode_rejects_wrong_length():
    with pytest.raises(ValueError):
        codes.encode(codes.polar_code(3, 4), [0, 1])


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_encode_matches_matrix_for_all_inputs(n):
    N = 1 << n
    for w in itertools.product([0, 1], repeat=N):
        u = np.array(w, dtype=np.uint8)
        assert np.array_equal(codes.encode_u(n, u), matrix_encode(n, u))


@pytest.mark.parametrize("spec", [codes.polar_code(4, 8), codes.pac_code(4, 5),
                                  codes.sample_drm_polar(codes.rm_polar_code(4, 2, 8), 3)])
def test_encode_of_every_info_word(spec):
    for info, u, c in codebook(spec):
        assert np.array_equal(spec.place(info), u)
        assert np.array_equal(codes.encode(spec, info), c)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(0, 2 ** 31))
def test_encode_linear_over_info_bits(a, b):
    spec = codes.pac_code(7, 64)
    ra, rb = np.random.default_rng(a), np.random.default_rng(b)
    x = ra.integers(0, 2, 64, dtype=np.uint8)
    y = rb.integers(0, 2, 64, dtype=np.uint8)
    assert np.array_equal(codes.encode(spec, x ^ y), codes.encode(spec, x) ^ codes.encode(spec, y))


def test_rm_info_set_examples():
    assert codes.rm_info_set(3, 3) == tuple(range(1, 9))
    assert codes.rm_info_set(0, 3) == (8,)
    assert codes.rm_info_set(1, 2) == (2, 3, 4)
    with pytest.raises(ValueError):
        codes.rm_info_set(4, 3)


def test_rm_sizes():
    for n in range(9):
        for r in range(n + 1):
            assert len(codes.rm_info_set(r, n)) == sum(comb(n, k) for k in range(r + 1))


def test_polar_pw_examples():
    assert codes.polar_info_set_pw(3, 8) == tuple(range(1, 9))
    assert codes.polar_info_set_pw(3, 0) == ()
    # weights of i-1 = 0..7 with beta = 2^(1/4), computed directly
    beta = 2 ** 0.25
    w = [sum(beta ** k for k in range(3) if (i >> k) & 1) for i in range(8)]
    top = sorted(range(8), key=lambda i: (w[i], i), reverse=True)[:4]
    assert codes.polar_info_set_pw(3, 4) == tuple(sorted(i + 1 for i in top)) == (4, 6, 7, 8)


def test_rm_polar_examples():
    assert codes.rm_polar_info_set(3, 1, 4) == codes.rm_info_set(1, 3)
    beta = 2 ** 0.25
    cand = codes.rm_info_set(2, 3)
    w = {i: sum(beta ** k for k in range(3) if ((i - 1) >> k) & 1) for i in cand}
    top = sorted(cand, key=lambda i: (w[i], i), reverse=True)[:3]
    assert codes.rm_polar_info_set(3, 2, 3) == tuple(sorted(top))
    big = codes.rm_polar_info_set(8, 4, 154)
    assert len(big) == 154 and all(bin(i - 1).count("1") >= 4 for i in big)
    with pytest.raises(ValueError):
        codes.rm_polar_info_set(3, 1, 5)


def test_pac_constraints_examples():
    g = (0, 1, 1, 0, 1, 1)
    assert all(js == () for js in codes.pac_constraints((5, 6, 7, 8), (0,) * 6, 8).values())
    cons = codes.pac_constraints((1, 2, 3, 4, 5, 6, 8), g, 8)
    assert cons[7] == (1, 2, 4, 5)
    cons = codes.pac_constraints((1, 2, 4, 5, 6, 7, 8), g, 8)
    assert cons[3] == (1,)


def test_pac_rule_on_rm37():
    spec = codes.pac_code(7, 64)
    assert spec.info_set == codes.rm_info_set(3, 7)
    g = (0, 1, 1, 0, 1, 1)
    for info, u, _ in itertools.islice(codebook_random(spec), 20):
        for i in spec.frozen_set:
            want = 0
            for k, gk in enumerate(g, start=1):
                if gk and i - k >= 1:
                    want ^= int(u[i - k - 1])
            assert u[i - 1] == want


def codebook_random(spec, count=20, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        info = rng.integers(0, 2, spec.K, dtype=np.uint8)
        yield info, spec.place(info), None


def test_constraints_causal_and_info_only():
    for spec in (codes.pac_code(7, 64), codes.sample_drm_polar(codes.rm_polar_code(7, 3, 50), 9)):
        info = set(spec.info_set)
        for i, js in spec.constraints.items():
            assert all(j < i and j in info for j in js)


def test_codespec_invariants_enforced():
    with pytest.raises(ValueError):
        CodeSpec(2, (1, 2), {3: (), 4: (5,)})
    with pytest.raises(ValueError):
        CodeSpec(2, (1, 2), {3: ()})
    with pytest.raises(ValueError):
        CodeSpec(2, (2, 3), {1: (), 4: (1,)})


def _drm_reference(base, seed):
    # independent reading of the documented draw order
    rng = np.random.default_rng(seed)
    info = list(base.info_set)
    frozen = [i for i in range(1, base.N + 1) if i not in info]
    sizes = [sum(1 for j in info if j < i) for i in frozen]
    bits = list(rng.integers(0, 2, size=sum(sizes)))
    out = {}
    for i in frozen:
        out[i] = tuple(j for j in info if j < i and bits.pop(0))
    return out


def test_drm_polar_draw_order():
    base = codes.rm_polar_code(3, 1, 4)
    spec = codes.sample_drm_polar(base, 1)
    assert dict(spec.constraints) == _drm_reference(base, 1)
    assert dict(codes.sample_drm_polar(base, 1).constraints) == dict(spec.constraints)
    big = codes.rm_polar_code(7, 3, 50)
    assert dict(codes.sample_drm_polar(big, 4).constraints) == _drm_reference(big, 4)


def test_drm_polar_zero_draws_is_plain_code():
    class Zeros:
        def integers(self, lo, hi, size):
            return np.zeros(size, dtype=np.int64)

    base = codes.rm_polar_code(4, 2, 8)
    spec = codes.sample_drm_polar(base, 0, rng=Zeros())
    assert all(js == () for js in spec.constraints.values())


def _crc_oracle(bits, poly=0b11100101, deg=7):
    m = int("".join(map(str, bits)), 2) << deg
    for k in range(m.bit_length() - 1, deg - 1, -1):
        if (m >> k) & 1:
            m ^= poly << (k - deg)
    return [(m >> (deg - 1 - k)) & 1 for k in range(deg)]


def test_crc_examples():
    crc = CrcSpec()
    assert not crc.remainder(np.zeros(64, np.uint8)).any()
    payload = np.zeros(64, np.uint8)
    payload[0] = 1
    assert list(crc.remainder(payload)) == _crc_oracle(payload)
    spec = codes.crc_polar_spec(7, 64)
    assert spec.K == 71 and spec.payload_bits == 64 and spec.rate == 0.5
    with pytest.raises(ValueError):
        codes.crc_polar_spec(3, 4)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=80))
def test_crc_detects_single_flips(bits):
    crc = CrcSpec()
    assert list(crc.remainder(bits)) == _crc_oracle(bits)
    word = crc.append(bits)
    assert crc.check(word)
    for k in range(word.size):
        bad = word.copy()
        bad[k] ^= 1
        assert not crc.check(bad)


def test_spec_roundtrip(tmp_path):
    for spec in (codes.pac_code(7, 64), codes.crc_polar_spec(7, 64),
                 codes.sample_drm_polar(codes.rm_polar_code(4, 2, 8), 2)):
        p = tmp_path / "s.json"
        spec.save(p)
        back = CodeSpec.load(p)
        assert back.info_set == spec.info_set
        assert dict(back.constraints) == dict(spec.constraints)
        assert back.crc == spec.crc
        assert back.code_hash == spec.code_hash


def test_ga_construction_shape():
    info = codes.ga_info_set(5, 16, 2.0)
    assert len(info) == 16 and 32 in info and 1 not in info
