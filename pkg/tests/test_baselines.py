import itertools
import math

import numpy as np
import pytest

from conftest import codebook, naive_decision_llrs
from scos import codes
from scos.baselines import (DscfConfig, DscfDecoder, ScDecoder, SclConfig, SclDecoder,
                            brute_force_ml, dscf_decode, dscf_metric, scf_metric_q1, scl_decode)
from scos.channel import ebn0_to_sigma, frame_rng, transmit
from scos.engine import sc_decode


def _noisy(spec, snr, seed, count):
    sigma = ebn0_to_sigma(snr, spec.payload_bits / spec.N)
    for f in range(count):
        rng = frame_rng(seed, f)
        info = rng.integers(0, 2, spec.payload_bits, dtype=np.uint8)
        if spec.crc is not None:
            info = spec.crc.append(info)
        u = spec.place(info)
        yield u, transmit(codes.encode_u(spec, u), sigma, rng)


def test_config_validation():
    with pytest.raises(ValueError):
        SclConfig(0)
    with pytest.raises(ValueError):
        DscfConfig(alpha=0.0)
    with pytest.raises(ValueError):
        DscfConfig(t_max=-1)
    with pytest.raises(ValueError):
        DscfDecoder(codes.pac_code(7, 64))


@pytest.mark.parametrize("spec", [codes.pac_code(5, 16), codes.crc_polar_spec(5, 8)],
                         ids=["pac32", "crc32"])
def test_scl_single_path_is_sc(spec):
    scl = SclDecoder(spec, SclConfig(1))
    sc = ScDecoder(spec)
    for _, llr in _noisy(spec, 1.0, 0, 500):
        a, b = scl.decode(llr), sc.decode(llr)
        assert np.array_equal(a.u_hat, b.u_hat)
        assert a.pm == pytest.approx(b.pm, abs=1e-9)
        assert a.omega == b.omega and a.node_visits == spec.N


@pytest.mark.parametrize("spec", [codes.polar_code(3, 4), codes.rm_polar_code(4, 2, 8)],
                         ids=["polar8", "rmpolar16"])
def test_full_list_is_ml(spec):
    for _, llr in _noisy(spec, 1.0, 1, 300):
        u, pm = scl_decode(spec, llr, SclConfig(2 ** spec.K))
        u_ml, pm_ml = brute_force_ml(spec, llr)
        assert pm == pytest.approx(pm_ml, abs=1e-9)


def test_scl_never_worse_than_sc():
    spec = codes.sample_drm_polar(codes.rm_polar_code(5, 2, 12), 4)
    for L in (2, 4, 8):
        dec = SclDecoder(spec, SclConfig(L))
        for _, llr in _noisy(spec, 1.0, L, 1000):
            assert dec.decode(llr).pm <= sc_decode(spec, llr)[1] + 1e-9


def test_scl_crc_selection():
    spec = codes.crc_polar_spec(7, 64)
    dec = SclDecoder(spec, SclConfig(8))
    for _, llr in _noisy(spec, 2.0, 2, 200):
        out = dec.decode(llr)
        if out.omega:
            assert spec.crc.check(out.u_hat[spec.info_idx0])


def test_dscf_metric_examples():
    assert dscf_metric((2,), [1.0, 2.0], 1.0, info_set=(1, 2)) == pytest.approx(
        2.0 + math.log1p(math.exp(-1)) + math.log1p(math.exp(-2)))
    assert dscf_metric((2,), [1.0, 2.0], 1.0, info_set=(1, 2)) == pytest.approx(2.44019, abs=1e-5)
    assert scf_metric_q1([1e6, 1e6, 3.0], 3, 0.45, info_set=(1, 2, 3)) == pytest.approx(
        3.0 + math.log1p(math.exp(-0.45 * 3.0)) / 0.45)
    assert scf_metric_q1([1e6, 1e6, 1e6], 2, 0.45) == pytest.approx(1e6)
    assert scf_metric_q1([1.0, 2.0], 2, 1e9) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        dscf_metric((1,), [1.0], 0.0)
    with pytest.raises(ValueError):
        dscf_metric((1,), [1.0], -1.0)


def test_dscf_without_attempts_is_sc_with_crc():
    spec = codes.crc_polar_spec(7, 64)
    dec = DscfDecoder(spec, DscfConfig(t_max=0))
    sc = ScDecoder(spec)
    for _, llr in _noisy(spec, 2.0, 3, 300):
        a, b = dec.decode(llr), sc.decode(llr)
        assert np.array_equal(a.u_hat, b.u_hat) and a.omega == b.omega and a.attempts == 0
        assert a.omega == int(spec.crc.check(b.u_hat[spec.info_idx0]))


def test_dscf_accepts_only_crc_valid():
    spec = codes.crc_polar_spec(7, 64)
    cfg = DscfConfig(t_max=20)
    dec = DscfDecoder(spec, cfg)
    sc = ScDecoder(spec)
    for _, llr in _noisy(spec, 2.0, 4, 300):
        out = dec.decode(llr)
        if out.omega:
            assert spec.crc.check(out.u_hat[spec.info_idx0])
        else:
            assert out.attempts == cfg.t_max
        if sc.decode(llr).omega:
            assert out.attempts == 0 and out.node_visits == spec.N
        u, att = dscf_decode(spec, llr, cfg)
        assert att == out.attempts and (u is None) == (not out.omega)


def test_brute_force_noiseless():
    spec = codes.rm_polar_code(4, 2, 8)
    for info, u, c in itertools.islice(codebook(spec), 0, 256, 37):
        got, pm = brute_force_ml(spec, np.where(c == 0, 8.0, -8.0))
        assert np.array_equal(got, u) and pm == 0.0


def test_brute_force_hand_example():
    spec = codes.polar_code(2, 2)
    assert spec.info_set == (3, 4)
    llr = np.array([0.9, -0.4, 1.3, 0.2])
    pms = []
    for _, u, _ in codebook(spec):
        dec, _ = naive_decision_llrs(llr, 2, lambda i, l: u[i])
        pms.append(sum(abs(l) for l, b in zip(dec, u) if b != (l < 0)))
    got_u, got_pm = brute_force_ml(spec, llr)
    k = int(np.argmin(pms))
    assert got_pm == pytest.approx(pms[k])
    assert np.array_equal(got_u, list(codebook(spec))[k][1])


def test_brute_force_scale_invariant():
    spec = codes.sample_drm_polar(codes.rm_polar_code(4, 2, 8), 1)
    for _, llr in _noisy(spec, 1.0, 5, 200):
        u1, pm1 = brute_force_ml(spec, llr)
        u2, pm2 = brute_force_ml(spec, 3.5 * llr)
        assert np.array_equal(u1, u2) and pm2 == pytest.approx(3.5 * pm1)


def test_brute_force_refuses_large_k():
    with pytest.raises(ValueError):
        brute_force_ml(codes.polar_code(5, 21), np.zeros(32))
