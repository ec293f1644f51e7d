import numpy as np
import pytest

from nfcs.channel import ArrayConfig, ScenarioPrior
from nfcs.dictionary import GridSpec, build_spatial_dictionary
from nfcs.measurement import (
    CombinerMatrix,
    Dataset,
    ZeroSignal,
    identity_combiner,
    load_dataset,
    make_dataset,
    observe,
    sample_combiner,
    save_dataset,
    sigma_for_snr,
)
from nfcs._binio import FormatError
from nfcs.numerics import Rng

CFG = ArrayConfig(n_antennas=16, carrier_freq=28e9)
GRID = GridSpec(g_angle=12, g_dist=3)
DIC = build_spatial_dictionary(CFG, GRID)
PRIOR = ScenarioPrior()


def make_w(n_rf=4, seed=1):
    return sample_combiner(CFG, n_rf, Rng(seed))


def test_phase_combiner_entries_have_fixed_modulus():
    w = make_w()
    assert w.kind == "phase"
    np.testing.assert_allclose(np.abs(w.w), 1.0 / np.sqrt(16), rtol=1e-12)
    assert w.n_rf == 4
    assert w.n_antennas == 16


def test_phase_combiner_validation():
    bad = np.ones((2, 4), dtype=complex)
    with pytest.raises(ValueError):
        CombinerMatrix(w=bad, kind="phase")


def test_identity_combiner():
    w = identity_combiner(5)
    np.testing.assert_array_equal(w.w, np.eye(5, dtype=complex))
    assert w.kind == "identity"


def test_orthonormal_combiner_rows():
    w = sample_combiner(CFG, 6, Rng(3), orthonormal_rows=True)
    gram = w.w @ w.w.conj().T
    np.testing.assert_allclose(gram, np.eye(6), atol=1e-12)
    assert w.kind == "orthonormal"


def test_combiner_is_seed_deterministic():
    a = sample_combiner(CFG, 4, Rng(9)).w
    b = sample_combiner(CFG, 4, Rng(9)).w
    np.testing.assert_array_equal(a, b)


def test_sigma_for_snr_definition():
    w = make_w()
    h = Rng(0).complex_normal(1.0, 16)
    power = float(np.linalg.norm(w.w @ h) ** 2)
    assert sigma_for_snr(w, h, 0.0) == pytest.approx(power / 4)
    assert sigma_for_snr(w, h, 10.0) == pytest.approx(power / 40)


def test_observe_noise_power_matches_sigma2():
    w = make_w()
    h = Rng(5).complex_normal(1.0, 16)
    rng = Rng(6)
    sigma2 = 0.25
    clean = w.w @ h
    acc = 0.0
    trials = 4000
    for _ in range(trials):
        obs = observe(w, h, sigma2, rng)
        acc += float(np.sum(np.abs(obs.y - clean) ** 2))
    per_entry = acc / (trials * w.n_rf)
    assert per_entry == pytest.approx(sigma2, rel=0.05)


def test_observe_zero_channel_is_pure_noise():
    # h = 0 is legal for observe itself: the output is a noise-only draw.
    w = make_w()
    rng = Rng(0)
    sigma2 = 0.5
    acc = 0.0
    trials = 10_000
    for _ in range(trials):
        obs = observe(w, np.zeros(16, dtype=complex), sigma2, rng)
        acc += float(np.linalg.norm(obs.y) ** 2)
    assert acc / trials == pytest.approx(w.n_rf * sigma2, rel=0.03)


def test_sigma_for_snr_zero_signal_raises():
    w = make_w()
    with pytest.raises(ZeroSignal):
        sigma_for_snr(w, np.zeros(16, dtype=complex), 0.0)


def test_observe_snr_round_trip():
    w = make_w()
    h = Rng(7).complex_normal(1.0, 16)
    rng = Rng(8)
    snr_db = 12.0
    sigma2 = sigma_for_snr(w, h, snr_db)
    acc = 0.0
    trials = 2000
    clean = w.w @ h
    for _ in range(trials):
        obs = observe(w, h, sigma2, rng)
        acc += float(np.sum(np.abs(obs.y - clean) ** 2))
    measured = 10.0 * np.log10(np.linalg.norm(clean) ** 2 / (acc / trials))
    assert measured == pytest.approx(snr_db, abs=0.3)


def test_dataset_sample_is_order_independent_and_seeded():
    w = make_w()
    ds = make_dataset("sdl", 20, CFG, PRIOR, DIC, w, (0.0, 27.0), base_seed=100)
    y5, h5, s5 = ds.sample(5)
    ds.sample(11)
    y5b, h5b, s5b = ds.sample(5)
    np.testing.assert_array_equal(y5, y5b)
    np.testing.assert_array_equal(h5, h5b)
    assert s5 == s5b
    fresh = make_dataset("sdl", 20, CFG, PRIOR, DIC, w, (0.0, 27.0), base_seed=100)
    y5c, _, _ = fresh.sample(5)
    np.testing.assert_array_equal(y5, y5c)


def test_dataset_batch_stacks_samples():
    w = make_w()
    ds = make_dataset("sdl", 10, CFG, PRIOR, DIC, w, (5.0, 5.0), base_seed=3)
    y, labels, snr = ds.batch([2, 7])
    y7, h7, s7 = ds.sample(7)
    np.testing.assert_array_equal(y[1], y7)
    np.testing.assert_array_equal(labels[1], h7)
    assert snr[1] == s7
    assert labels.shape == (2, 16)


def test_dataset_materialize_thread_count_invariance():
    w = make_w()
    a = make_dataset("sdl", 30, CFG, PRIOR, DIC, w, (0.0, 27.0), base_seed=50)
    b = make_dataset("sdl", 30, CFG, PRIOR, DIC, w, (0.0, 27.0), base_seed=50)
    ya, la, sa = a.materialize(threads=1).arrays()
    yb, lb, sb = b.materialize(threads=3).arrays()
    np.testing.assert_array_equal(ya, yb)
    np.testing.assert_array_equal(la, lb)
    np.testing.assert_array_equal(sa, sb)


def test_sdl_labels_are_true_channels():
    w = make_w()
    ds = make_dataset("sdl", 5, CFG, PRIOR, DIC, w, (200.0, 200.0), base_seed=21)
    y, h, _ = ds.sample(0)
    # At 200 dB SNR the observation is essentially noiseless W h*.
    np.testing.assert_allclose(y, w.w @ h, rtol=1e-9)


def test_lista_on_grid_observation_reconstructs():
    w = make_w()
    ds = make_dataset("lista", 8, CFG, PRIOR, DIC, w, (200.0, 200.0),
                      on_grid=True, base_seed=33)
    psi = w.w @ DIC.atoms
    for i in range(8):
        y, alpha, _ = ds.sample(i)
        np.testing.assert_allclose(y, psi @ alpha, rtol=1e-9)
        assert np.count_nonzero(alpha) <= PRIOR.q_range[1]


def test_lista_off_grid_observation_uses_true_channel():
    w = make_w()
    on = make_dataset("lista", 4, CFG, PRIOR, DIC, w, (200.0, 200.0),
                      on_grid=True, base_seed=77)
    off = make_dataset("lista", 4, CFG, PRIOR, DIC, w, (200.0, 200.0),
                       on_grid=False, base_seed=77)
    y_on, a_on, _ = on.sample(0)
    y_off, a_off, _ = off.sample(0)
    np.testing.assert_array_equal(a_on, a_off)
    assert not np.allclose(y_on, y_off)


def test_lista_kind_requires_grid_metadata():
    w = make_w()
    from nfcs.dictionary import Dictionary
    bare = Dictionary(atoms=DIC.atoms, grid_mu=DIC.grid_mu,
                      grid_theta=DIC.grid_theta, grid=None)
    with pytest.raises(ValueError):
        make_dataset("lista", 4, CFG, PRIOR, bare, w, (0.0, 27.0))


def test_dataset_validation_errors():
    w = make_w()
    with pytest.raises(ValueError):
        make_dataset("bogus", 4, CFG, PRIOR, DIC, w, (0.0, 27.0))
    with pytest.raises(ValueError):
        make_dataset("sdl", 0, CFG, PRIOR, DIC, w, (0.0, 27.0))
    with pytest.raises(ValueError):
        make_dataset("sdl", 4, CFG, PRIOR, DIC, w, (10.0, 0.0))
    ds = make_dataset("sdl", 4, CFG, PRIOR, DIC, w, (0.0, 27.0))
    with pytest.raises(IndexError):
        ds.sample(4)


def test_dataset_save_load_round_trip(tmp_path):
    w = make_w()
    ds = make_dataset("lista", 12, CFG, PRIOR, DIC, w, (0.0, 27.0), base_seed=8)
    p = tmp_path / "data.nfc"
    save_dataset(p, ds)
    back = load_dataset(p)
    assert back.kind == "lista"
    assert back.size == 12
    ya, la, sa = ds.arrays()
    yb, lb, sb = back.arrays()
    np.testing.assert_array_equal(ya, yb)
    np.testing.assert_array_equal(la, lb)
    np.testing.assert_array_equal(sa, sb)
    y3, l3, s3 = back.sample(3)
    np.testing.assert_array_equal(y3, ya[3])


def test_dataset_load_rejects_corrupt_files(tmp_path):
    w = make_w()
    ds = make_dataset("sdl", 3, CFG, PRIOR, DIC, w, (0.0, 27.0))
    p = tmp_path / "data.nfc"
    save_dataset(p, ds)
    raw = p.read_bytes()
    bad_magic = tmp_path / "bad.nfc"
    bad_magic.write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(FormatError):
        load_dataset(bad_magic)
    short = tmp_path / "short.nfc"
    short.write_bytes(raw[:-4])
    with pytest.raises(FormatError):
        load_dataset(short)
