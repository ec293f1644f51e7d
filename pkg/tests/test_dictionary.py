import numpy as np
import pytest

from nfcs.channel import ArrayConfig, PathParam, PathSet, fresnel_atom
from nfcs.dictionary import (
    CoherenceReport,
    Dictionary,
    GridSpec,
    InvalidAngle,
    ZeroColumn,
    build_spatial_dictionary,
    coherence_report,
    load_dictionary,
    mutual_coherence,
    quantize_paths,
    save_dictionary,
    steering_vector,
)
from nfcs._binio import FormatError
from nfcs.numerics import Rng

CFG = ArrayConfig(n_antennas=16, carrier_freq=28e9)


def test_gridspec_axes_are_endpoint_inclusive():
    grid = GridSpec(g_angle=5, g_dist=3)
    np.testing.assert_allclose(grid.angles(), [-1.0, -0.5, 0.0, 0.5, 1.0])
    np.testing.assert_allclose(grid.invdists(), [0.0, 0.25, 0.5])
    assert grid.total == 15


def test_gridspec_column_order_is_distance_major():
    grid = GridSpec(g_angle=4, g_dist=2)
    assert grid.column(0, 0) == 0
    assert grid.column(3, 0) == 3
    assert grid.column(0, 1) == 4
    assert grid.column(2, 1) == 6


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(g_angle=0, g_dist=2)
    with pytest.raises(ValueError):
        GridSpec(angle_domain=(-2.0, 1.0))
    with pytest.raises(ValueError):
        GridSpec(invdist_domain=(-0.1, 0.5))


def test_steering_vector_matches_quadratic_phase_formula():
    # Element-wise oracle written out longhand.
    mu, theta = 7.0, -0.35
    atom = steering_vector(CFG, mu, theta)
    k = CFG.wavenumber
    dd = CFG.spacing
    for n in range(CFG.n_antennas):
        pos = n * dd
        want = np.exp(-1j * k * (pos * pos / (2.0 * mu) - pos * np.sin(theta)))
        assert atom[n] == pytest.approx(want, rel=1e-12)


def test_steering_vector_infinite_distance_is_plane_wave():
    atom = steering_vector(CFG, np.inf, 0.2)
    pos = CFG.element_positions()
    want = np.exp(1j * CFG.wavenumber * pos * np.sin(0.2))
    np.testing.assert_allclose(atom, want, rtol=1e-12)


def test_steering_vector_rejects_bad_inputs():
    with pytest.raises(InvalidAngle):
        steering_vector(CFG, 10.0, np.nan)
    with pytest.raises(ValueError):
        steering_vector(CFG, -3.0, 0.0)


def test_build_spatial_dictionary_layout_and_entries():
    grid = GridSpec(g_angle=6, g_dist=3)
    dic = build_spatial_dictionary(CFG, grid)
    assert dic.atoms.shape == (16, 18)
    assert dic.size == 18
    sines = grid.angles()
    invd = grid.invdists()
    for i in (0, 2, 5):
        for j in (0, 1, 2):
            col = grid.column(i, j)
            mu = np.inf if invd[j] == 0.0 else 1.0 / invd[j]
            theta = float(np.arcsin(sines[i]))
            np.testing.assert_allclose(dic.atoms[:, col],
                                       steering_vector(CFG, mu, theta),
                                       rtol=1e-12)
            assert dic.grid_mu[col] == mu
            assert dic.grid_theta[col] == pytest.approx(theta)
    np.testing.assert_allclose(np.abs(dic.atoms), 1.0, rtol=1e-12)


def test_quantize_paths_on_grid_point_keeps_gain():
    grid = GridSpec(g_angle=9, g_dist=5)
    # sin(theta) = 0.25 and 1/mu = 0.125 sit exactly on grid points.
    p = PathParam(mu=8.0, theta=float(np.arcsin(0.25)), d=3.0, rho=1.0)
    ps = PathSet.derive(CFG, [p])
    code = quantize_paths(CFG, grid, ps)
    assert list(code.support) == [grid.column(5, 1)]
    assert code.values[code.support[0]] == pytest.approx(ps.alphas[0], rel=1e-12)


def test_quantize_paths_rounds_to_nearest_cell():
    grid = GridSpec(g_angle=3, g_dist=2)  # sines -1,0,1; invdist 0,0.5
    p = PathParam(mu=2.1, theta=0.1, d=0.0, rho=1.0)  # 1/mu=0.476 -> j=1
    ps = PathSet.derive(CFG, [p])
    code = quantize_paths(CFG, grid, ps)
    assert list(code.support) == [grid.column(1, 1)]


def test_quantize_paths_collision_sums_gains():
    grid = GridSpec(g_angle=3, g_dist=2)
    pa = PathParam(mu=50.0, theta=0.01, d=1.0, rho=1.0)
    pb = PathParam(mu=60.0, theta=-0.02, d=2.0, rho=1.0)
    ps = PathSet.derive(CFG, [pa, pb])
    code = quantize_paths(CFG, grid, ps)
    assert len(code.support) == 1
    assert code.values[code.support[0]] == pytest.approx(
        ps.alphas[0] + ps.alphas[1], rel=1e-12)


def brute_force_coherence(m):
    g = m.shape[1]
    norms = np.linalg.norm(m, axis=0)
    best = -1.0
    best_pair = None
    for a in range(g):
        for b in range(g):
            if a == b:
                continue
            val = abs(np.vdot(m[:, a], m[:, b])) / (norms[a] * norms[b])
            if val > best + 1e-15:
                best = val
                best_pair = (a, b)
    return best, best_pair


def test_mutual_coherence_matches_brute_force():
    rng = np.random.default_rng(17)
    for trial in range(25):
        m = rng.standard_normal((6, 9)) + 1j * rng.standard_normal((6, 9))
        nu, pair = mutual_coherence(m)
        want, want_pair = brute_force_coherence(m)
        assert nu == pytest.approx(want, rel=1e-12), f"trial {trial}"
        assert {pair[0], pair[1]} == {want_pair[0], want_pair[1]}


def test_mutual_coherence_orthonormal_columns():
    q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((8, 4))
                        + 1j * np.random.default_rng(4).standard_normal((8, 4)))
    nu, _ = mutual_coherence(q)
    assert nu < 1e-12


def test_mutual_coherence_duplicate_columns_is_one():
    col = np.array([1.0 + 1j, 2.0, -1j])
    m = np.stack([col, 2.0 * col, np.array([1.0, 0, 0])], axis=1)
    nu, pair = mutual_coherence(m)
    assert nu == pytest.approx(1.0, rel=1e-12)
    assert {pair[0], pair[1]} == {0, 1}


def test_mutual_coherence_zero_column_raises():
    m = np.zeros((3, 2), dtype=complex)
    m[:, 0] = 1.0
    with pytest.raises(ZeroColumn):
        mutual_coherence(m)


def test_coherence_report_tiny_grid():
    grid = GridSpec(g_angle=8, g_dist=3)
    rep = coherence_report(CFG, grid)
    n_pairs = sum(1 for _ in __import__("nfcs.dictionary", fromlist=["x"])
                  ._adjacent_pairs(grid))
    assert len(rep.rows) == n_pairs
    worst = max(r[3] for r in rep.rows)
    assert rep.worst_adjacent[3] == pytest.approx(worst)
    assert rep.global_exhaustive
    assert rep.global_nu >= worst - 1e-12
    assert rep.thresholds == {q: 1.0 / (2 * q - 1) for q in range(2, 7)}
    for q, thr in rep.thresholds.items():
        assert rep.violations[q] == (rep.global_nu >= thr)


def test_coherence_report_pair_types_cover_grid_neighbors():
    grid = GridSpec(g_angle=4, g_dist=3)
    rep = coherence_report(CFG, grid)
    kinds = {r[0] for r in rep.rows}
    assert kinds == {"angle", "dist", "diag", "antidiag"}
    # 3*3 angle steps per row times 3 rows, etc.
    assert sum(1 for r in rep.rows if r[0] == "angle") == 9
    assert sum(1 for r in rep.rows if r[0] == "dist") == 8
    assert sum(1 for r in rep.rows if r[0] == "diag") == 6
    assert sum(1 for r in rep.rows if r[0] == "antidiag") == 6


def test_coherence_report_respects_combiner():
    # Avoid sin = +/-1 grid endpoints, whose atoms alias at half-wavelength
    # spacing and pin the global coherence to 1.0 for any combiner.
    grid = GridSpec(g_angle=6, g_dist=2, angle_domain=(-0.8, 0.8))
    w = np.zeros((4, 16), dtype=complex)
    w[:4, :4] = np.eye(4)
    rep_i = coherence_report(CFG, grid)
    rep_w = coherence_report(CFG, grid, w=w)
    assert rep_i.global_nu != pytest.approx(rep_w.global_nu)
    assert rep_i.worst_adjacent[3] != pytest.approx(rep_w.worst_adjacent[3])


def test_coherence_report_sampled_global(tmp_path):
    grid = GridSpec(g_angle=10, g_dist=3)
    rep = coherence_report(CFG, grid, pair_budget=50, rng=Rng(0))
    assert not rep.global_exhaustive
    full = coherence_report(CFG, grid)
    assert rep.global_nu <= full.global_nu + 1e-12
    p = tmp_path / "rep.csv"
    rep.to_csv(p)
    text = p.read_text()
    assert "sampled" in text
    assert text.count("# lemma1_threshold") == 5


def test_coherence_report_csv_layout(tmp_path):
    grid = GridSpec(g_angle=5, g_dist=2)
    rep = coherence_report(CFG, grid)
    p = tmp_path / "rep.csv"
    rep.to_csv(p)
    lines = p.read_text().splitlines()
    meta = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    assert meta[0].startswith("# worst_adjacent,")
    assert meta[1].startswith("# global_nu,")
    assert body[0] == "pair_type,g1,g2,coherence"
    assert len(body) == 1 + len(rep.rows)


def test_dictionary_save_load_round_trip(tmp_path):
    grid = GridSpec(g_angle=7, g_dist=2)
    dic = build_spatial_dictionary(CFG, grid)
    p = tmp_path / "dict.nfc"
    save_dictionary(p, dic)
    back = load_dictionary(p)
    np.testing.assert_array_equal(back.atoms, dic.atoms)
    np.testing.assert_array_equal(back.grid_mu, dic.grid_mu)
    np.testing.assert_array_equal(back.grid_theta, dic.grid_theta)


def test_dictionary_load_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.nfc"
    p.write_bytes(b"NOTADICT" + b"\x00" * 32)
    with pytest.raises(FormatError):
        load_dictionary(p)


def test_dictionary_load_rejects_truncation_and_trailing(tmp_path):
    grid = GridSpec(g_angle=3, g_dist=2)
    dic = build_spatial_dictionary(CFG, grid)
    p = tmp_path / "dict.nfc"
    save_dictionary(p, dic)
    raw = p.read_bytes()
    short = tmp_path / "short.nfc"
    short.write_bytes(raw[:-8])
    with pytest.raises(FormatError):
        load_dictionary(short)
    longer = tmp_path / "long.nfc"
    longer.write_bytes(raw + b"\x00")
    with pytest.raises(FormatError):
        load_dictionary(longer)
