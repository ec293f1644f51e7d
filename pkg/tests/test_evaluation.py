import numpy as np
import pytest

from nfcs.channel import ArrayConfig, ScenarioPrior
from nfcs.dictionary import GridSpec, build_spatial_dictionary
from nfcs.evaluation import (
    DB_FLOOR,
    BenchmarkSpec,
    ResultTable,
    bench_test_seed,
    convergence_sweep,
    mean_nmse_db,
    nmse,
    nmse_db,
    run_benchmark,
    to_db,
    write_convergence_csv,
    write_history_csv,
)
from nfcs.measurement import make_dataset, sample_combiner
from nfcs.numerics import Rng
from nfcs.unfolded import (
    MissingCheckpoint,
    TrainConfig,
    init_lista_params,
    init_sdl_params,
)

CFG = ArrayConfig(n_antennas=16, carrier_freq=28e9)
GRID = GridSpec(g_angle=8, g_dist=4)
DIC = build_spatial_dictionary(CFG, GRID)
W = sample_combiner(CFG, 8, Rng(11))
PRIOR = ScenarioPrior()


def test_nmse_closed_forms():
    h = np.array([3.0 + 0j, 4.0 + 0j])
    assert nmse(h, h) == 0.0
    assert nmse(np.zeros(2), h) == pytest.approx(1.0)
    assert nmse(2 * h, h) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        nmse(h, np.zeros(2))


def test_to_db_floor():
    assert to_db(1.0) == 0.0
    assert to_db(0.1) == pytest.approx(-10.0)
    assert to_db(0.0) == DB_FLOOR
    assert to_db(1e-15) == DB_FLOOR
    assert nmse_db(np.ones(3), np.ones(3)) == DB_FLOOR


def test_mean_nmse_db_is_db_of_mean_ratio():
    target = np.array([[1.0 + 0j, 0.0], [0.0, 2.0 + 0j]])
    pred = np.array([[0.0 + 0j, 0.0], [0.0, 2.0 + 0j]])
    # ratios are 1.0 and 0.0; mean 0.5
    assert mean_nmse_db(pred, target) == pytest.approx(10 * np.log10(0.5))
    with pytest.raises(ValueError):
        mean_nmse_db(pred, np.zeros_like(target))


def test_benchmark_spec_validation():
    with pytest.raises(ValueError):
        BenchmarkSpec(methods=("omp", "amp"))
    with pytest.raises(ValueError):
        BenchmarkSpec(n_samples=0)


def test_bench_test_seed_spacing():
    seeds = [bench_test_seed(0, i) for i in range(4)]
    assert len(set(seeds)) == 4
    assert min(np.diff(seeds)) >= 100_000


def test_result_table_lookup_and_csv(tmp_path):
    table = ResultTable(meta={"seed": 3})
    table.add("omp", 0.0, -1.5, 12.25, 64)
    table.add("omp", 9.0, -3.0, 11.0, 64)
    assert table.lookup("omp", 9.0) == -3.0
    with pytest.raises(KeyError):
        table.lookup("fista", 0.0)
    path = tmp_path / "bench.csv"
    table.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed,3"
    assert lines[1] == "method,snr_db,nmse_db,runtime_ms,n_samples"
    assert lines[2] == "omp,0.000,-1.500000,12.250,64"
    table.to_csv(path, timing=False)
    assert "12.250" not in path.read_text()
    assert ",0.000,64" in path.read_text().splitlines()[2]


def test_run_benchmark_classic_only():
    spec = BenchmarkSpec(methods=("omp", "fista"), snr_points_db=(0.0, 18.0),
                         n_samples=16, omp_iters=4, iters=40)
    table = run_benchmark(CFG, PRIOR, DIC, W, spec)
    assert len(table.rows) == 4
    assert all(np.isfinite(r[2]) for r in table.rows)
    assert all(r[3] > 0 for r in table.rows)  # per-sample runtime recorded
    # more SNR helps the sparse solvers on average
    assert table.lookup("fista", 18.0) < table.lookup("fista", 0.0)
    assert table.lookup("omp", 18.0) < table.lookup("omp", 0.0)


def test_run_benchmark_reruns_are_identical():
    spec = BenchmarkSpec(methods=("fista",), snr_points_db=(9.0,),
                         n_samples=8, iters=30)
    a = run_benchmark(CFG, PRIOR, DIC, W, spec)
    b = run_benchmark(CFG, PRIOR, DIC, W, spec)
    assert [r[:3] for r in a.rows] == [r[:3] for r in b.rows]


def test_run_benchmark_learned_needs_checkpoint():
    spec = BenchmarkSpec(methods=("lista",), snr_points_db=(9.0,), n_samples=4)
    with pytest.raises(MissingCheckpoint):
        run_benchmark(CFG, PRIOR, DIC, W, spec)


def test_run_benchmark_learned_with_params():
    lista = init_lista_params(2, DIC.size, 8, Rng(1), "scaled")
    sdl = init_sdl_params(2, 16, 8, 16, Rng(2), "scaled")
    spec = BenchmarkSpec(methods=("lista", "sdl-lista"), snr_points_db=(9.0,),
                         n_samples=8)
    table = run_benchmark(CFG, PRIOR, DIC, W, spec,
                          checkpoints={"lista": lista, "sdl-lista": sdl})
    assert len(table.rows) == 2
    assert all(np.isfinite(r[2]) for r in table.rows)


def test_run_benchmark_rejects_wrong_params_type():
    sdl = init_sdl_params(2, 16, 8, 16, Rng(2), "scaled")
    spec = BenchmarkSpec(methods=("lista",), snr_points_db=(9.0,), n_samples=4)
    with pytest.raises(TypeError):
        run_benchmark(CFG, PRIOR, DIC, W, spec, checkpoints={"lista": sdl})


def test_write_history_csv(tmp_path):
    history = [(1, 2.5e-5, -1.25, 0.7), (2, 2.0e-5, -2.0, 1.4)]
    path = tmp_path / "hist.csv"
    write_history_csv(path, history)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,train_loss,test_nmse_db,wall_seconds"
    assert lines[1].startswith("1,2.5") and lines[1].endswith("0.700")
    write_history_csv(path, history, timing=False)
    assert all(line.endswith("0.000") for line in path.read_text().splitlines()[1:])


def test_convergence_sweep_block_layout():
    train_ds = make_dataset("sdl", 32, CFG, PRIOR, DIC, W, (0.0, 27.0),
                            base_seed=500).materialize()
    eval_ds = make_dataset("sdl", 8, CFG, PRIOR, DIC, W, (0.0, 27.0),
                           base_seed=600).materialize()
    base = TrainConfig(epochs=2, batch_size=16, lr=1e-3, seed=3,
                       init_scheme="structured")
    seen = []
    blocks = convergence_sweep([1, 2], 2, train_ds, eval_ds, DIC, W, base,
                               g_sparse=16,
                               progress=lambda l, s, r: seen.append((l, s)))
    assert [(l, s) for l, s, _ in blocks] == [(1, 3), (1, 4), (2, 3), (2, 4)]
    assert seen == [(1, 3), (1, 4), (2, 3), (2, 4)]
    for _, _, history in blocks:
        assert len(history) == 2
        assert all(np.isfinite(row[2]) for row in history)


def test_write_convergence_csv(tmp_path):
    blocks = [(2, 0, [(1, 1e-5, -1.0, 0.5)]), (4, 1, [(1, 9e-6, -1.5, 0.9)])]
    path = tmp_path / "conv.csv"
    write_convergence_csv(path, blocks)
    lines = path.read_text().splitlines()
    assert lines[0] == "layers,epoch,train_loss,test_nmse_db"
    assert lines[1] == "# seed,0"
    assert lines[2].startswith("2,1,")
    assert lines[3] == "# seed,1"
    assert lines[4].startswith("4,1,")
