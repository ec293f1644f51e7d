import numpy as np
import pytest
import yaml

from nfcs.config import (
    COMBINER_SEED_OFFSET,
    TEST_SEED_OFFSET,
    TRAIN_SEED_OFFSET,
    ConfigError,
    ExperimentConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    preset,
    render_config_template,
    save_config,
)


def small_cfg(**overrides):
    base = dict(n_antennas=16, g_angle=8, g_dist=4, n_rf=8, g_sparse=16,
                n_layers=2, train_size=64, test_size=16, epochs=2)
    base.update(overrides)
    return ExperimentConfig(**base).validate()


def test_presets_validate():
    desk = preset("desk")
    assert desk.n_antennas == 64 and desk.g_sparse == 128
    assert desk.g_angle * desk.g_dist == 512
    assert desk.n_layers == 6 and desk.train_size == 20000
    assert desk.init_scheme == "structured"
    paper = preset("paper")
    assert paper.n_antennas == 128 and paper.g_angle * paper.g_dist == 2048
    with pytest.raises(ConfigError):
        preset("laptop")


def test_validate_catches_bad_values():
    with pytest.raises(ConfigError):
        small_cfg(snr_range_db=(10.0, 0.0))
    with pytest.raises(ConfigError):
        small_cfg(lr=0.0)
    with pytest.raises(ConfigError):
        small_cfg(patience=0)
    with pytest.raises(ConfigError):
        small_cfg(init_scheme="kaiming")
    with pytest.raises(ConfigError):
        small_cfg(bench_methods=("omp", "vamp"))
    with pytest.raises(ConfigError):
        small_cfg(q_range=(0, 4))


def test_dict_round_trip():
    cfg = small_cfg(seed=9, init_scheme="structured")
    data = config_to_dict(cfg)
    assert data["seed"] == 9
    assert set(data) == {"array", "grid", "measurement", "prior", "model",
                         "train", "bench", "seed"}
    dup = config_from_dict(data)
    assert dup == cfg


def test_config_from_dict_rejects_unknowns():
    data = config_to_dict(small_cfg())
    data["typo_section"] = {}
    with pytest.raises(ConfigError):
        config_from_dict(data)
    data = config_to_dict(small_cfg())
    data["train"]["momentum"] = 0.9
    with pytest.raises(ConfigError):
        config_from_dict(data)
    with pytest.raises(ConfigError):
        config_from_dict([1, 2])


def test_yaml_file_round_trip(tmp_path):
    cfg = small_cfg(seed=4, lr=5e-4, init_scheme="structured")
    path = tmp_path / "exp.yaml"
    save_config(path, cfg)
    assert load_config(path) == cfg


def test_load_config_rejects_broken_yaml(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("train: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_template_parses_and_matches_preset():
    for name in ("desk", "paper"):
        text = render_config_template(name)
        cfg = config_from_dict(yaml.safe_load(text))
        assert cfg == preset(name)


def test_builders_consistent_with_fields():
    cfg = small_cfg()
    arr = cfg.array()
    assert arr.n_antennas == 16
    dic = cfg.dictionary()
    assert dic.size == 8 * 4
    w = cfg.combiner()
    assert w.w.shape == (8, 16)
    tc = cfg.train_config()
    assert tc.epochs == 2 and tc.seed == cfg.seed
    assert cfg.train_config(seed=77).seed == 77


def test_combiner_is_shared_across_stages():
    # Same root seed gives the identical combiner in separate invocations.
    a = small_cfg(seed=5).combiner()
    b = small_cfg(seed=5).combiner()
    np.testing.assert_array_equal(a.w, b.w)
    c = small_cfg(seed=6).combiner()
    assert not np.array_equal(a.w, c.w)


def test_seed_offsets_are_documented_constants():
    assert COMBINER_SEED_OFFSET == 1_000_003
    assert TRAIN_SEED_OFFSET == 2_000_003
    assert TEST_SEED_OFFSET == 3_000_007


def test_dataset_splits_use_disjoint_streams():
    cfg = small_cfg()
    dic = cfg.dictionary()
    w = cfg.combiner()
    train = cfg.dataset("sdl", "train", dic, w, size=8)
    test = cfg.dataset("sdl", "test", dic, w, size=8)
    y_train, _, _ = train.arrays()
    y_test, _, _ = test.arrays()
    assert not np.allclose(y_train, y_test)
    with pytest.raises(ConfigError):
        cfg.dataset("sdl", "validation", dic, w)


def test_dataset_sizes_follow_config():
    cfg = small_cfg()
    dic = cfg.dictionary()
    w = cfg.combiner()
    assert cfg.dataset("sdl", "train", dic, w).size == 64
    assert cfg.dataset("sdl", "test", dic, w).size == 16
    assert cfg.dataset("sdl", "test", dic, w, size=5).size == 5
