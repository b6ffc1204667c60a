import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dwfmm.config import DataConfig, ExperimentConfig, GridConfig, KernelConfig
from dwfmm.data import (
    dimension_weights,
    generate_data,
    load_points,
    read_binary,
    read_csv,
    target_function,
    write_binary,
    write_csv,
)


def test_target_special_values():
    assert target_function(np.zeros((1, 3)))[0] == 0.5
    assert abs(target_function(np.array([[0.25, 0.0]]))[0]) < 1e-16
    # continuity at the origin
    assert target_function(np.array([[1e-9, 0.0]]))[0] == pytest.approx(0.5, rel=1e-12)


def test_generated_points_inside_box():
    x, y = generate_data(5000, 7, 3.0, seed=2)
    b = dimension_weights(7, 3.0)
    assert np.all(x >= 0) and np.all(x <= b)
    assert np.allclose(y, target_function(x))


def test_generation_deterministic():
    a = generate_data(100, 3, 2.0, seed=9)[0]
    b = generate_data(100, 3, 2.0, seed=9)[0]
    c = generate_data(100, 3, 2.0, seed=10)[0]
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_generation_errors():
    with pytest.raises(ValueError):
        generate_data(0, 2, 2.0)
    with pytest.raises(ValueError):
        dimension_weights(3, 0.0)


def test_csv_round_trip(tmp_path, rng):
    x, y = rng.random((20, 3)), rng.random(20)
    write_csv(tmp_path / "a.csv", x, y)
    x2, y2 = read_csv(tmp_path / "a.csv")
    assert np.array_equal(x, x2) and np.array_equal(y, y2)
    write_csv(tmp_path / "b.csv", x)
    x3, y3 = load_points(str(tmp_path / "b.csv"))
    assert np.array_equal(x, x3) and y3 is None


def test_binary_round_trip(tmp_path, rng):
    x = rng.random((17, 4))
    write_binary(tmp_path / "a.bin", x)
    assert np.array_equal(read_binary(tmp_path / "a.bin"), x)
    raw = (tmp_path / "a.bin").read_bytes()
    assert len(raw) == 16 + 8 * 17 * 4
    (tmp_path / "t.bin").write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        read_binary(tmp_path / "t.bin")


configs = st.builds(
    ExperimentConfig,
    data=st.builds(
        DataConfig,
        n=st.integers(1, 10**6),
        d=st.integers(1, 50),
        r=st.floats(0.1, 5.0),
        seed=st.integers(0, 2**32),
        input_file=st.none() | st.text(min_size=1, max_size=10),
    ),
    kernel=st.builds(KernelConfig, sigma=st.floats(1e-5, 10.0)),
    eta=st.floats(0.1, 4.0),
    q=st.floats(0, 12),
    leaf_size=st.none() | st.integers(1, 500),
    grid=st.builds(GridConfig, sigmas=st.none() | st.lists(st.floats(1e-3, 1.0), max_size=4)),
)


@given(configs)
def test_config_round_trip(cfg):
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(data=DataConfig(r=0.0))
    with pytest.raises(ValueError):
        ExperimentConfig(data=DataConfig(n=0))
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"unknown": 1})


def test_config_load(tmp_path):
    path = tmp_path / "c.json"
    path.write_text('{"q": 6, "data": {"n": 500}}')
    cfg = ExperimentConfig.load(path)
    assert cfg.q == 6 and cfg.data.n == 500 and cfg.data.d == 6
