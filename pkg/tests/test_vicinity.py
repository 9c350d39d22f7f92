import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from satexplain.core import Instance, hamming
from satexplain.oracles import ThresholdOracle, TruthTableOracle
from satexplain.vicinity import (
    VicinityTooSmallError,
    default_radius,
    filter_dataset_vicinity,
    read_instances,
    sample_vicinity,
)

CONST0 = TruthTableOracle(3, (0,) * 8)


def test_radius_one_exhausts_the_ball():
    x = Instance((0, 0, 0))
    data = sample_vicinity(x, CONST0, radius=1, count=3, seed=1)
    assert not data.truncated
    rows = [inst.values for inst, _ in data.rows]
    assert rows[0] == (0, 0, 0)
    assert sorted(rows[1:]) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    assert data.labels() == [0, 0, 0, 0]


def test_count_beyond_ball_flags_truncation():
    x = Instance((0, 0, 0))
    data = sample_vicinity(x, CONST0, radius=1, count=10, seed=1)
    assert data.truncated
    assert len(data) == 4  # the whole radius-1 ball plus x


def test_instance_itself_is_first_and_labeled():
    oracle = ThresholdOracle(4, frozenset({0, 1}), 1)
    x = Instance((1, 0, 0, 0))
    data = sample_vicinity(x, oracle, radius=2, count=5, seed=3)
    assert data.rows[0][0] == x
    assert data.rows[0][1] == oracle.predict(x)


def test_all_samples_within_radius_at_scale():
    n, radius = 784, 250
    oracle = ThresholdOracle(n, frozenset(range(10)), 5)
    x = Instance(tuple([0] * n))
    data = sample_vicinity(x, oracle, radius=radius, count=10_000, seed=11)
    assert len(data) == 10_001
    assert all(1 <= hamming(z, x) <= radius for z, _ in data.rows[1:])


def test_sampling_is_deterministic_in_the_seed():
    oracle = ThresholdOracle(12, frozenset({0, 5}), 1)
    x = Instance(tuple([0] * 12))
    a = sample_vicinity(x, oracle, radius=4, count=40, seed=7)
    b = sample_vicinity(x, oracle, radius=4, count=40, seed=7)
    c = sample_vicinity(x, oracle, radius=4, count=40, seed=8)
    assert a.rows == b.rows
    assert a.rows != c.rows


def test_samples_are_distinct_perturbations():
    oracle = CONST0
    x = Instance((0, 1, 0))
    data = sample_vicinity(x, oracle, radius=2, count=5, seed=2)
    seen = [z.values for z, _ in data.rows]
    assert len(set(seen)) == len(seen)
    assert all(z != x.values for z in seen[1:])


def test_invalid_parameters():
    x = Instance((0, 1))
    with pytest.raises(ValueError):
        sample_vicinity(x, CONST0, radius=0, count=1, seed=0)
    with pytest.raises(ValueError):
        sample_vicinity(x, CONST0, radius=3, count=1, seed=0)
    with pytest.raises(ValueError):
        sample_vicinity(x, CONST0, radius=1, count=0, seed=0)


# -- dataset filtering -----------------------------------------------------------


def test_filter_radius_zero_keeps_exact_matches_plus_x():
    oracle = CONST0
    x = Instance((0, 0, 0))
    pool = [Instance((0, 0, 0)), Instance((1, 0, 0)), Instance((0, 0, 0))]
    data = filter_dataset_vicinity(x, pool, oracle, radius=0)
    assert [z.values for z, _ in data.rows] == [(0, 0, 0)] * 3


def test_filter_radius_n_keeps_everything():
    oracle = CONST0
    x = Instance((0, 0, 0))
    pool = [Instance((1, 1, 1)), Instance((0, 1, 0))]
    data = filter_dataset_vicinity(x, pool, oracle, radius=3)
    assert len(data) == 3


def test_filter_error_when_nothing_in_range():
    oracle = CONST0
    x = Instance((0, 0, 0))
    with pytest.raises(VicinityTooSmallError):
        filter_dataset_vicinity(x, [Instance((1, 1, 1))], oracle, radius=1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_filter_matches_brute_force_distance_scan(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 10)
    oracle = TruthTableOracle(n, tuple(rng.randint(0, 1) for _ in range(2**n)))
    x = Instance(tuple(rng.randint(0, 1) for _ in range(n)))
    pool = [
        Instance(tuple(rng.randint(0, 1) for _ in range(n))) for _ in range(20)
    ]
    radius = rng.randint(0, n)
    expected = [z for z in pool if sum(a != b for a, b in zip(z.values, x.values)) <= radius]
    if not expected:
        with pytest.raises(VicinityTooSmallError):
            filter_dataset_vicinity(x, pool, oracle, radius)
        return
    data = filter_dataset_vicinity(x, pool, oracle, radius)
    assert [z for z, _ in data.rows[1:]] == expected


# -- defaults and file input -------------------------------------------------------


def test_default_radius_scales_with_dimension():
    assert default_radius(784) == 250
    assert default_radius(392) == 125
    assert default_radius(4) >= 1
    assert default_radius(2) <= 2


def test_read_instances(tmp_path):
    f = tmp_path / "data.txt"
    f.write_text("0101\n\n1111\n")
    rows = read_instances(f, 4)
    assert [r.to_string() for r in rows] == ["0101", "1111"]
    with pytest.raises(ValueError):
        read_instances(f, 5)
    f.write_text("01x1\n")
    with pytest.raises(ValueError):
        read_instances(f)
