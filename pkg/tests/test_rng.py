import numpy as np
import pytest

from phishsim.rng import RandomStream


def test_same_path_same_sequence():
    a, b = RandomStream(42, 7), RandomStream(42, 7)
    assert [a.random() for _ in range(1000)] == [b.random() for _ in range(1000)]


def test_paths_differ():
    a, b = RandomStream(42, 0), RandomStream(42, 1)
    assert [a.random() for _ in range(10)] != [b.random() for _ in range(10)]


def test_block_buffering_matches_direct_philox():
    ss = np.random.SeedSequence(5, spawn_key=(3,))
    direct = np.random.Generator(np.random.Philox(ss)).random(1000)
    stream = RandomStream(5, 3)
    assert np.array_equal(direct, [stream.random() for _ in range(1000)])


def test_spawn_extends_path():
    child = RandomStream(9, 1).spawn(2)
    assert child.path == (1, 2)
    assert child.random() == RandomStream(9, 1, 2).random()


def test_draw_counter_and_range():
    s = RandomStream(0)
    xs = [s.random() for _ in range(600)]
    assert s.draws == 600
    assert min(xs) >= 0 and max(xs) < 1


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(ValueError):
        RandomStream(seed)
