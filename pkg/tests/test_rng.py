import numpy as np
import pytest
from hypothesis import given, strategies as st

from ymlab.rng import SplitMix64


def test_reference_outputs():
    r = SplitMix64(0)
    assert r.next_u64() == 0xE220A8397B1DCDAF
    assert r.next_u64() == 0x6E789E6AA1B965F4


def test_batch_matches_single_draws():
    a, b = SplitMix64(7), SplitMix64(7)
    batch = a.integers(5)
    assert [int(x) for x in batch] == [b.next_u64() for _ in range(5)]
    assert a.state == b.state


@given(st.integers(min_value=0, max_value=2 ** 64 - 1))
def test_uniforms_lie_in_unit_interval(seed):
    u = SplitMix64(seed).random(64)
    assert u.shape == (64,)
    assert np.all((u >= 0.0) & (u < 1.0))


def test_same_seed_same_stream():
    a = SplitMix64(42).standard_normal((3, 4))
    b = SplitMix64(42).standard_normal((3, 4))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, SplitMix64(43).standard_normal((3, 4)))


def test_scalar_draws():
    r = SplitMix64(3)
    assert isinstance(r.random(), float)
    assert isinstance(r.standard_normal(), float)


def test_odd_normal_count():
    assert SplitMix64(1).standard_normal(7).shape == (7,)


def test_normal_moments():
    z = SplitMix64(2024).standard_normal(200_000)
    assert abs(z.mean()) < 0.01
    assert z.std() == pytest.approx(1.0, abs=0.01)
