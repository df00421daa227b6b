import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topoqst.disorder import DisorderRealization, sample, sample_diagonal, sample_offdiagonal
from topoqst.lattice import sublattice_parity


def test_zero_strength_gives_zero_matrix():
    for fn in (sample_offdiagonal, sample_diagonal):
        r = fn(0.0, 10, seed=1, index=3)
        assert not np.any(r.matrix())


def test_same_seed_and_index_is_identical():
    a = sample_offdiagonal(0.2, 10, seed=99, index=7)
    b = sample_offdiagonal(0.2, 10, seed=99, index=7)
    np.testing.assert_array_equal(a.values, b.values)
    c = sample_offdiagonal(0.2, 10, seed=99, index=8)
    assert not np.array_equal(a.values, c.values)


def test_offdiagonal_layout():
    r = sample_offdiagonal(0.2, 10, seed=4, index=0)
    assert r.values.shape == (9,)
    m = r.matrix()
    np.testing.assert_array_equal(m, m.T)
    assert not np.any(np.diag(m))
    # 1-based sites (2,3), (4,5), ... are 0-based (1,2), (3,4), ...
    mask = np.zeros_like(m, dtype=bool)
    for j in range(1, 19, 2):
        mask[j, j + 1] = mask[j + 1, j] = True
    assert not np.any(m[~mask])
    np.testing.assert_array_equal(np.diag(m, 1)[1::2], r.values)


def test_diagonal_range():
    r = sample_diagonal(0.2, 10, seed=4, index=0)
    assert r.values.shape == (20,)
    assert np.all(np.abs(r.values) < 0.2)
    np.testing.assert_array_equal(r.matrix(), np.diag(r.values))


def test_offdiagonal_moments():
    sigma = 0.2
    draws = np.concatenate([sample_offdiagonal(sigma, 10, seed=2024, index=k).values for k in range(12_000)])
    assert draws.size >= 100_000
    se = sigma / np.sqrt(3) / np.sqrt(draws.size)
    assert abs(draws.mean()) < 3 * se
    assert draws.var() == pytest.approx(sigma**2 / 3, rel=0.02)
    assert np.all(np.abs(draws) < sigma)


def test_substreams_uncorrelated():
    n = 10_000
    x = np.array([sample_diagonal(1.0, 1, seed=77, index=2 * k).values[0] for k in range(n)])
    y = np.array([sample_diagonal(1.0, 1, seed=77, index=2 * k + 1).values[0] for k in range(n)])
    # |r| < 4 / sqrt(n) has probability ~1 - 6e-5 under independence
    assert abs(np.corrcoef(x, y)[0, 1]) < 4 / np.sqrt(n)
    a = np.array([sample_diagonal(1.0, 1, seed=5, index=k).values[0] for k in range(n)])
    b = np.array([sample_diagonal(1.0, 1, seed=6, index=k).values[0] for k in range(n)])
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / np.sqrt(n)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 30), strength=st.floats(0.0, 2.0), seed=st.integers(0, 2**63), index=st.integers(0, 10**6))
def test_chiral_symmetry_algebra(n, strength, seed, index):
    s = np.diag(sublattice_parity(2 * n))
    off = sample_offdiagonal(strength, n, seed, index).matrix()
    on = sample_diagonal(strength, n, seed, index).matrix()
    np.testing.assert_array_equal(s @ off @ s, -off)
    np.testing.assert_array_equal(s @ on @ s, on)


def test_json_round_trip():
    r = sample("on-diagonal", 0.3, 4, seed=12, index=5)
    payload = json.loads(r.to_json())
    assert payload["kind"] == "on-diagonal" and payload["seed"] == 12 and payload["index"] == 5
    back = DisorderRealization.from_json(r.to_json())
    np.testing.assert_array_equal(back.values, r.values)
    np.testing.assert_array_equal(back.matrix(), r.matrix())


def test_validation():
    with pytest.raises(ValueError):
        sample_diagonal(-0.1, 3, 0, 0)
    with pytest.raises(ValueError):
        sample("gaussian", 0.1, 3, 0, 0)
    with pytest.raises(ValueError):
        DisorderRealization("on-diagonal", 0.1, 3, np.zeros(5), 0, 0)
