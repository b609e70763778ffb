import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memwalk.analysis import variance_series
from memwalk.classical import (
    CrwConfig,
    binomial_distribution,
    binomial_walk,
    hop_probabilities,
    info_update,
    run_memory_crw,
    simulate_block,
)
from memwalk.errors import PreconditionError

from conftest import crw_run


def test_info_no_decay_counts_visits():
    s = info_update(np.zeros(5), 2, 0.0, 13.0)
    s = info_update(s, 2, 0.0, 13.0)
    assert s[2] == 2.0 and s.sum() == 2.0


def test_info_single_visit_decays():
    kappa = 0.01
    s = info_update(np.zeros(3), 1, kappa, 13.0)
    for _ in range(25):
        s = info_update(s, 0, kappa, 13.0)
    assert s[1] == pytest.approx(math.exp(-kappa * 25), rel=1e-12)


def test_info_saturates():
    s = np.zeros(3)
    for _ in range(20):
        s = info_update(s, 1, 0.0, 13.0)
    assert s[1] == 13.0


def test_info_matches_closed_form(rng):
    kappa, n, steps = 0.05, 9, 40
    visits = rng.integers(0, n, size=steps)
    s = np.zeros(n)
    for v in visits:
        s = info_update(s, v, kappa, 1e9)
    t = steps - 1
    closed = np.zeros(n)
    for m, v in enumerate(visits):
        closed[v] += math.exp(-kappa * (t - m))
    assert np.max(np.abs(s - closed)) < 1e-10


def test_hop_memoryless():
    assert hop_probabilities(3.0, 1.0, 2.0, 0.0) == (0.5, 0.5)


def test_hop_equal_neighbours():
    pl, pr = hop_probabilities(4.0, 4.0, 1.0, 0.7)
    assert pl == pytest.approx(0.5) and pr == pytest.approx(0.5)


def test_hop_formula():
    pl, pr = hop_probabilities(1.0, 0.0, 0.0, 0.1)
    assert pl == pytest.approx(math.exp(0.1) / (math.exp(0.1) + 1), abs=1e-15)
    assert pl == pytest.approx(0.52498, abs=1e-5)
    assert abs(pl + pr - 1.0) < 1e-15


def test_hop_clamped():
    pl, pr = hop_probabilities(1e6, 0.0, 0.0, 1.0)
    assert np.isfinite(pl) and 0 < pr < 1e-20


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0, 13), st.floats(0, 13), st.floats(0, 13),
    st.floats(-1, 1), st.floats(-50, 50),
)
def test_hop_shift_invariance(a, b, c, u, shift):
    p1 = hop_probabilities(a, b, c, u)
    p2 = hop_probabilities(a + shift, b + shift, c + shift, u)
    assert abs(p1[0] - p2[0]) < 1e-12
    assert abs(sum(p1) - 1) < 1e-15


def test_config_validation():
    for bad in (dict(kappa=-1), dict(s_max=0), dict(reps=0), dict(T=10, L=5)):
        with pytest.raises(PreconditionError):
            CrwConfig(**bad)


def test_binomial_small():
    np.testing.assert_allclose(binomial_distribution(1, 2).probs, [0, 0.5, 0, 0.5, 0])
    np.testing.assert_allclose(binomial_distribution(2, 2).probs, [0.25, 0, 0.5, 0, 0.25])


def test_binomial_variance():
    v = variance_series([binomial_distribution(100)]).values[0]
    assert v == pytest.approx(100.0, abs=1e-9)
    assert binomial_distribution(100).total() == pytest.approx(1.0, abs=1e-12)


def test_memoryless_crw_diffuses():
    run = crw_run(0.0, T=100)
    var = variance_series(run.distributions).values
    assert var[-1] / 100 == pytest.approx(1.0, abs=0.05)
    mean = run.distributions[-1].probs @ run.distributions[-1].sites
    assert abs(mean) <= 3 * math.sqrt(100 / 10_000)


def test_memoryless_crw_close_to_binomial():
    run = crw_run(0.0, T=100)
    exact = binomial_walk(100, run.metadata["L"])
    # total-variation distance of a 10^4-sample histogram stays small
    tv = 0.5 * np.abs(run.distributions[-1].probs - exact[-1].probs).sum()
    assert tv < 0.08


def test_distributions_normalized():
    run = crw_run(0.1)
    for d in run.distributions:
        assert abs(d.total() - 1) < 1e-12


def test_same_seed_bitwise_identical():
    cfg = CrwConfig(u=-0.1, reps=500, seed=7)
    a, b = run_memory_crw(cfg), run_memory_crw(cfg)
    assert np.array_equal(a.counts, b.counts)


def test_chunking_and_workers_do_not_change_result():
    cfg = CrwConfig(u=0.1, reps=900, seed=3, T=30)
    serial = run_memory_crw(cfg, workers=1, chunk=900)
    chunked = run_memory_crw(cfg, workers=1, chunk=128)
    parallel = run_memory_crw(cfg, workers=2, chunk=300)
    assert np.array_equal(serial.counts, chunked.counts)
    assert np.array_equal(serial.counts, parallel.counts)


def test_block_split_is_additive():
    cfg = CrwConfig(u=-0.1, reps=100, seed=11, T=20)
    whole = simulate_block(cfg, 0, 100)
    parts = simulate_block(cfg, 0, 37) + simulate_block(cfg, 37, 100)
    assert np.array_equal(whole, parts)


def test_self_avoiding_spreads_faster():
    v_avoid = variance_series(crw_run(-0.1).distributions).values[-1]
    v_attract = variance_series(crw_run(0.1).distributions).values[-1]
    assert v_avoid > v_attract


def test_info_field_cap_along_trajectory(rng):
    s = np.zeros(21)
    pos = 10
    for _ in range(200):
        pl, _ = hop_probabilities(s[pos - 1], s[pos + 1], s[pos], 0.5)
        pos = pos - 1 if rng.random() < pl else pos + 1
        pos = min(max(pos, 1), 19)
        s = info_update(s, pos, 1e-4, 13.0)
    assert s.max() <= 13.0
