import warnings

import numpy as np
import pytest

from gsinterp.graph import gft, gft_basis, igft, random_geometric_graph
from gsinterp.imatgi import (
    ImatgiConfig,
    contraction_probe,
    hard_threshold,
    imatgi_reconstruct,
    imatgi_reconstruct_batch,
    imatgi_step,
    resolve_beta,
    threshold_at,
    variance_probe,
)
from gsinterp.sampling import bernoulli_mask, derive_rng, subsample

from oracles import dense_update_step, support_least_squares


def test_threshold_schedule():
    assert threshold_at(ImatgiConfig(alpha=0.0, beta=1.0), 5) == 1.0
    assert abs(threshold_at(ImatgiConfig(alpha=np.log(2), beta=2.0), 1) - 1.0) < 1e-12
    cfg = ImatgiConfig(alpha=0.1, beta=1.0)
    assert abs(threshold_at(cfg, 10) / threshold_at(cfg, 20) - np.e) < 1e-12
    with pytest.raises(ValueError):
        threshold_at(cfg, 0)
    with pytest.raises(ValueError):
        threshold_at(ImatgiConfig(), 1)  # adaptive beta unresolved


def test_config_validation():
    with pytest.raises(ValueError):
        ImatgiConfig(lam=0.0)
    with pytest.raises(ValueError):
        ImatgiConfig(alpha=-1.0)
    with pytest.raises(ValueError):
        ImatgiConfig(beta=-0.5)
    with pytest.raises(ValueError):
        ImatgiConfig(max_iters=0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ImatgiConfig(lam=1.0).warn_if_unstable(0.5)  # 1 < 2/0.5: fine
        assert not caught
        ImatgiConfig(lam=5.0).warn_if_unstable(0.5)  # 5 > 4: warn
        assert len(caught) == 1


def test_hard_threshold():
    v = np.array([0.5, -2.0, 0.1])
    np.testing.assert_array_equal(hard_threshold(v, 0.4), [0.5, -2.0, 0.0])
    np.testing.assert_array_equal(hard_threshold(v, 0.0), v)
    once = hard_threshold(v, 0.4)
    np.testing.assert_array_equal(hard_threshold(once, 0.4), once)
    np.testing.assert_array_equal(hard_threshold(np.array([0.4]), 0.4), [0.4])  # boundary kept
    with pytest.raises(ValueError):
        hard_threshold(v, -1.0)


@pytest.fixture(scope="module")
def basis16():
    return gft_basis(random_geometric_graph(16, seed=2))


def test_step_full_mask_lam1(basis16):
    rng = derive_rng(4)
    f_k, f_s = rng.random(16), rng.random(16)
    out = imatgi_step(f_k, f_s, np.ones(16, bool), basis16,
                      ImatgiConfig(beta=0.5, lam=1.0), 1)
    np.testing.assert_array_equal(out, f_s)


def test_step_zero_fixed_point(basis16):
    out = imatgi_step(np.zeros(16), np.zeros(16), np.ones(16, bool), basis16,
                      ImatgiConfig(beta=1.0), 3)
    np.testing.assert_allclose(out, np.zeros(16), atol=1e-12)


def test_step_matches_dense_transcription(basis16):
    """Elementwise update equals the literal matrix-algebra formula."""
    rng = derive_rng(8)
    f_k = rng.normal(size=16)
    mask = np.zeros(16, bool)
    mask[[0, 2, 3, 5, 7, 8, 11, 14]] = True
    f_s = subsample(rng.normal(size=16), mask)
    cfg = ImatgiConfig(beta=0.6, alpha=0.2, lam=0.8)
    got = imatgi_step(f_k, f_s, mask, basis16, cfg, 2)
    expected = dense_update_step(f_k, f_s, mask, basis16.vectors,
                                 threshold_at(cfg, 2), 0.8)
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_step_sampled_unsampled_split(basis16):
    rng = derive_rng(9)
    f_k = rng.normal(size=16)
    mask = bernoulli_mask(16, 0.5, 11)
    f_s = subsample(rng.normal(size=16), mask)
    cfg = ImatgiConfig(beta=0.3, lam=0.7)
    out = imatgi_step(f_k, f_s, mask, basis16, cfg, 1)
    g = igft(basis16, hard_threshold(gft(basis16, f_k), threshold_at(cfg, 1)))
    np.testing.assert_array_equal(out[~mask], g[~mask])
    np.testing.assert_array_equal(out[mask], ((1 - 0.7) * g + 0.7 * f_s)[mask])


def test_reconstruct_full_sampling_identity(basis16):
    f = derive_rng(12).random(16)
    rec, trace = imatgi_reconstruct(f, np.ones(16, bool), basis16,
                                    ImatgiConfig(lam=1.0, epsilon=0.0, max_iters=1))
    np.testing.assert_allclose(rec, f, atol=1e-8)
    assert trace.iterations.tolist() == [1]


def test_reconstruct_zero_signal_stops_at_two(basis16):
    rec, trace = imatgi_reconstruct(np.zeros(16), np.ones(16, bool), basis16)
    np.testing.assert_array_equal(rec, np.zeros(16))
    assert trace.iterations.tolist() == [1, 2]
    assert trace.converged


def test_reconstruct_support_recoverable_fixture():
    """2-sparse spectrum, 12 of 16 vertices kept: the iteration lands on
    the same signal as the least-squares solve restricted to the true
    support, which itself recovers the ground truth exactly."""
    basis = gft_basis(random_geometric_graph(16, seed=2))
    rng = derive_rng(2, 7)
    supp = rng.choice(16, size=2, replace=False)
    coef = np.zeros(16)
    coef[supp] = np.array([1.5, 1.0]) * rng.choice([-1.0, 1.0], 2)
    truth = igft(basis, coef)
    mask = np.zeros(16, bool)
    mask[rng.choice(16, size=12, replace=False)] = True

    oracle = support_least_squares(truth, mask, basis.vectors, supp)
    assert np.abs(oracle - truth).max() < 1e-10  # recoverability confirmed

    rec, trace = imatgi_reconstruct(subsample(truth, mask), mask, basis, ImatgiConfig())
    assert np.abs(rec - truth).max() < 1e-4


def test_trace_properties(basis16):
    f = derive_rng(13).random(16)
    mask = bernoulli_mask(16, 0.7, 5)
    rec, trace = imatgi_reconstruct(subsample(f, mask), mask, basis16,
                                    ImatgiConfig(alpha=0.3), truth=f)
    assert np.all(np.diff(trace.thresholds) < 0)
    assert trace.mse is not None and trace.mse.shape == trace.iterations.shape
    # ends by tolerance or by the iteration cap
    assert trace.converged or trace.iterations[-1] == 20


def test_trace_csv(tmp_path, basis16):
    f = derive_rng(14).random(16)
    mask = bernoulli_mask(16, 0.6, 6)
    _, trace = imatgi_reconstruct(subsample(f, mask), mask, basis16, truth=f)
    out = tmp_path / "trace.csv"
    trace.write_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "#schema=v1"
    assert lines[1] == "k,threshold,delta_norm,support_size,mse"
    assert len(lines) == 2 + trace.iterations.shape[0]


def test_batch_matches_single(basis16):
    rng = derive_rng(15)
    cols = []
    masks = []
    for j in range(5):
        m = bernoulli_mask(16, 0.6, 20 + j)
        cols.append(subsample(rng.normal(size=16), m))
        masks.append(m)
    fs = np.column_stack(cols)
    ms = np.column_stack(masks)
    cfg = ImatgiConfig(alpha=0.25, lam=0.9, max_iters=15)
    batch, iters_used = imatgi_reconstruct_batch(fs, ms, basis16, cfg)
    for j in range(5):
        single, trace = imatgi_reconstruct(fs[:, j], ms[:, j], basis16, cfg)
        np.testing.assert_allclose(batch[:, j], single, atol=1e-12)
        assert iters_used[j] == trace.iterations[-1]


def test_init_from_samples_variant(basis16):
    f = derive_rng(16).random(16)
    mask = bernoulli_mask(16, 0.8, 30)
    fs = subsample(f, mask)
    cfg = ImatgiConfig(init_from_samples=True, max_iters=1, beta=0.1)
    rec, _ = imatgi_reconstruct(fs, mask, basis16, cfg)
    expected = imatgi_step(fs, fs, mask, basis16, cfg, 1)
    np.testing.assert_allclose(rec, expected, atol=1e-12)


@pytest.fixture(scope="module")
def basis32():
    return gft_basis(random_geometric_graph(32, seed=77))


def test_contraction_one_step_zero(basis32):
    """lam = 1/p zeroes the mean error after a single step."""
    f = basis32.vectors @ np.ones(32)  # flat spectrum
    probe = contraction_probe(f, basis32, p=0.5, lam=2.0, trials=4000, iters=3, seed=0)
    e1 = probe.mean_errors[1]
    # e1 is zero in expectation; its components fluctuate with standard
    # error about lam sqrt(p(1-p)/trials), so bound at ~6 sigma
    assert np.abs(e1).max() < 0.1
    assert probe.expected_ratio == 0.0


def test_contraction_ratio_half(basis32):
    f = basis32.vectors @ np.ones(32)
    probe = contraction_probe(f, basis32, p=0.5, lam=1.0, trials=5000, iters=6, seed=1)
    ratios = probe.ratios[0]
    ratios = ratios[np.isfinite(ratios)]
    assert abs(float(ratios.mean()) - 0.5) < 0.05
    norms = np.linalg.norm(probe.mean_errors, axis=1)
    assert norms[3] < norms[1]


def test_contraction_unbiasedness_trend(basis32):
    """At lam p = 0.5 the mean error should fall below 1% of its first
    value by iteration 10 (0.5^9 with a 10x Monte Carlo margin)."""
    f = basis32.vectors @ np.ones(32)
    probe = contraction_probe(f, basis32, p=0.5, lam=1.0, trials=5000, iters=10, seed=3)
    norms = np.linalg.norm(probe.mean_errors, axis=1)
    assert norms[10] < 0.01 * norms[1]


def test_contraction_divergence_warns(basis32):
    f = basis32.vectors @ np.ones(32)
    with pytest.warns(UserWarning):
        probe = contraction_probe(f, basis32, p=0.5, lam=5.0, trials=1500, iters=6, seed=2)
    norms = np.linalg.norm(probe.mean_errors, axis=1)
    assert norms[-1] > norms[1]


def test_variance_probe_p1_zero(basis32):
    f = basis32.vectors @ np.ones(32)
    probe = variance_probe(f, basis32, ImatgiConfig(max_iters=5), p=1.0,
                           trials=50, seed=0)
    np.testing.assert_allclose(probe.sigma2, np.zeros(5), atol=1e-20)


def test_variance_probe_zero_threshold_floor(basis32):
    """With the threshold forced to zero everything passes, including
    off-support components, so the spread never dies out."""
    rng = derive_rng(44)
    f = basis32.vectors @ rng.normal(size=32)  # dense spectrum
    probe = variance_probe(f, basis32, ImatgiConfig(beta=0.0, max_iters=8),
                           p=0.5, trials=400, seed=1)
    assert probe.sigma2[-1] > 0.01 * probe.sigma2[0]


def test_variance_probe_guard_reports_schedule(basis32):
    rng = derive_rng(45)
    idx = rng.choice(32, size=3, replace=False)
    coef = np.zeros(32)
    coef[idx] = [2.0, 1.0, 0.5]
    f = basis32.vectors @ coef
    probe = variance_probe(f, basis32, ImatgiConfig(max_iters=6), p=0.9,
                           trials=300, seed=2, guard_gamma=2.0)
    assert probe.guard_sigma is not None
    assert np.all(probe.thresholds >= 2.0 * probe.guard_sigma - 1e-12)
