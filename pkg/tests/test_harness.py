"""Noise generation, trial mechanics and the statistical checks."""

import math

import numpy as np
import pytest

from gridfilt import Box, Field, ParamError
from gridfilt.estimators import DenoiseSetup, theta_stat
from gridfilt.harness import (
    NoiseSpec,
    check_gaussian_max,
    check_theta_moment,
    derive_seed,
    monte_carlo,
    run_trial,
    sample_noise,
    write_trials_csv,
)
from gridfilt.signals import exp_certificate_1d


def test_noise_zero_sigma():
    f = sample_noise(Box((-3,), (3,)), NoiseSpec(0.0, 99))
    assert np.all(f.data == 0)


def test_noise_deterministic_per_seed():
    a = sample_noise(Box.cube(2, 4), NoiseSpec(0.3, 1234))
    b = sample_noise(Box.cube(2, 4), NoiseSpec(0.3, 1234))
    c = sample_noise(Box.cube(2, 4), NoiseSpec(0.3, 1235))
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_noise_moments():
    f = sample_noise(Box((0,), (99_999,)), NoiseSpec(0.5, 7))
    for part in (f.data.real, f.data.imag):
        assert abs(part.mean()) < 4 * 0.5 / math.sqrt(100_000)
        assert abs(part.var() - 0.25) < 0.05 * 0.25
    # real and imaginary parts uncorrelated
    corr = np.corrcoef(f.data.real, f.data.imag)[0, 1]
    assert abs(corr) < 0.02


def test_derive_seed_spread():
    seeds = [derive_seed(42, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert all(0 <= s < 2 ** 64 for s in seeds)


def test_run_trial_noiseless_exact():
    box = Box((-8,), (8,))
    s = Field(box, np.full(17, 1.0 + 2.0j))
    cert = exp_certificate_1d(0.0)
    rec = run_trial(s, cert, (0,), DenoiseSetup(rho=cert.rho, T=2),
                    NoiseSpec(0.0, 5), tol=1e-9)
    assert rec.sq_err_adaptive < 1e-14
    assert rec.sq_err_oracle < 1e-28
    assert rec.theta_stat == 0.0


def test_run_trial_theta_matches_recomputation():
    box = Box((-8,), (8,))
    s = Field(box, np.ones(17, dtype=complex))
    cert = exp_certificate_1d(0.0)
    spec = NoiseSpec(0.2, 31337)
    rec = run_trial(s, cert, (0,), DenoiseSetup(rho=cert.rho, T=2), spec)
    e = sample_noise(box, spec)
    assert rec.theta_stat == theta_stat(e, (0,), 2)


def test_oracle_error_decomposition():
    # E|s_t - (q(D)y)_t|^2 = 2 sigma^2 |q|_2^2 + |s_t - (q(D)s)_t|^2; for an
    # exact certificate the deterministic part vanishes
    box = Box((-8,), (8,))
    s = Field(box, np.full(17, 1.0 + 0j))
    cert = exp_certificate_1d(0.0)
    setup = DenoiseSetup(rho=cert.rho, T=2)
    sigma, trials = 0.4, 400
    errs = []
    for i in range(trials):
        rec = run_trial(s, cert, (0,), setup, NoiseSpec(sigma, derive_seed(17, i)),
                        tol=1e-3, max_iter=4000)
        errs.append(rec.sq_err_oracle)
    errs = np.array(errs)
    q = cert.filter(2)
    expected = 2 * sigma ** 2 * q.l2() ** 2
    se = errs.std(ddof=1) / math.sqrt(trials)
    assert abs(errs.mean() - expected) <= 3 * se


def test_monte_carlo_single_trial_degenerate():
    box = Box((-8,), (8,))
    s = Field(box, np.full(17, 2.0 + 0j))
    cert = exp_certificate_1d(0.0)
    stats, records = monte_carlo(s, cert, (0,), DenoiseSetup(rho=cert.rho, T=2),
                                 sigma=0.1, trials=1, master_seed=9, label="one")
    assert len(records) == 1
    assert stats.rmse_adaptive == pytest.approx(math.sqrt(records[0].sq_err_adaptive))
    assert stats.hw_adaptive == 0.0
    assert stats.pathwise_violations == 0


def test_monte_carlo_rejects_zero_trials():
    box = Box((-8,), (8,))
    s = Field(box, np.ones(17, dtype=complex))
    with pytest.raises(ParamError):
        monte_carlo(s, exp_certificate_1d(0.0), (0,),
                    DenoiseSetup(rho=math.sqrt(2), T=2), 0.1, 0, 1)


def test_monte_carlo_names_failing_seed():
    # anchor outside the coverage makes every trial fail
    box = Box((-8,), (8,))
    s = Field(box, np.ones(17, dtype=complex))
    with pytest.raises(RuntimeError, match="seed"):
        monte_carlo(s, exp_certificate_1d(0.0), (4,),
                    DenoiseSetup(rho=math.sqrt(2), T=2), 0.1, 2, 1)


def test_monte_carlo_reproducible():
    box = Box((-8,), (8,))
    s = Field(box, np.full(17, 1.0 + 1.0j))
    cert = exp_certificate_1d(0.0)
    args = (s, cert, (0,), DenoiseSetup(rho=cert.rho, T=2), 0.1, 5, 77)
    s1, r1 = monte_carlo(*args)
    s2, r2 = monte_carlo(*args)
    assert s1 == s2
    assert all(a == b for a, b in zip(r1, r2))


def test_gaussian_max_single_variable():
    # N = 1: E|f|^2 = 2 exactly, and the bound 2 ln 1 + 2 = 2 is the equality case
    rep = check_gaussian_max(1, 20000, seed=3)
    assert rep.bound_mean == 2.0
    assert abs(rep.mean_max_sq - 2.0) <= 3 * rep.se_max_sq
    assert rep.tails_ok


def test_gaussian_max_n16():
    rep = check_gaussian_max(16, 20000, seed=4)
    assert rep.bound_mean == pytest.approx(2 * math.log(16) + 2)
    assert rep.mean_ok and rep.tails_ok


def test_theta_moment_check():
    rep = check_theta_moment(T=2, sigma=0.7, trials=300, seed=11)
    assert rep.ok
    assert rep.bound == pytest.approx(0.49 * (4 * math.log(9) + 2))


def test_trials_csv_layout(tmp_path):
    box = Box((-8,), (8,))
    s = Field(box, np.full(17, 1.0 + 0j))
    cert = exp_certificate_1d(0.0)
    _, records = monte_carlo(s, cert, (0,), DenoiseSetup(rho=cert.rho, T=2),
                             0.1, 3, 123, label="csv")
    p = tmp_path / "trials.csv"
    write_trials_csv(p, records, header_comment="master_seed=123")
    lines = p.read_text().splitlines()
    assert lines[0] == "# master_seed=123"
    assert lines[1].startswith("trial,seed,anchor,re_truth")
    assert len(lines) == 2 + 3
    # byte-identical on rewrite
    p2 = tmp_path / "trials2.csv"
    write_trials_csv(p2, records, header_comment="master_seed=123")
    assert p.read_bytes() == p2.read_bytes()
