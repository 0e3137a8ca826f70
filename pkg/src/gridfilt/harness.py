"""Reproducible Monte Carlo experiments verifying the oracle inequalities.

Noise is complex Gaussian: real and imaginary parts of each sample are
independent N(0, sigma^2). Streams are generated with numpy's counter-based
Philox engine keyed by the trial seed and consumed in one
``standard_normal((2,) + box.shape)`` draw (slot 0 real parts, slot 1
imaginary parts, row-major), so a seed pins the field bit-for-bit. Per-trial
seeds derive from the master seed through the splitmix64 mix documented in
:func:`derive_seed`; every trial is therefore independently replayable.

A trial compares the adaptive estimate against the certificate ("oracle")
filter applied to the same noisy data, records both squared errors, the
solver gap and the realized noise statistic; aggregation reports RMSEs with
normal-approximation confidence half-widths and the theoretical risk bound.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import ParamError
from .estimators import (
    DenoiseSetup,
    denoise_point,
    predict_point,
    risk_bound,
    risk_constant,
    theta_stat,
)
from .fields import Box, Field, convolve
from .signals import Certificate

__all__ = [
    "NoiseSpec",
    "TrialRecord",
    "ExperimentStats",
    "GaussianMaxReport",
    "ThetaMomentReport",
    "derive_seed",
    "sample_noise",
    "run_trial",
    "monte_carlo",
    "check_gaussian_max",
    "check_theta_moment",
    "pathwise_violations",
    "write_trials_csv",
    "write_stats_csv",
    "write_stats_json",
]

_MASK = (1 << 64) - 1
Z_95 = 1.96  # normal-approximation 95% quantile used in all half-widths


@dataclass(frozen=True)
class NoiseSpec:
    """Noise level and generator seed; equal seeds give identical fields."""

    sigma: float
    seed: int

    def __post_init__(self):
        if self.sigma < 0:
            raise ParamError("sigma must be nonnegative")


def derive_seed(master: int, index: int) -> int:
    """Per-trial seed: splitmix64 of ``master + index * golden`` (documented).

    z = master + index * 0x9E3779B97F4A7C15 (mod 2^64), then
    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
    z ^= z >> 27; z *= 0x94D049BB133111EB;
    z ^= z >> 31.
    """
    z = (master + index * 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def sample_noise(box: Box, spec: NoiseSpec) -> Field:
    """Complex Gaussian field on ``box``; Re and Im parts i.i.d. N(0, sigma^2)."""
    rng = np.random.Generator(np.random.Philox(key=spec.seed))
    draws = rng.standard_normal((2,) + box.shape)
    return Field(box, spec.sigma * (draws[0] + 1j * draws[1]))


@dataclass(frozen=True)
class TrialRecord:
    """One trial: adaptive and oracle estimates with their squared errors."""

    anchor: tuple[int, ...]
    seed: int
    truth: complex
    estimate: complex
    oracle_estimate: complex
    sq_err_adaptive: float
    sq_err_oracle: float
    solver_gap: float
    theta_stat: float


def run_trial(s: Field, cert: Certificate | None, t: Sequence[int],
              setup: DenoiseSetup, noise: NoiseSpec,
              tol: float = 1e-5, max_iter: int = 60000) -> TrialRecord:
    """Run one seeded trial on signal ``s``: estimate, oracle, errors.

    The oracle estimate applies the certificate's order-T filter to the same
    noisy observations; with ``cert=None`` it is skipped (recorded as the
    truth with zero error).
    """
    t = tuple(int(x) for x in t)
    e = sample_noise(s.box, noise)
    y = s + e
    if setup.mode == "filtering":
        est = denoise_point(y, t, setup, tol=tol, max_iter=max_iter)
    else:
        est = predict_point(y, t, setup, tol=tol, max_iter=max_iter)
    truth = s.value(t)
    if cert is not None:
        q = cert.filter(setup.T)
        oracle_val = convolve(q, y, Box(t, t)).value(t)
    else:
        oracle_val = truth
    theta = theta_stat(e, t, setup.T)
    return TrialRecord(
        anchor=t,
        seed=noise.seed,
        truth=truth,
        estimate=est.value,
        oracle_estimate=oracle_val,
        sq_err_adaptive=abs(est.value - truth) ** 2,
        sq_err_oracle=abs(oracle_val - truth) ** 2,
        solver_gap=0.0 if est.solve is None else est.solve.gap,
        theta_stat=theta,
    )


@dataclass(frozen=True)
class ExperimentStats:
    """Aggregate of one experiment configuration."""

    label: str
    d: int
    T: int
    rho: float
    theta: float
    sigma: float
    trials: int
    master_seed: int
    rmse_adaptive: float
    hw_adaptive: float
    rmse_oracle: float
    hw_oracle: float
    bound: float
    ratio: float
    max_solver_gap: float
    pathwise_violations: int


def _rmse_with_halfwidth(sq_errors: np.ndarray) -> tuple[float, float]:
    n = len(sq_errors)
    mse = float(sq_errors.mean())
    rmse = math.sqrt(mse)
    if n < 2 or rmse == 0:
        return rmse, 0.0
    hw_mse = Z_95 * float(sq_errors.std(ddof=1)) / math.sqrt(n)
    return rmse, hw_mse / (2 * rmse)  # delta method sqrt'(mse) = 1/(2 rmse)


def pathwise_violations(records: Sequence[TrialRecord], d: int, T: int,
                        rho: float, theta: float) -> int:
    """Count trials violating the per-realization error bound.

    The bound is ``c(d) rho^3 [theta + rho * Theta] (2T+1)^{-d/2}`` with
    ``Theta`` the trial's realized noise statistic.
    """
    c = risk_constant(d)
    scale = (2 * T + 1) ** (-d / 2)
    bad = 0
    for r in records:
        bound = c * rho ** 3 * (theta + rho * r.theta_stat) * scale
        if abs(r.estimate - r.truth) > bound:
            bad += 1
    return bad


def monte_carlo(s: Field, cert: Certificate, t: Sequence[int],
                setup: DenoiseSetup, sigma: float, trials: int,
                master_seed: int, label: str = "",
                tol: float = 1e-5, max_iter: int = 60000,
                ) -> tuple[ExperimentStats, list[TrialRecord]]:
    """Independent-seed trials of one configuration, aggregated.

    Seeds are ``derive_seed(master_seed, i)``; a failing trial aborts the
    experiment with its seed named. The reported bound evaluates
    :func:`risk_bound` at the certificate's ``(theta, rho)``.
    """
    if trials < 1:
        raise ParamError("need at least one trial")
    records: list[TrialRecord] = []
    for i in range(trials):
        seed = derive_seed(master_seed, i)
        try:
            records.append(run_trial(s, cert, t, setup,
                                     NoiseSpec(sigma, seed), tol, max_iter))
        except Exception as exc:
            raise RuntimeError(
                f"trial {i} (seed {seed}) of {label or 'experiment'} failed: {exc}"
            ) from exc
    sq_a = np.array([r.sq_err_adaptive for r in records])
    sq_o = np.array([r.sq_err_oracle for r in records])
    rmse_a, hw_a = _rmse_with_halfwidth(sq_a)
    rmse_o, hw_o = _rmse_with_halfwidth(sq_o)
    bound = risk_bound(s.d, setup.T, cert.rho, cert.theta, sigma)
    stats = ExperimentStats(
        label=label,
        d=s.d,
        T=setup.T,
        rho=cert.rho,
        theta=cert.theta,
        sigma=sigma,
        trials=trials,
        master_seed=master_seed,
        rmse_adaptive=rmse_a,
        hw_adaptive=hw_a,
        rmse_oracle=rmse_o,
        hw_oracle=hw_o,
        bound=bound,
        ratio=rmse_a / bound if bound > 0 else math.inf,
        max_solver_gap=max((r.solver_gap for r in records), default=0.0),
        pathwise_violations=pathwise_violations(records, s.d, setup.T,
                                                cert.rho, cert.theta),
    )
    return stats, records


@dataclass(frozen=True)
class GaussianMaxReport:
    """Empirical maxima of N standard complex Gaussians vs. the theory."""

    N: int
    trials: int
    mean_max_sq: float
    se_max_sq: float
    bound_mean: float          # 2 ln N + 2
    tail_u: tuple[float, ...]
    tail_freq: tuple[float, ...]
    tail_bound: tuple[float, ...]  # exp(-u^2/2)
    tail_se: tuple[float, ...]

    @property
    def mean_ok(self) -> bool:
        return self.mean_max_sq <= self.bound_mean + 3 * self.se_max_sq

    @property
    def tails_ok(self) -> bool:
        return all(f <= b + 3 * se for f, b, se in
                   zip(self.tail_freq, self.tail_bound, self.tail_se))


def check_gaussian_max(N: int, trials: int, seed: int = 0,
                       tail_u: Sequence[float] = (1.0, 2.0, 3.0)) -> GaussianMaxReport:
    """Empirical check of the Gaussian maximum bounds.

    For N standard complex Gaussians: ``E max |f_j|^2 <= 2 ln N + 2`` and
    ``P{max |f_j| > u + sqrt(2 ln N)} <= exp(-u^2/2)``.
    """
    if N < 1 or trials < 1:
        raise ParamError("need N >= 1 and trials >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed))
    draws = rng.standard_normal((trials, 2, N))
    mags = np.abs(draws[:, 0, :] + 1j * draws[:, 1, :])
    max_mag = mags.max(axis=1)
    max_sq = max_mag ** 2
    shift = math.sqrt(2 * math.log(N))
    freqs, ses = [], []
    for u in tail_u:
        hits = (max_mag > u + shift).astype(float)
        p = float(hits.mean())
        freqs.append(p)
        ses.append(math.sqrt(max(p * (1 - p), 1e-12) / trials))
    return GaussianMaxReport(
        N=N,
        trials=trials,
        mean_max_sq=float(max_sq.mean()),
        se_max_sq=float(max_sq.std(ddof=1)) / math.sqrt(trials),
        bound_mean=2 * math.log(N) + 2,
        tail_u=tuple(tail_u),
        tail_freq=tuple(freqs),
        tail_bound=tuple(math.exp(-u * u / 2) for u in tail_u),
        tail_se=tuple(ses),
    )


@dataclass(frozen=True)
class ThetaMomentReport:
    """Empirical second moment of the noise statistic vs. its bound."""

    d: int
    T: int
    sigma: float
    trials: int
    mean_sq: float
    se: float
    bound: float  # sigma^2 (4 d ln(4T+1) + 2)

    @property
    def ok(self) -> bool:
        return self.mean_sq <= self.bound + 3 * self.se


def check_theta_moment(T: int, sigma: float, trials: int, seed: int = 0,
                       d: int = 1) -> ThetaMomentReport:
    """Monte Carlo check of ``E[Theta_T^2] <= sigma^2 (4 d ln(4T+1) + 2)``."""
    vals = np.empty(trials)
    box = Box.cube(d, 4 * T)
    for i in range(trials):
        e = sample_noise(box, NoiseSpec(sigma, derive_seed(seed, i)))
        vals[i] = theta_stat(e, (0,) * d, T) ** 2
    return ThetaMomentReport(
        d=d, T=T, sigma=sigma, trials=trials,
        mean_sq=float(vals.mean()),
        se=float(vals.std(ddof=1)) / math.sqrt(trials),
        bound=sigma ** 2 * (4 * d * math.log(4 * T + 1) + 2),
    )


# --------------------------------------------------------------------------
# serialization (documented column orders; all floats at full precision)
# --------------------------------------------------------------------------

TRIAL_COLUMNS = [
    "trial", "seed", "anchor", "re_truth", "im_truth", "re_estimate",
    "im_estimate", "re_oracle", "im_oracle", "sq_err_adaptive",
    "sq_err_oracle", "solver_gap", "theta_stat",
]

STATS_COLUMNS = [
    "label", "d", "T", "rho", "theta", "sigma", "trials", "master_seed",
    "rmse_adaptive", "hw_adaptive", "rmse_oracle", "hw_oracle", "bound",
    "ratio", "max_solver_gap", "pathwise_violations",
]


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _anchor_str(anchor: tuple[int, ...]) -> str:
    return ";".join(str(a) for a in anchor)


def write_trials_csv(path, records: Sequence[TrialRecord],
                     header_comment: str = "") -> None:
    """Per-trial records; columns as in ``TRIAL_COLUMNS``."""
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(TRIAL_COLUMNS)
        for i, r in enumerate(records):
            writer.writerow([
                i, r.seed, _anchor_str(r.anchor),
                _fmt(r.truth.real), _fmt(r.truth.imag),
                _fmt(r.estimate.real), _fmt(r.estimate.imag),
                _fmt(r.oracle_estimate.real), _fmt(r.oracle_estimate.imag),
                _fmt(r.sq_err_adaptive), _fmt(r.sq_err_oracle),
                _fmt(r.solver_gap), _fmt(r.theta_stat),
            ])


def write_stats_csv(path, stats: Sequence[ExperimentStats],
                    header_comment: str = "") -> None:
    """Experiment aggregates; columns as in ``STATS_COLUMNS``."""
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(STATS_COLUMNS)
        for s in stats:
            writer.writerow([_fmt(getattr(s, c)) for c in STATS_COLUMNS])


def write_stats_json(path, stats: Sequence[ExperimentStats],
                     extra: dict | None = None) -> None:
    payload = {"experiments": [asdict(s) for s in stats]}
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
