"""Pointwise adaptive denoising and prediction, plus the theoretical risk formulas.

The estimators are fully data driven: given a setup ``(rho, T)`` (plus a lag
``kappa`` for prediction) they fit the min-max filter on a window around the
anchor and apply it at the anchor. The noise level never enters the fit; it
only appears in :func:`risk_bound`, which evaluates the theoretical guarantee

    rmse <= c(d) rho^3 (theta + sigma rho sqrt(ln(2T+1) + 1)) (2T+1)^{-d/2},
    c(d) = 3 (2^d + 2^{3d-1}),

valid whenever the signal admits an order-T certificate with parameters
``(theta, rho)`` on a horizon L >= 3T around the anchor.
``theta_stat`` computes the data-dependent noise statistic driving the
pathwise error bound (the sup, over window shifts, of the shifted noise
window's transform maxima).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ParamError
from .fields import Box, Field, convolve, dft_window
from .solver import (
    SolveResult,
    build_filtering_instance,
    build_prediction_instance,
    solve,
)

__all__ = [
    "DenoiseSetup",
    "Estimate",
    "denoise_point",
    "predict_point",
    "risk_bound",
    "theta_stat",
    "risk_constant",
]

FILTERING = "filtering"
PREDICTION = "prediction"


@dataclass(frozen=True)
class DenoiseSetup:
    """Estimator setup: norm budget ``rho >= 1``, order ``T``, optional lag."""

    rho: float
    T: int
    mode: str = FILTERING
    kappa: int | None = None

    def __post_init__(self):
        if self.rho < 1:
            raise ParamError("rho must be >= 1")
        if self.T < 0:
            raise ParamError("T must be nonnegative")
        if self.mode == PREDICTION:
            if self.kappa is None or self.kappa < 0:
                raise ParamError("prediction needs kappa >= 0")
            if self.kappa > self.T:
                raise ParamError("prediction needs kappa <= T")
        elif self.mode == FILTERING:
            if self.kappa is not None:
                raise ParamError("filtering carries no lag")
        else:
            raise ParamError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class Estimate:
    """Estimated signal value at an anchor; ``solve`` is None for T = 0."""

    value: complex
    anchor: tuple[int, ...]
    solve: SolveResult | None


def denoise_point(y: Field, t: Sequence[int], setup: DenoiseSetup,
                  tol: float = 1e-6, max_iter: int = 20000) -> Estimate:
    """Adaptive estimate of the signal at ``t`` from ``y`` on ``{|tau-t| <= 4T}``.

    T = 0 returns the observation itself; otherwise the fitted filter is
    applied at the anchor.
    """
    t = tuple(int(x) for x in t)
    if setup.mode != FILTERING:
        raise ParamError("denoise_point requires a filtering setup")
    if setup.T == 0:
        return Estimate(y.value(t), t, None)
    inst = build_filtering_instance(y, t, setup.T, setup.rho)
    res = solve(inst, tol=tol, max_iter=max_iter)
    value = convolve(res.phi, inst.y_win, Box(t, t)).value(t)
    return Estimate(value, t, res)


def predict_point(y: Field, t: Sequence[int], setup: DenoiseSetup,
                  tol: float = 1e-6, max_iter: int = 20000) -> Estimate:
    """Causal estimate of the signal at ``t`` from ``{kappa <= t_j - tau_j <= 4T}``.

    The fitted filter and hence the estimate depend only on observations
    preceding the anchor by at least ``kappa`` in every coordinate.
    """
    t = tuple(int(x) for x in t)
    if setup.mode != PREDICTION:
        raise ParamError("predict_point requires a prediction setup")
    if setup.T == 0:
        if setup.kappa != 0:
            raise ParamError("T = 0 prediction is only defined for kappa = 0")
        return Estimate(y.value(t), t, None)
    inst = build_prediction_instance(y, t, setup.T, setup.kappa, setup.rho)
    res = solve(inst, tol=tol, max_iter=max_iter)
    value = convolve(res.phi, inst.y_win, Box(t, t)).value(t)
    return Estimate(value, t, res)


def risk_constant(d: int) -> float:
    """The dimension constant ``c(d) = 3 (2^d + 2^{3d-1})``."""
    if d < 1:
        raise ParamError("dimension must be positive")
    return 3.0 * (2 ** d + 2 ** (3 * d - 1))


def risk_bound(d: int, T: int, rho: float, theta: float, sigma: float) -> float:
    """Mean-square-error bound for a ``(theta, rho)``-certified signal."""
    if min(T, rho, theta, sigma) < 0 or rho < 1:
        raise ParamError("need T, theta, sigma >= 0 and rho >= 1")
    return (risk_constant(d) * rho ** 3
            * (theta + sigma * rho * math.sqrt(math.log(2 * T + 1) + 1))
            * (2 * T + 1) ** (-d / 2))


def theta_stat(e: Field, t: Sequence[int], T: int) -> float:
    """Sup over shifts ``|tau| <= 2T`` of the shifted window transform maxima of ``e``.

    This is the un-normalized noise statistic of the pathwise bound (the
    caller divides by sigma if the normalized version is wanted). Reads ``e``
    on ``{|tau - t| <= 4T}``.
    """
    t = tuple(int(x) for x in t)
    if T < 0:
        raise ParamError("T must be nonnegative")
    d = e.d
    W = 2 * T
    need = Box.cube(d, 4 * T, t)
    if not e.box.contains_box(need):
        raise DomainError(f"noise field must cover {need}, got {e.box}")
    best = 0.0
    for tau in Box.cube(d, W).points():
        center = tuple(tj + vj for tj, vj in zip(t, tau))
        window = e.window(W, center)
        best = max(best, float(np.abs(dft_window(window, W)).max()))
    return best
