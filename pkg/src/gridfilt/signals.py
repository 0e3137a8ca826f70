"""Signal families and the certificate filters that reproduce them.

A *certificate* for a signal class is a family of filters ``q^(T)``, one per
window order ``T``, with small l2 norm (``|q^(T)|_2 <= rho (2T+1)^{-d/2}``)
that reproduces every signal of the class up to a mean-square error of
``theta (2T+1)^{-d/2}`` on a box of radius ``L`` around the anchor. Prediction
certificates are the same with one-sided (causal) supports ``{kappa <= tau_j
<= T}`` and a minimal usable order ``T_0``.

The module provides the basic constructive families

* single exponentials ``e^{omega tau}`` (two-sided and causal variants),
* spans of exponentials with prescribed per-axis frequency sets,
* algebraic polynomials via moment-matching weights,
* discrete harmonic fields of a regular difference operator, reproduced by a
  Chebyshev polynomial of the operator,

and the calculus that combines certificates: linear combinations, modulation,
lifting to higher dimension, and tensor products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, ParamError, RegularityError
from .fields import (
    Box,
    Field,
    Filter,
    ONE_SIDED,
    TWO_SIDED,
    convolve,
    filter_product,
    filter_tensor,
    rebox_filter,
)

__all__ = [
    "ExpPolynomial",
    "Certificate",
    "RegularOperator",
    "eval_exp_poly",
    "exp_filter_1d",
    "simple_exp_filter",
    "poly_filter_1d",
    "predictor_exp_filter",
    "exp_certificate_1d",
    "poly_certificate_1d",
    "simple_exp_certificate",
    "predictor_exp_certificate",
    "exp_poly_certificate",
    "combine_certificates",
    "modulate_certificate",
    "lift_certificate",
    "tensor_certificate",
    "make_regular_operator",
    "harmonic_filter",
    "random_discrete_harmonic",
    "reproduction_residual",
]

FILTERING = "filtering"
PREDICTION = "prediction"


# --------------------------------------------------------------------------
# exponential polynomials
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpPolynomial:
    """Finite sum of monomials ``c * tau^alpha * exp(omega . tau)`` on Z^d.

    ``terms`` is a tuple of ``(c, alpha, omega)`` with complex coefficient
    ``c``, nonnegative integer multi-index ``alpha`` and complex frequency
    vector ``omega``, all of length d.
    """

    terms: tuple

    def __post_init__(self):
        if not self.terms:
            raise ParamError("an exponential polynomial needs at least one term")
        norm_terms = []
        d = None
        for c, alpha, omega in self.terms:
            alpha = tuple(int(a) for a in alpha)
            omega = tuple(complex(w) for w in omega)
            if d is None:
                d = len(alpha)
            if len(alpha) != d or len(omega) != d:
                raise ParamError("all terms must share one dimension")
            if any(a < 0 for a in alpha):
                raise ParamError("multi-indices must be nonnegative")
            norm_terms.append((complex(c), alpha, omega))
        object.__setattr__(self, "terms", tuple(norm_terms))

    @property
    def d(self) -> int:
        return len(self.terms[0][1])

    def max_degrees(self) -> tuple[int, ...]:
        return tuple(max(t[1][j] for t in self.terms) for j in range(self.d))

    def freq_sets(self) -> tuple[tuple[complex, ...], ...]:
        """Per-axis sets of distinct partial frequencies (exact equality)."""
        out = []
        for j in range(self.d):
            seen = []
            for _, _, omega in self.terms:
                if omega[j] not in seen:
                    seen.append(omega[j])
            out.append(tuple(seen))
        return tuple(out)

    def partial_sizes(self) -> tuple[int, ...]:
        """N_j = (m_j + 1) * M_j per axis."""
        degs = self.max_degrees()
        return tuple((degs[j] + 1) * len(s) for j, s in enumerate(self.freq_sets()))

    @property
    def quasi_stable(self) -> bool:
        return all(w.real <= 0 for _, _, omega in self.terms for w in omega)


def eval_exp_poly(p: ExpPolynomial, box: Box) -> Field:
    """Evaluate an exponential polynomial on a box."""
    if box.d != p.d:
        raise ParamError("dimension mismatch between polynomial and box")
    axes = [np.arange(lo, hi + 1, dtype=float) for lo, hi in zip(box.lo, box.hi)]
    out = np.zeros(box.shape, dtype=np.complex128)
    with np.errstate(over="ignore", invalid="ignore"):
        for c, alpha, omega in p.terms:
            term = np.full(box.shape, c, dtype=np.complex128)
            for j, ax in enumerate(axes):
                shape = (1,) * j + (-1,) + (1,) * (p.d - 1 - j)
                factor = ax ** alpha[j] if alpha[j] else np.ones_like(ax)
                term = term * (factor * np.exp(omega[j] * ax)).reshape(shape)
            out += term
    if not np.all(np.isfinite(out)):
        raise OverflowError("exponential polynomial overflows double range on this box")
    return Field(box, out)


# --------------------------------------------------------------------------
# base filters
# --------------------------------------------------------------------------


def exp_filter_1d(omega: complex, T: int) -> Filter:
    """Order-T filter reproducing ``s_tau = exp(omega tau)`` exactly (d=1).

    Averages T+1 rescaled samples on the stable side: lags ``-k`` with
    weights ``exp(-k omega)/(T+1)`` when ``Re omega >= 0``, mirrored
    otherwise. ``|q|_2 <= (T+1)^{-1/2} <= sqrt(2) (2T+1)^{-1/2}``, with
    equality for purely imaginary frequencies.
    """
    omega = complex(omega)
    if T < 0:
        raise ParamError("order must be nonnegative")
    coeffs = np.zeros(2 * T + 1, dtype=np.complex128)
    k = np.arange(T + 1)
    if omega.real >= 0:
        # support on lags {0, -1, ..., -T}
        coeffs[T - k] = np.exp(-omega * k) / (T + 1)
    else:
        coeffs[T + k] = np.exp(omega * k) / (T + 1)
    return Filter.two_sided(1, T, coeffs)


def _one_minus(q: Filter) -> Filter:
    """The filter 1 - q in the Laurent algebra."""
    if q.kind == TWO_SIDED:
        data = -q.field.data.copy()
        data[(q.order,) * q.d] += 1.0
        return Filter.two_sided(q.d, q.order, data)
    box = Box.one_sided_cube(q.d, 0, q.order)
    data = np.zeros(box.shape, dtype=np.complex128)
    data[q.field.box.slices_in(box)] = -q.field.data
    data[(0,) * q.d] += 1.0
    return Filter.one_sided(q.d, 0, q.order, data)


def _annihilator_combination(factors: Sequence[Filter]) -> Filter:
    """q with 1 - q = prod_j (1 - q_j); reproduces whatever every q_j reproduces."""
    prod = reduce(filter_product, [_one_minus(q) for q in factors])
    return _one_minus(prod)


def simple_exp_filter(freq_sets: Sequence[Sequence[complex]], T: int) -> Filter:
    """Filter reproducing every span of exponentials with the given partial frequencies.

    ``freq_sets`` holds one nonempty set of distinct complex frequencies per
    axis. Per axis, the N_j single-frequency filters of order ``floor(T/N_j)``
    are combined through the product construction, and the axes are tensored.
    Raises ``ParamError`` if ``T`` is smaller than some per-axis set size
    (the per-factor order budget would be zero).
    """
    if not freq_sets:
        raise ParamError("need at least one axis")
    axis_filters = []
    for j, fs in enumerate(freq_sets):
        fs = [complex(w) for w in fs]
        if not fs:
            raise ParamError(f"frequency set for axis {j} is empty")
        if len(set(fs)) != len(fs):
            raise ParamError(f"frequency set for axis {j} has repeats")
        n = len(fs)
        T_factor = T // n
        if T_factor < 1:
            raise ParamError(
                f"order {T} cannot budget {n} factors on axis {j} (need T >= {n})")
        axis_filters.append(
            _annihilator_combination([exp_filter_1d(w, T_factor) for w in fs]))
    return reduce(filter_tensor, axis_filters)


def poly_filter_1d(m: int, T: int) -> Filter:
    """Minimum-l2 symmetric weights reproducing univariate polynomials of degree <= m.

    Solves ``sum q_t = 1`` and ``sum q_t t^i = 0`` for ``i = 1..m`` with the
    smallest l2 norm; ``|q|_2 <= 16 m (2T+1)^{-1/2}`` for m >= 1. Requires
    ``2T+1 >= m+1`` points for the moment system to be solvable.
    """
    if m < 0 or T < 0:
        raise ParamError("degree and order must be nonnegative")
    if 2 * T + 1 < m + 1:
        raise ParamError(f"moment system of degree {m} is infeasible at order {T}")
    t = np.arange(-T, T + 1, dtype=float)
    scale = max(T, 1)
    V = np.vander(t / scale, m + 1, increasing=True).T  # rows: (t/scale)^i
    rhs = np.zeros(m + 1)
    rhs[0] = 1.0
    q, *_ = np.linalg.lstsq(V, rhs, rcond=None)
    return Filter.two_sided(1, T, q.astype(np.complex128))


def predictor_exp_filter(omega: complex, T: int, kappa: int) -> Filter:
    """Causal filter reproducing a quasi-stable exponential ``exp(omega tau)``.

    Support ``{kappa..T}`` with weights ``exp(k omega)/(T - kappa + 1)``;
    requires ``Re omega <= 0`` and ``kappa <= T``.
    """
    omega = complex(omega)
    if omega.real > 0:
        raise ParamError(f"quasi-stability requires Re(omega) <= 0, got {omega}")
    if not 0 <= kappa <= T:
        raise ParamError(f"need 0 <= kappa <= T, got kappa={kappa}, T={T}")
    k = np.arange(kappa, T + 1)
    coeffs = np.exp(omega * k) / (T - kappa + 1)
    return Filter.one_sided(1, kappa, T, coeffs)


# --------------------------------------------------------------------------
# certificates
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    """A family ``T -> q^(T)`` of filters certifying a signal class.

    ``theta`` bounds the reproduction error (times ``(2T+1)^{d/2}``), ``rho``
    the filter l2 norm (same scaling), ``L`` the horizon of validity around
    the anchor. Prediction certificates carry the lag ``kappa`` and the
    minimal order ``T0``. ``exact`` is False for constructions that only
    approximate their class (the residual is then measured, not promised).
    """

    kind: str
    d: int
    theta: float
    rho: float
    L: float
    make: Callable[[int], Filter]
    kappa: int | None = None
    T0: int = 0
    exact: bool = True
    label: str = ""

    def __post_init__(self):
        if self.kind not in (FILTERING, PREDICTION):
            raise ParamError(f"unknown certificate kind {self.kind!r}")
        if self.rho < 1:
            raise ParamError("certificate rho must be >= 1")
        if self.theta < 0:
            raise ParamError("certificate theta must be >= 0")
        if self.kind == PREDICTION and (self.kappa is None or self.kappa < 0):
            raise ParamError("prediction certificates need kappa >= 0")

    def filter(self, T: int) -> Filter:
        """The order-T certificate filter; ``ParamError`` outside [T0, L]."""
        if T < 0 or T > self.L:
            raise ParamError(f"order {T} outside the certified range [0, {self.L}]")
        if T < self.T0:
            raise ParamError(f"order {T} below the minimal usable order {self.T0}")
        q = self.make(T)
        if q.order > T:
            raise ParamError(f"constructed filter has order {q.order} > {T}")
        return q


def exp_certificate_1d(omega: complex, label: str = "") -> Certificate:
    """Certificate for the univariate exponential ``exp(omega tau)``: theta 0, rho sqrt(2)."""
    omega = complex(omega)
    return Certificate(
        FILTERING, 1, 0.0, math.sqrt(2), math.inf,
        lambda T: exp_filter_1d(omega, T),
        label=label or f"exp({omega})")


def poly_certificate_1d(m: int, label: str = "") -> Certificate:
    """Certificate for univariate polynomials of degree <= m: theta 0, rho 16m."""
    if m < 0:
        raise ParamError("degree must be nonnegative")
    rho = 16.0 * m if m >= 1 else 1.0

    def make(T: int) -> Filter:
        if 2 * T + 1 < m + 1:
            return Filter.impulse(1)  # trivial reproduction at tiny orders
        return poly_filter_1d(m, T)

    return Certificate(FILTERING, 1, 0.0, rho, math.inf, make,
                       label=label or f"poly(deg<={m})")


def _rho_simple(sizes: Sequence[int]) -> float:
    return float(np.prod([math.sqrt(2 * N - 1) * 2 ** (1.5 * N) for N in sizes]))


def simple_exp_certificate(freq_sets: Sequence[Sequence[complex]],
                           label: str = "") -> Certificate:
    """Certificate for spans of exponentials with the given per-axis frequency sets."""
    freq_sets = tuple(tuple(complex(w) for w in fs) for fs in freq_sets)
    sizes = [len(fs) for fs in freq_sets]
    if any(n == 0 for n in sizes):
        raise ParamError("frequency sets must be nonempty")
    d = len(freq_sets)
    need = max(sizes)

    def make(T: int) -> Filter:
        if T < need:
            return Filter.impulse(d)
        return simple_exp_filter(freq_sets, T)

    return Certificate(FILTERING, d, 0.0, _rho_simple(sizes), math.inf, make,
                       label=label or f"simple-exp(N={sizes})")


def predictor_exp_certificate(omega: complex, kappa: int,
                              label: str = "") -> Certificate:
    """Causal certificate for a quasi-stable exponential, lag ``kappa``."""
    omega = complex(omega)
    if omega.real > 0:
        raise ParamError("quasi-stability requires Re(omega) <= 0")
    if kappa < 0:
        raise ParamError("kappa must be nonnegative")
    rho = 2.0 * math.sqrt(max(2, 2 * kappa + 1))
    return Certificate(
        PREDICTION, 1, 0.0, rho, math.inf,
        lambda T: predictor_exp_filter(omega, T, kappa),
        kappa=kappa, T0=kappa,
        label=label or f"pred-exp({omega}, kappa={kappa})")


def exp_poly_certificate(p: ExpPolynomial, epsilon: float = 1e-3,
                         label: str = "") -> Certificate:
    """Certificate for a general exponential polynomial, from its frequency structure.

    Monomial factors ``tau^alpha`` are handled by splitting each partial
    frequency into ``m_j + 1`` copies shifted by multiples of ``epsilon``
    (a finite version of the limiting construction); the result is exact for
    purely exponential sums (all m_j = 0) and otherwise approximates the class
    with an error that shrinks with ``epsilon`` and is measured, never assumed.
    The filter depends only on the frequency sets and degrees, not on the
    coefficients.
    """
    if epsilon <= 0:
        raise ParamError("epsilon must be positive")
    degs = p.max_degrees()
    base_sets = p.freq_sets()
    ext_sets = []
    for j, fs in enumerate(base_sets):
        ext = []
        for w in fs:
            for k in range(degs[j] + 1):
                ext.append(w - k * epsilon)
        if len(set(ext)) != len(ext):
            raise ParamError("epsilon splitting collides with an existing frequency")
        ext_sets.append(tuple(ext))
    sizes = p.partial_sizes()
    d = p.d
    need = max(len(s) for s in ext_sets)

    def make(T: int) -> Filter:
        if T < need:
            return Filter.impulse(d)
        return simple_exp_filter(ext_sets, T)

    return Certificate(FILTERING, d, 0.0, _rho_simple(sizes), math.inf, make,
                       exact=all(m == 0 for m in degs),
                       label=label or f"exp-poly(N={list(sizes)})")


def combine_certificates(certs: Sequence[Certificate],
                         lambdas: Sequence[complex]) -> Certificate:
    """Certificate for ``sum_j lambda_j s_j`` given certificates for each s_j.

    Uses the product construction ``1 - q = prod_j (1 - q_j)`` with per-factor
    order ``floor(T/m)``. Parameter updates: ``rho+ = (2m-1)^{d/2} 2^m
    rho_1...rho_m``, matching ``theta+``, horizon halved; for predictors the
    lag is the minimum and ``T0+ = m max_j T0_j``. The filters do not depend
    on the coefficients.
    """
    certs = list(certs)
    lambdas = [complex(l) for l in lambdas]
    if not certs:
        raise ParamError("need at least one certificate")
    if len(lambdas) != len(certs):
        raise ParamError("one coefficient per certificate")
    m = len(certs)
    kind, d = certs[0].kind, certs[0].d
    if any(c.kind != kind or c.d != d for c in certs):
        raise ParamError("certificates must share kind and dimension")
    if m == 1:
        c0, l0 = certs[0], lambdas[0]
        return Certificate(kind, d, abs(l0) * c0.theta, c0.rho, c0.L, c0.make,
                           kappa=c0.kappa, T0=c0.T0, exact=c0.exact,
                           label=f"combine[{c0.label}]")
    L = min(c.L for c in certs)
    L_plus = math.inf if math.isinf(L) else L // 2
    rho_prod = float(np.prod([c.rho for c in certs]))
    factor = (2 * m - 1) ** (d / 2)
    rho_plus = factor * 2 ** m * rho_prod
    theta_plus = factor * 2 ** (m - 1) * rho_prod * sum(
        c.theta * abs(l) / c.rho for c, l in zip(certs, lambdas))
    kappa_plus = min(c.kappa for c in certs) if kind == PREDICTION else None
    T0_plus = m * max(c.T0 for c in certs)

    def make(T_plus: int) -> Filter:
        T = T_plus // m
        q = _annihilator_combination([c.make(T) for c in certs])
        if kind == PREDICTION:
            q = rebox_filter(q, ONE_SIDED, q.order, kappa=kappa_plus)
        return q

    return Certificate(kind, d, theta_plus, rho_plus, L_plus, make,
                       kappa=kappa_plus, T0=T0_plus,
                       exact=all(c.exact for c in certs),
                       label="combine[" + ", ".join(c.label for c in certs) + "]")


def modulate_certificate(cert: Certificate, omega: Sequence[float],
                         phase: float = 0.0) -> Certificate:
    """Certificate for the modulated class ``exp(i(omega.tau + phase)) s_tau``.

    The filters are modulated coefficient-wise; all parameters are unchanged
    (the l2 norm is modulation invariant). ``phase`` only rotates the signal,
    not the filter; it is accepted for symmetry with the signal operation.
    """
    del phase
    omega = tuple(float(w) for w in omega)
    if len(omega) != cert.d:
        raise ParamError("frequency vector dimension mismatch")
    return Certificate(
        cert.kind, cert.d, cert.theta, cert.rho, cert.L,
        lambda T: cert.make(T).modulate(omega),
        kappa=cert.kappa, T0=cert.T0, exact=cert.exact,
        label=f"modulate[{cert.label}]")


def lift_certificate(cert: Certificate, d_plus: int) -> Certificate:
    """View a d-dimensional certificate as one in dimension ``d_plus > d``.

    New axes get uniform averaging factors ((2T+1)^{-1} two-sided, or the
    causal uniform window for predictors); ``rho`` is unchanged for filtering
    and picks up ``max(2, 2 kappa + 1)^{(d+-d)/2}`` per the causal window
    shape for prediction, ``theta`` scales by ``(2L+1)^{(d+-d)/2}``.
    """
    extra = d_plus - cert.d
    if extra <= 0:
        raise ParamError("d_plus must exceed the certificate dimension")
    if cert.theta > 0 and math.isinf(cert.L):
        raise ParamError("lifting an inexact certificate needs a finite horizon")
    theta_plus = 0.0 if cert.theta == 0 else (2 * cert.L + 1) ** (extra / 2) * cert.theta
    if cert.kind == FILTERING:
        rho_plus = cert.rho

        def axis_factor(T: int) -> Filter:
            return Filter.two_sided(1, T, np.full(2 * T + 1, 1.0 / (2 * T + 1)))
    else:
        rho_plus = max(2, 2 * cert.kappa + 1) ** (extra / 2) * cert.rho

        def axis_factor(T: int) -> Filter:
            return predictor_exp_filter(0.0, T, cert.kappa)

    def make(T: int) -> Filter:
        q = cert.make(T)
        for _ in range(extra):
            q = filter_tensor(q, axis_factor(T))
        return q

    return Certificate(cert.kind, d_plus, theta_plus, rho_plus, cert.L, make,
                       kappa=cert.kappa, T0=max(cert.T0, cert.kappa or 0),
                       exact=cert.exact, label=f"lift[{cert.label}]->d{d_plus}")


def tensor_certificate(a: Certificate, b: Certificate) -> Certificate:
    """Certificate for the tensor product ``s'_{tau'} s''_{tau''}`` (exact inputs only)."""
    if a.theta != 0 or b.theta != 0:
        raise ParamError("tensor products require exact certificates (theta = 0)")
    if a.kind != b.kind:
        raise ParamError("tensor products require matching kinds")
    if a.kind == PREDICTION and a.kappa != b.kappa:
        raise ParamError("tensor products of predictors require equal lags")
    return Certificate(
        a.kind, a.d + b.d, 0.0, a.rho * b.rho, min(a.L, b.L),
        lambda T: filter_tensor(a.make(T), b.make(T)),
        kappa=a.kappa, T0=max(a.T0, b.T0), exact=a.exact and b.exact,
        label=f"tensor[{a.label}, {b.label}]")


# --------------------------------------------------------------------------
# regular difference operators and discrete harmonic fields
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularOperator:
    """Stencil operator ``(D f)_tau = sum_l w_l f_{tau - alpha(l)}``.

    Regularity: the offsets span R^d, the weight moduli sum to at most one,
    and the modulus-weighted mean offset vanishes.
    """

    offsets: tuple[tuple[int, ...], ...]
    weights: tuple[complex, ...]

    @property
    def d(self) -> int:
        return len(self.offsets[0])

    def to_filter(self) -> Filter:
        reach = max(max(abs(a) for a in off) for off in self.offsets)
        box = Box.cube(self.d, reach)
        data = np.zeros(box.shape, dtype=np.complex128)
        for off, w in zip(self.offsets, self.weights):
            data[tuple(o + reach for o in off)] += w
        return Filter.two_sided(self.d, reach, data)

    def apply(self, x: Field, eval_box: Box) -> Field:
        return convolve(self.to_filter(), x, eval_box)


def make_regular_operator(offsets: Sequence[Sequence[int]],
                          weights: Sequence[complex]) -> RegularOperator:
    """Validate regularity (R.1, R.2) and build the operator.

    Raises ``RegularityError`` naming the violated condition.
    """
    offsets = tuple(tuple(int(a) for a in off) for off in offsets)
    weights = tuple(complex(w) for w in weights)
    if not offsets or len(offsets) != len(weights):
        raise ParamError("need matching, nonempty offsets and weights")
    d = len(offsets[0])
    if any(len(off) != d for off in offsets):
        raise ParamError("offsets must share one dimension")
    mods = np.array([abs(w) for w in weights])
    if np.any(mods == 0):
        raise RegularityError("R.2", "all weights must be nonzero")
    if np.linalg.matrix_rank(np.array(offsets, dtype=float)) < d:
        raise RegularityError("R.1", "offsets do not span R^d")
    if mods.sum() > 1 + 1e-12:
        raise RegularityError("R.2a", f"weight moduli sum to {mods.sum():.6g} > 1")
    mean_off = mods @ np.array(offsets, dtype=float)
    if np.abs(mean_off).max() > 1e-12 * max(1.0, np.abs(offsets).max()):
        raise RegularityError("R.2b", f"modulus-weighted mean offset {mean_off} != 0")
    return RegularOperator(offsets, weights)


def four_neighbor_averaging(d: int = 2) -> RegularOperator:
    """The 2d-point nearest-neighbor averaging operator (discrete harmonicity)."""
    offsets, weights = [], []
    for j in range(d):
        for eps in (+1, -1):
            off = [0] * d
            off[j] = eps
            offsets.append(tuple(off))
            weights.append(1.0 / (2 * d))
    return make_regular_operator(offsets, weights)


def _chebyshev_coeffs(n: int) -> list[int]:
    """Monomial coefficients of the degree-n Chebyshev polynomial (ascending)."""
    t0, t1 = [1], [0, 1]
    if n == 0:
        return t0
    for _ in range(n - 1):
        t2 = [0] + [2 * c for c in t1]
        t2 = [a - b for a, b in zip(t2, t0 + [0] * (len(t2) - len(t0)))]
        t0, t1 = t1, t2
    return t1


def _divide_by_one_minus_z(coeffs: Sequence[float]) -> list[float]:
    """Exact synthetic division of c(z) by (1 - z); c(1) must vanish."""
    b, acc = [], 0
    for c in coeffs[:-1]:
        acc = c + acc
        b.append(acc)
    if abs(acc + coeffs[-1]) > 1e-9 * max(abs(c) for c in coeffs):
        raise ParamError("polynomial is not divisible by (1 - z)")
    return b


def _filter_add(a: Filter, b: Filter) -> Filter:
    order = max(a.order, b.order)
    return Filter.two_sided(
        a.d, order,
        a.pad_to_cube(order).data + b.pad_to_cube(order).data)


def harmonic_filter(D: RegularOperator, n: int, c24: int = 1) -> Filter:
    """Filter reproducing the discrete harmonic fields of a regular operator.

    Builds the polynomial ``R_n = (P_n Q^{c24 n})^d`` with ``P_n = (1 -
    T_n)/(n^2 (1 - z))`` (T_n Chebyshev) and ``Q = (1+z)/2``, then substitutes
    the stencil: ``q = R_n(D)``. ``R_n(1) = 1``, so ``q`` reproduces every
    field fixed by ``D`` at points whose iterated stencil reads stay inside
    the data box. ``c24`` trades support size against the filter norm.
    """
    if n < 1:
        raise ParamError("degree parameter n must be >= 1")
    if c24 < 1:
        raise ParamError("c24 must be a positive integer")
    cheb = _chebyshev_coeffs(n)
    one_minus_t = [-c for c in cheb]
    one_minus_t[0] += 1
    p_n = [c / float(n * n) for c in _divide_by_one_minus_z(one_minus_t)]
    s_n = np.array(p_n, dtype=float)
    q_pow = np.array([0.5, 0.5])
    for _ in range(c24 * n):
        s_n = np.convolve(s_n, q_pow)
    r_n = np.array([1.0])
    for _ in range(D.d):
        r_n = np.convolve(r_n, s_n)
    # Horner in the filter algebra
    stencil = D.to_filter()
    acc = Filter.two_sided(D.d, 0, np.full((1,) * D.d, r_n[-1]))
    for c in r_n[-2::-1]:
        acc = filter_product(acc, stencil)
        acc = _filter_add(acc, Filter.two_sided(D.d, 0, np.full((1,) * D.d, c)))
    return acc


def harmonic_interior(D: RegularOperator, box: Box) -> Box:
    """Points of ``box`` whose stencil reads stay inside ``box``."""
    offs = np.array(D.offsets)
    lo = tuple(l + int(offs[:, j].max()) for j, l in enumerate(box.lo))
    hi = tuple(h + int(offs[:, j].min()) for j, h in enumerate(box.hi))
    if any(l > h for l, h in zip(lo, hi)):
        raise ParamError(f"box {box} has no interior for this stencil")
    return Box(lo, hi)


def random_discrete_harmonic(D: RegularOperator, box: Box, boundary: Field,
                             tol: float = 1e-10, max_iter: int = 200_000,
                             damping: float = 0.9) -> Field:
    """Solve the discrete Dirichlet problem ``f = D f`` on the interior of ``box``.

    Boundary values (all points of ``box`` outside the stencil interior) are
    read from ``boundary``. Damped Jacobi iteration, matrix-free; raises
    ``ConvergenceError`` if the interior residual does not reach ``tol``.
    """
    interior = harmonic_interior(D, box)
    data = np.zeros(box.shape, dtype=np.complex128)
    mask = np.zeros(box.shape, dtype=bool)
    mask[interior.slices_in(box)] = True
    for tau in box.points():
        idx = tuple(t - l for t, l in zip(tau, box.lo))
        if not mask[idx]:
            data[idx] = boundary.value(tau)
    f = Field(box, data)
    sl = interior.slices_in(box)
    for it in range(max_iter):
        Df = convolve(D.to_filter(), f, interior)
        new = f.data.copy()
        new[sl] = (1 - damping) * f.data[sl] + damping * Df.data
        resid = np.abs(Df.data - f.data[sl]).max()
        f = Field(box, new)
        if resid <= tol:
            return f
    raise ConvergenceError(
        f"Jacobi iteration did not reach residual {tol} in {max_iter} steps")


def reproduction_residual(q: Filter, s: Field, eval_box: Box) -> float:
    """Max pointwise error ``|s - q(D)s|`` on an evaluation box."""
    out = convolve(q, s, eval_box)
    return float(np.abs(out.data - s.restrict(eval_box).data).max())
