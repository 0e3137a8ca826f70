"""Complex fields on boxes of the integer grid, filters, and the finite Fourier transform.

A ``Field`` is a dense complex-valued function on an axis-aligned box in Z^d,
stored row-major. A ``Filter`` is a field of coefficients centered at the
origin (two-sided support ``{|tau| <= T}``) or on a one-sided cube
(``{kappa <= tau_j <= T}``); it acts on fields by convolution,

    (q(D) x)_t = sum_tau  q_tau * x_{t - tau}.

The transform used throughout is the unitary Fourier transform on the odd
symmetric window ``{|tau| <= T}``, evaluated on the grid of (2T+1)-th roots
of unity indexed by exponents ``n in {-T..T}``:

    (F_T x)(mu_n) = (2T+1)^{-d/2} * sum_{|tau|<=T} x_tau * mu_n^tau,
    mu_n = exp(2*pi*i*n/(2T+1)).

Seminorms: ``norm(x, T, p)`` is the l_p norm of the spatial values on the
window, ``star_norm(x, T, p)`` the l_p norm of the transform values.

Reading a field outside its box is an error (``DomainError``), never silent
zero padding. Filters, by contrast, are genuinely zero off their support;
``Filter.pad_to_cube`` makes that extension explicit when a filter has to be
viewed as a field on a larger window.

All objects are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ParamError

__all__ = [
    "Box",
    "Field",
    "Filter",
    "Spectrum",
    "shift",
    "convolve",
    "dft",
    "idft",
    "norm",
    "star_norm",
    "filter_product",
    "filter_tensor",
    "rebox_filter",
    "write_zdf",
    "read_zdf",
]

ZDF_MAGIC = b"ZDF1"

_PNORMS = (1, 2, math.inf)


def _as_int_tuple(v: Iterable[int], d: int | None = None) -> tuple[int, ...]:
    t = tuple(int(x) for x in v)
    if d is not None and len(t) != d:
        raise ParamError(f"expected a length-{d} integer vector, got {t}")
    return t


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``{tau : lo_j <= tau_j <= hi_j}`` in Z^d."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", _as_int_tuple(self.lo))
        object.__setattr__(self, "hi", _as_int_tuple(self.hi, len(self.lo)))
        if len(self.lo) == 0:
            raise ParamError("dimension must be positive")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ParamError(f"empty box: lo={self.lo}, hi={self.hi}")

    @classmethod
    def cube(cls, d: int, T: int, center: Sequence[int] | None = None) -> "Box":
        """Centered cube ``{|tau - center| <= T}`` (center defaults to 0)."""
        if T < 0:
            raise ParamError("cube order must be nonnegative")
        c = _as_int_tuple(center, d) if center is not None else (0,) * d
        return cls(tuple(ci - T for ci in c), tuple(ci + T for ci in c))

    @classmethod
    def one_sided_cube(cls, d: int, kappa: int, T: int) -> "Box":
        """One-sided cube ``{kappa <= tau_j <= T}``."""
        if not 0 <= kappa <= T:
            raise ParamError(f"need 0 <= kappa <= T, got kappa={kappa}, T={T}")
        return cls((kappa,) * d, (T,) * d)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def contains_point(self, tau: Sequence[int]) -> bool:
        tau = _as_int_tuple(tau, self.d)
        return all(l <= t <= h for l, t, h in zip(self.lo, tau, self.hi))

    def contains_box(self, other: "Box") -> bool:
        if other.d != self.d:
            return False
        return all(sl <= ol and oh <= sh for sl, ol, oh, sh
                   in zip(self.lo, other.lo, other.hi, self.hi))

    def translate(self, v: Sequence[int]) -> "Box":
        v = _as_int_tuple(v, self.d)
        return Box(tuple(l + vi for l, vi in zip(self.lo, v)),
                   tuple(h + vi for h, vi in zip(self.hi, v)))

    def slices_in(self, parent: "Box") -> tuple[slice, ...]:
        """Index slices of this box inside ``parent``'s storage."""
        if not parent.contains_box(self):
            raise DomainError(f"box {self} not contained in {parent}")
        return tuple(slice(l - pl, h - pl + 1)
                     for l, h, pl in zip(self.lo, self.hi, parent.lo))

    def points(self):
        """Iterate over grid points in row-major order."""
        for idx in np.ndindex(*self.shape):
            yield tuple(l + i for l, i in zip(self.lo, idx))

    def __repr__(self):
        return f"Box(lo={self.lo}, hi={self.hi})"


def _frozen_array(data, shape) -> np.ndarray:
    arr = np.asarray(data, dtype=np.complex128).reshape(shape)
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Field:
    """Dense complex field on a box, stored row-major."""

    box: Box
    data: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        arr = _frozen_array(self.data, self.box.shape)
        object.__setattr__(self, "data", arr)

    @classmethod
    def zeros(cls, box: Box) -> "Field":
        return cls(box, np.zeros(box.shape, dtype=np.complex128))

    @classmethod
    def impulse(cls, d: int, at: Sequence[int] | None = None) -> "Field":
        at = _as_int_tuple(at, d) if at is not None else (0,) * d
        return cls(Box(at, at), np.ones((1,) * d, dtype=np.complex128))

    @property
    def d(self) -> int:
        return self.box.d

    def value(self, tau: Sequence[int]) -> complex:
        tau = _as_int_tuple(tau, self.d)
        if not self.box.contains_point(tau):
            raise DomainError(f"point {tau} outside {self.box}")
        idx = tuple(t - l for t, l in zip(tau, self.box.lo))
        return complex(self.data[idx])

    def restrict(self, box: Box) -> "Field":
        """Sub-field on ``box`` (must be contained in this field's box)."""
        return Field(box, self.data[box.slices_in(self.box)])

    def window(self, T: int, center: Sequence[int] | None = None) -> np.ndarray:
        """Values on the cube ``{|tau - center| <= T}`` as a (2T+1)^d array."""
        cube = Box.cube(self.d, T, center)
        if not self.box.contains_box(cube):
            raise DomainError(f"field on {self.box} does not cover {cube}")
        return self.data[cube.slices_in(self.box)]

    def __add__(self, other: "Field") -> "Field":
        if self.box != other.box:
            raise DomainError("field addition requires identical boxes")
        return Field(self.box, self.data + other.data)

    def __sub__(self, other: "Field") -> "Field":
        if self.box != other.box:
            raise DomainError("field subtraction requires identical boxes")
        return Field(self.box, self.data - other.data)

    def __mul__(self, scalar) -> "Field":
        return Field(self.box, self.data * complex(scalar))

    __rmul__ = __mul__

    def conj(self) -> "Field":
        return Field(self.box, np.conj(self.data))

    def __repr__(self):
        return f"Field(box={self.box})"


TWO_SIDED = "two-sided"
ONE_SIDED = "one-sided"


@dataclass(frozen=True, eq=False)
class Filter:
    """Filter coefficients with declared order and support convention.

    Two-sided filters live on the centered cube ``{|tau| <= order}``;
    one-sided filters on ``{kappa <= tau_j <= order}`` and may only be
    applied causally.
    """

    field: Field
    order: int
    kind: str = TWO_SIDED
    kappa: int | None = None

    def __post_init__(self):
        d = self.field.d
        if self.kind == TWO_SIDED:
            expected = Box.cube(d, self.order)
            if self.kappa is not None:
                raise ParamError("two-sided filters carry no lag")
        elif self.kind == ONE_SIDED:
            if self.kappa is None or self.kappa < 0:
                raise ParamError("one-sided filters need a lag kappa >= 0")
            expected = Box.one_sided_cube(d, self.kappa, self.order)
        else:
            raise ParamError(f"unknown filter kind {self.kind!r}")
        if self.field.box != expected:
            raise ParamError(
                f"{self.kind} filter of order {self.order} must live on "
                f"{expected}, got {self.field.box}")

    @classmethod
    def two_sided(cls, d: int, T: int, coeffs) -> "Filter":
        return cls(Field(Box.cube(d, T), coeffs), T, TWO_SIDED)

    @classmethod
    def one_sided(cls, d: int, kappa: int, T: int, coeffs) -> "Filter":
        return cls(Field(Box.one_sided_cube(d, kappa, T), coeffs), T,
                   ONE_SIDED, kappa)

    @classmethod
    def impulse(cls, d: int) -> "Filter":
        return cls.two_sided(d, 0, np.ones((1,) * d))

    @property
    def d(self) -> int:
        return self.field.d

    def coeff(self, tau: Sequence[int]) -> complex:
        """Coefficient at ``tau`` (zero off the support box)."""
        tau = _as_int_tuple(tau, self.d)
        if not self.field.box.contains_point(tau):
            return 0.0 + 0.0j
        return self.field.value(tau)

    def pad_to_cube(self, T: int) -> Field:
        """Zero-extend the coefficients to the centered cube of order T."""
        box = Box.cube(self.d, T)
        if not box.contains_box(self.field.box):
            raise DomainError(
                f"filter support {self.field.box} exceeds the cube of order {T}")
        out = np.zeros(box.shape, dtype=np.complex128)
        out[self.field.box.slices_in(box)] = self.field.data
        return Field(box, out)

    def l2(self) -> float:
        return float(np.linalg.norm(self.field.data.ravel(), 2))

    def l1(self) -> float:
        return float(np.abs(self.field.data).sum())

    def star_norm(self, T: int, p) -> float:
        """Starred seminorm of the zero-extended coefficients on window T."""
        return star_norm(self.pad_to_cube(T), T, p)

    def modulate(self, omega: Sequence[float]) -> "Filter":
        """Coefficient-wise modulation q_tau -> exp(i omega.tau) q_tau."""
        omega = tuple(float(w) for w in omega)
        if len(omega) != self.d:
            raise ParamError(f"expected a length-{self.d} frequency vector")
        box = self.field.box
        phase = np.zeros(box.shape)
        for j in range(self.d):
            axis = np.arange(box.lo[j], box.hi[j] + 1) * omega[j]
            phase = phase + axis.reshape((-1,) + (1,) * (self.d - 1 - j))
        return Filter(Field(box, self.field.data * np.exp(1j * phase)),
                      self.order, self.kind, self.kappa)

    def __repr__(self):
        lag = f", kappa={self.kappa}" if self.kind == ONE_SIDED else ""
        return f"Filter(order={self.order}, kind={self.kind}{lag}, d={self.d})"


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Values of the window-T Fourier transform, indexed by exponents in {-T..T}^d.

    Exponent vector ``n`` maps to storage slot ``n + T`` per axis; grid point
    ``mu_j = exp(2*pi*i*n_j/(2T+1))``.
    """

    T: int
    d: int
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        shape = (2 * self.T + 1,) * self.d
        arr = _frozen_array(self.values, shape)
        object.__setattr__(self, "values", arr)

    def value(self, n: Sequence[int]) -> complex:
        n = _as_int_tuple(n, self.d)
        if any(abs(nj) > self.T for nj in n):
            raise DomainError(f"exponent {n} outside {{-T..T}}^d with T={self.T}")
        return complex(self.values[tuple(nj + self.T for nj in n)])

    def lp(self, p) -> float:
        return _lp(self.values, p)

    def __repr__(self):
        return f"Spectrum(T={self.T}, d={self.d})"


def _lp(arr: np.ndarray, p) -> float:
    if p not in _PNORMS:
        raise ParamError(f"p must be one of 1, 2, inf; got {p}")
    mags = np.abs(np.asarray(arr).ravel())
    if p == 1:
        return float(mags.sum())
    if p == 2:
        return float(np.sqrt((mags ** 2).sum()))
    return float(mags.max()) if mags.size else 0.0


def shift(x: Field, v: Sequence[int]) -> Field:
    """Translate a field: ``shift(x, v)_tau = x_{tau - v}``.

    Pure relabeling; the box moves by ``v`` and the stored values are shared.
    """
    return Field(x.box.translate(v), x.data)


def convolve(q: Filter, x: Field, eval_box: Box) -> Field:
    """Filter output ``(q(D) x)_t = sum_tau q_tau x_{t-tau}`` on ``eval_box``.

    Every read ``t - tau`` with ``t`` in ``eval_box`` and ``tau`` in the
    filter support must lie inside ``x.box``; otherwise ``DomainError`` is
    raised (observation windows are never silently zero padded).
    """
    if q.d != x.d or eval_box.d != x.d:
        raise DomainError("dimension mismatch between filter, field and eval box")
    qbox = q.field.box
    need = Box(tuple(el - qh for el, qh in zip(eval_box.lo, qbox.hi)),
               tuple(eh - ql for eh, ql in zip(eval_box.hi, qbox.lo)))
    if not x.box.contains_box(need):
        raise DomainError(
            f"convolution on {eval_box} with support {qbox} reads {need}, "
            f"but the field only covers {x.box}")
    out = np.zeros(eval_box.shape, dtype=np.complex128)
    qdata = q.field.data
    for idx in np.ndindex(*qbox.shape):
        c = qdata[idx]
        if c == 0:
            continue
        tau = tuple(l + i for l, i in zip(qbox.lo, idx))
        src = Box(tuple(el - tj for el, tj in zip(eval_box.lo, tau)),
                  tuple(eh - tj for eh, tj in zip(eval_box.hi, tau)))
        out += c * x.data[src.slices_in(x.box)]
    return Field(eval_box, out)


@functools.lru_cache(maxsize=128)
def _dft_matrix(T: int) -> np.ndarray:
    """Per-axis transform matrix M[k, m] = omega^{(k-T)(m-T)}, omega = e^{2 pi i/(2T+1)}."""
    n = np.arange(-T, T + 1)
    M = np.exp(2j * np.pi * np.outer(n, n) / (2 * T + 1))
    M.flags.writeable = False
    return M


def _apply_axes(arr: np.ndarray, M: np.ndarray) -> np.ndarray:
    out = arr
    for axis in range(arr.ndim):
        out = np.tensordot(M, out, axes=([1], [axis]))
        out = np.moveaxis(out, 0, axis)
    return out


def dft_window(window: np.ndarray, T: int) -> np.ndarray:
    """Transform of a (2T+1)^d window array (direct per-axis summation)."""
    d = window.ndim
    return _apply_axes(np.asarray(window, dtype=np.complex128),
                       _dft_matrix(T)) * (2 * T + 1) ** (-d / 2)


def idft_window(values: np.ndarray, T: int) -> np.ndarray:
    """Inverse transform of a (2T+1)^d spectrum array."""
    d = values.ndim
    return _apply_axes(np.asarray(values, dtype=np.complex128),
                       np.conj(_dft_matrix(T))) * (2 * T + 1) ** (-d / 2)


def dft(x: Field, T: int) -> Spectrum:
    """Fourier transform of ``x`` on the window ``{|tau| <= T}``.

    ``x.box`` must cover the window. Exponent ``n`` of the result corresponds
    to the root of unity ``exp(2*pi*i*n/(2T+1))`` per axis.
    """
    return Spectrum(T, x.d, dft_window(x.window(T), T))


def idft(S: Spectrum) -> Field:
    """Inverse transform; ``idft(dft(x, T))`` equals ``x`` on the window."""
    return Field(Box.cube(S.d, S.T), idft_window(S.values, S.T))


def dft_window_fft(window: np.ndarray, T: int) -> np.ndarray:
    """FFT-path equivalent of :func:`dft_window` (same grid, same values).

    Kept as an optional fast path; agrees with the direct summation to
    floating precision and is exercised against it in the tests.
    """
    d = window.ndim
    N = 2 * T + 1
    arr = np.asarray(window, dtype=np.complex128)
    # ifft computes (1/N) sum_m a_m e^{+2 pi i k m / N}; reindex m = tau + T,
    # k = n mod N, and strip the resulting phases.
    out = arr
    n = np.arange(-T, T + 1)
    twiddle = np.exp(-2j * np.pi * T * n / N)
    for axis in range(d):
        out = np.fft.ifft(out, axis=axis) * N
        out = np.roll(out, T, axis=axis)
        shape = (1,) * axis + (N,) + (1,) * (d - 1 - axis)
        out = out * twiddle.reshape(shape)
    return out * N ** (-d / 2)


def norm(x: Field, T: int, p) -> float:
    """Spatial seminorm: l_p norm of the values on ``{|tau| <= T}``."""
    return _lp(x.window(T), p)


def star_norm(x: Field, T: int, p) -> float:
    """Starred seminorm: l_p norm of the window-T transform values."""
    return _lp(dft_window(x.window(T), T), p)


def _product_kind(a: Filter, b: Filter):
    if a.kind == ONE_SIDED and b.kind == ONE_SIDED:
        return ONE_SIDED, a.kappa + b.kappa
    if ONE_SIDED in (a.kind, b.kind):
        # mixed product stays one-sided only when the two-sided factor is a
        # scalar at the origin; otherwise the support straddles zero
        one = a if a.kind == ONE_SIDED else b
        other = b if a.kind == ONE_SIDED else a
        if other.order == 0:
            return ONE_SIDED, one.kappa
        return TWO_SIDED, None
    return TWO_SIDED, None


def filter_product(a: Filter, b: Filter) -> Filter:
    """Coefficient-wise Laurent multiplication; orders add.

    Satisfies ``|ab|_p <= |a|_1 |b|_p``.
    """
    if a.d != b.d:
        raise ParamError("filter product requires equal dimensions")
    d = a.d
    abox, bbox = a.field.box, b.field.box
    lo = tuple(al + bl for al, bl in zip(abox.lo, bbox.lo))
    hi = tuple(ah + bh for ah, bh in zip(abox.hi, bbox.hi))
    out = np.zeros(tuple(h - l + 1 for l, h in zip(lo, hi)), dtype=np.complex128)
    # accumulate shifted copies of the larger factor, driven by the smaller
    if abox.size <= bbox.size:
        small, big = a, b
    else:
        small, big = b, a
    sbox, gbox = small.field.box, big.field.box
    for idx in np.ndindex(*sbox.shape):
        c = small.field.data[idx]
        if c == 0:
            continue
        off = tuple(sl + i + gl - l for sl, i, gl, l
                    in zip(sbox.lo, idx, gbox.lo, lo))
        sl = tuple(slice(o, o + n) for o, n in zip(off, gbox.shape))
        out[sl] += c * big.field.data
    order = a.order + b.order
    kind, kappa = _product_kind(a, b)
    if kind == ONE_SIDED:
        target = Box.one_sided_cube(d, kappa, order)
    else:
        target = Box.cube(d, order)
    full = np.zeros(target.shape, dtype=np.complex128)
    full[Box(lo, hi).slices_in(target)] = out
    return Filter(Field(target, full), order, kind, kappa if kind == ONE_SIDED else None)


def filter_tensor(a: Filter, b: Filter) -> Filter:
    """Tensor product filter ``q_{(tau', tau'')} = a_{tau'} b_{tau''}``.

    The l2 norm multiplies exactly. The result lives on the enclosing cube of
    order ``max(ord a, ord b)`` (zero padded where one factor is shorter).
    """
    d = a.d + b.d
    order = max(a.order, b.order)
    prod = np.multiply.outer(a.field.data, b.field.data)
    if a.kind == ONE_SIDED and b.kind == ONE_SIDED:
        kappa = min(a.kappa, b.kappa)
        target = Box.one_sided_cube(d, kappa, order)
        kind = ONE_SIDED
    elif a.kind == TWO_SIDED and b.kind == TWO_SIDED:
        kappa = None
        target = Box.cube(d, order)
        kind = TWO_SIDED
    else:
        raise ParamError("tensor product of mixed filter kinds is not defined")
    inner = Box(a.field.box.lo + b.field.box.lo, a.field.box.hi + b.field.box.hi)
    full = np.zeros(target.shape, dtype=np.complex128)
    full[inner.slices_in(target)] = prod
    return Filter(Field(target, full), order, kind, kappa)


def rebox_filter(q: Filter, kind: str, order: int, kappa: int | None = None) -> Filter:
    """Re-declare a filter's support box, checking no nonzero coefficient is lost.

    Used to tighten e.g. a lag-0 one-sided product whose actual support starts
    at a larger lag.
    """
    d = q.d
    target = Box.cube(d, order) if kind == TWO_SIDED else Box.one_sided_cube(d, kappa, order)
    out = np.zeros(target.shape, dtype=np.complex128)
    src = q.field.box
    for idx in np.ndindex(*src.shape):
        c = q.field.data[idx]
        if c == 0:
            continue
        tau = tuple(l + i for l, i in zip(src.lo, idx))
        if not target.contains_point(tau):
            raise ParamError(f"nonzero coefficient at {tau} outside target box {target}")
        out[tuple(t - l for t, l in zip(tau, target.lo))] = c
    return Filter(Field(target, out), order, kind, kappa if kind == ONE_SIDED else None)


def write_zdf(x: Field, path) -> None:
    """Write a field in the ZDF1 binary format.

    Layout (little endian): magic ``ZDF1``, u32 d, then d pairs (i64 lo_j,
    i64 hi_j), then the row-major values as (f64 re, f64 im) pairs.
    """
    box = x.box
    with open(path, "wb") as fh:
        fh.write(ZDF_MAGIC)
        fh.write(struct.pack("<I", box.d))
        for lo, hi in zip(box.lo, box.hi):
            fh.write(struct.pack("<qq", lo, hi))
        fh.write(np.ascontiguousarray(x.data, dtype="<c16").tobytes())


def read_zdf(path) -> Field:
    """Read a field written by :func:`write_zdf`."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != ZDF_MAGIC:
            raise ValueError(f"not a ZDF1 file: magic {magic!r}")
        (d,) = struct.unpack("<I", fh.read(4))
        lo, hi = [], []
        for _ in range(d):
            l, h = struct.unpack("<qq", fh.read(16))
            lo.append(l)
            hi.append(h)
        box = Box(tuple(lo), tuple(hi))
        raw = fh.read(16 * box.size)
        if len(raw) != 16 * box.size:
            raise ValueError("truncated ZDF1 payload")
        data = np.frombuffer(raw, dtype="<c16").reshape(box.shape)
    return Field(box, data)
