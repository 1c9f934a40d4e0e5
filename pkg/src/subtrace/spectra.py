"""Exact Laplace-Beltrami spectra of the model manifolds.

Four families are supported, each with a closed-form spectrum:

* ``torus``: flat torus ``R^n / (L_1 Z x ... x L_n Z)``; eigenvalues
  ``sum_i (2 pi k_i / L_i)^2`` over ``k`` in ``Z^n``.
* ``sphere``: unit round ``S^n``; ``l (l + n - 1)`` with the dimension of the
  degree-``l`` spherical harmonics as multiplicity.
* ``su2``: SU(2) with the metric of the unit ``S^3``.
* ``so3``: SO(3) as ``RP^3 = S^3 / {+-1}``, i.e. the even-``l`` part of ``S^3``.

Eigenvalues come out as ``(lams, mults)`` arrays sorted ascending.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.signal import fftconvolve

from .errors import ResourceExceeded, SpecParseError

TWO_PI = 2.0 * math.pi

# Enumeration budget: dense level arrays (tori with n >= 2), sparse block
# counts (circle, spheres), and raw lattice points (incommensurable tori).
MAX_LEVELS = 1 << 24
MAX_BLOCKS = 1 << 24
MAX_POINTS = 1 << 23

# Relative slack on the floating-point upper bounds.
_BOUND_SLACK = 1.0 + 1e-9

KINDS = ("torus", "sphere", "su2", "so3")


class SpectralBlock(NamedTuple):
    eigenvalue: float
    multiplicity: int


@dataclass(frozen=True)
class ManifoldSpectrum:
    """A model compact manifold, identified by its family and parameters."""

    kind: str
    dimension: int
    sides: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown manifold kind {self.kind!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if self.kind == "torus":
            if len(self.sides) != self.dimension:
                raise ValueError("torus needs exactly one side length per axis")
            if any(not (s > 0 and math.isfinite(s)) for s in self.sides):
                raise ValueError("torus side lengths must be positive and finite")
        elif self.sides:
            raise ValueError(f"{self.kind} takes no side lengths")
        if self.kind in ("su2", "so3") and self.dimension != 3:
            raise ValueError(f"{self.kind} has dimension 3")

    @classmethod
    def torus(cls, n: int = 1, sides: float | tuple[float, ...] | None = None) -> ManifoldSpectrum:
        if sides is None:
            sides = (TWO_PI,) * n
        elif isinstance(sides, (int, float)):
            sides = (float(sides),) * n
        return cls("torus", n, tuple(float(s) for s in sides))

    @classmethod
    def circle(cls, length: float = TWO_PI) -> ManifoldSpectrum:
        return cls.torus(1, (length,))

    @classmethod
    def sphere(cls, n: int) -> ManifoldSpectrum:
        return cls("sphere", n)

    @classmethod
    def su2(cls) -> ManifoldSpectrum:
        return cls("su2", 3)

    @classmethod
    def so3(cls) -> ManifoldSpectrum:
        return cls("so3", 3)

    @property
    def n(self) -> int:
        return self.dimension

    @property
    def volume(self) -> float:
        if self.kind == "torus":
            return math.prod(self.sides)
        if self.kind == "sphere":
            k = self.dimension + 1
            return 2.0 * math.pi ** (k / 2) / math.gamma(k / 2)
        if self.kind == "su2":
            return 2.0 * math.pi**2
        return math.pi**2

    @classmethod
    def parse(cls, text: str) -> ManifoldSpectrum:
        """Parse ``torus:n=2,sides=a,b``, ``sphere:n=3``, ``su2`` or ``so3``."""
        kind, params = parse_spec_string(text, list_keys=("sides",))
        if kind not in KINDS:
            raise SpecParseError(f"unknown manifold {kind!r}", text, 0)
        allowed = {"torus": {"n", "sides"}, "sphere": {"n"}, "su2": set(), "so3": set()}[kind]
        for key, (_, pos) in params.items():
            if key not in allowed:
                raise SpecParseError(f"unexpected parameter {key!r} for {kind}", text, pos)
        if kind in ("su2", "so3"):
            return cls(kind, 3)
        if "n" not in params:
            if kind == "torus" and "sides" in params:
                n = None
            else:
                raise SpecParseError(f"{kind} requires n=<dimension>", text, len(text))
        else:
            raw, pos = params["n"]
            try:
                n = int(raw)
            except ValueError:
                raise SpecParseError(f"n must be an integer, got {raw!r}", text, pos) from None
            if n < 1:
                raise SpecParseError("n must be positive", text, pos)
        if kind == "sphere":
            return cls.sphere(n)
        sides = None
        if "sides" in params:
            raw, pos = params["sides"]
            sides = []
            for piece in raw.split(","):
                try:
                    value = float(piece)
                except ValueError:
                    raise SpecParseError(f"bad side length {piece!r}", text, pos) from None
                if not (value > 0 and math.isfinite(value)):
                    raise SpecParseError("side lengths must be positive", text, pos)
                sides.append(value)
                pos += len(piece) + 1
            if n is None:
                n = len(sides)
            if len(sides) == 1 and n > 1:
                sides = sides * n
            if len(sides) != n:
                raise SpecParseError(f"expected {n} side lengths, got {len(sides)}", text, params["sides"][1])
        return cls.torus(n, tuple(sides) if sides else None)

    def __str__(self) -> str:
        if self.kind == "torus":
            return f"torus:n={self.dimension},sides=" + ",".join(repr(s) for s in self.sides)
        if self.kind == "sphere":
            return f"sphere:n={self.dimension}"
        return self.kind


def parse_spec_string(text: str, list_keys: tuple[str, ...] = ()) -> tuple[str, dict[str, tuple[str, int]]]:
    """Split ``kind:key=value,key=value`` into the kind and ``{key: (value, column)}``.

    Keys listed in ``list_keys`` swallow the following bare (``=``-less) tokens,
    so ``sides=1,2,3`` parses to ``"1,2,3"``.
    """
    head, sep, rest = text.strip().partition(":")
    kind = head.strip().lower()
    if not kind:
        raise SpecParseError("empty spec", text, 0)
    params: dict[str, tuple[str, int]] = {}
    if not sep:
        return kind, params
    offset = text.index(":") + 1
    if not rest.strip():
        raise SpecParseError("expected key=value after ':'", text, offset)
    current = None
    pos = offset
    for token in rest.split(","):
        if "=" in token:
            key, _, value = token.partition("=")
            key = key.strip().lower()
            if not key:
                raise SpecParseError("missing parameter name", text, pos)
            if key in params:
                raise SpecParseError(f"duplicate parameter {key!r}", text, pos)
            params[key] = (value.strip(), pos + len(token) - len(value))
            current = key if key in list_keys else None
        elif current is not None:
            value, vpos = params[current]
            params[current] = (f"{value},{token.strip()}", vpos)
        else:
            raise SpecParseError(f"expected key=value, got {token!r}", text, pos)
        pos += len(token) + 1
    return kind, params


# ---------------------------------------------------------------------------
# torus lattice arithmetic


@lru_cache(maxsize=None)
def _torus_form(sides: tuple[float, ...]) -> tuple[float, tuple[int, ...]] | None:
    """Integer quadratic form for a commensurable torus.

    Returns ``(scale, weights)`` with eigenvalues ``scale * sum_i w_i k_i^2``, or
    ``None`` when the side ratios are not (small) rationals.
    """
    base = sides[0]
    fracs = []
    for side in sides:
        ratio = side / base
        frac = Fraction(ratio).limit_denominator(1000)
        if abs(float(frac) - ratio) > 1e-13 * ratio:
            return None
        fracs.append(frac)
    # (L_0 / L_i)^2 = den^2 / num^2
    common = math.lcm(*(f.numerator**2 for f in fracs))
    weights = tuple(common * f.denominator**2 // f.numerator**2 for f in fracs)
    scale = (TWO_PI / base) ** 2 / common
    return scale, weights


def _level_cap(scale: float, cutoff: float) -> int:
    """Largest integer ``m`` with ``scale * m <= cutoff`` (float comparison)."""
    m = int(math.floor(cutoff / scale))
    while m > 0 and scale * m > cutoff:
        m -= 1
    while scale * (m + 1) <= cutoff:
        m += 1
    return m


def _axis_counts(weight: int, cap: int) -> np.ndarray:
    out = np.zeros(cap + 1, dtype=np.int64)
    k = np.arange(1, math.isqrt(cap // weight) + 1, dtype=np.int64)
    out[weight * k * k] = 2
    out[0] = 1
    return out


def _convolve_counts(a: np.ndarray, b: np.ndarray, cap: int) -> np.ndarray:
    nz = np.flatnonzero(b)
    if nz.size <= 64:
        out = np.zeros(cap + 1, dtype=np.int64)
        for shift in nz:
            out[shift:] += b[shift] * a[: cap + 1 - shift]
        return out
    raw = fftconvolve(a.astype(np.float64), b.astype(np.float64))[: cap + 1]
    out = np.rint(raw)
    if np.max(np.abs(out - raw)) > 0.25:
        raise ResourceExceeded("level counts too large for exact FFT convolution")
    return out.astype(np.int64)


def _torus_arrays(spec: ManifoldSpectrum, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
    form = _torus_form(spec.sides)
    if form is None:
        return _torus_bruteforce(spec, cutoff)
    scale, weights = form
    cap = _level_cap(scale, cutoff)
    if len(weights) == 1:
        w = weights[0]
        kmax = math.isqrt(cap // w)
        if kmax + 1 > MAX_BLOCKS:
            raise ResourceExceeded(f"cutoff {cutoff:g} needs {kmax + 1} blocks (budget {MAX_BLOCKS})")
        k = np.arange(kmax + 1, dtype=np.int64)
        lams = scale * (w * k * k).astype(np.float64)
        mults = np.full(kmax + 1, 2, dtype=np.int64)
        mults[0] = 1
        return lams, mults
    if cap + 1 > MAX_LEVELS:
        raise ResourceExceeded(f"cutoff {cutoff:g} needs {cap + 1} levels (budget {MAX_LEVELS})")
    counts = _axis_counts(weights[0], cap)
    for w in weights[1:]:
        counts = _convolve_counts(counts, _axis_counts(w, cap), cap)
    levels = np.flatnonzero(counts)
    return scale * levels.astype(np.float64), counts[levels]


def _torus_bruteforce(spec: ManifoldSpectrum, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
    # Incommensurable sides: blocks are grouped by exact float equality only.
    freqs = np.array([TWO_PI / s for s in spec.sides])
    kmax = [int(math.floor(math.sqrt(cutoff) / f)) + 1 for f in freqs]
    total = math.prod(2 * k + 1 for k in kmax)
    if total > MAX_POINTS:
        raise ResourceExceeded(f"cutoff {cutoff:g} needs {total} lattice points (budget {MAX_POINTS})")
    lams = np.zeros(1)
    for f, k in zip(freqs, kmax):
        axis = (f * np.arange(-k, k + 1)) ** 2
        lams = (lams[:, None] + axis[None, :]).ravel()
        lams = lams[lams <= cutoff]
    values, counts = np.unique(lams, return_counts=True)
    return values, counts.astype(np.int64)


# ---------------------------------------------------------------------------
# spheres


def _sphere_degree_cap(n: int, cutoff: float) -> int:
    """Largest ``l`` with ``l (l + n - 1) <= cutoff``."""
    if cutoff < 0:
        return -1
    l = int((-(n - 1) + math.sqrt((n - 1) ** 2 + 4.0 * cutoff)) / 2.0)
    while l > 0 and l * (l + n - 1) > cutoff:
        l -= 1
    while (l + 1) * (l + n) <= cutoff:
        l += 1
    return l


def _harmonic_dims(n: int, l: np.ndarray) -> np.ndarray:
    if n == 1:
        out = np.full(l.shape, 2, dtype=np.int64)
    elif n == 2:
        out = 2 * l + 1
    elif n == 3:
        out = (l + 1) ** 2
    else:
        vals = [math.comb(int(j) + n, n) - (math.comb(int(j) + n - 2, n) if j >= 2 else 0) for j in l]
        if vals and max(vals) >= 2**62:
            raise ResourceExceeded("multiplicities overflow 64-bit integers")
        out = np.array(vals, dtype=np.int64)
    out = np.asarray(out, dtype=np.int64)
    out[l == 0] = 1
    return out


def _sphere_arrays(spec: ManifoldSpectrum, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
    n = spec.dimension
    lmax = _sphere_degree_cap(n, cutoff)
    step = 2 if spec.kind == "so3" else 1
    if lmax // step + 1 > MAX_BLOCKS:
        raise ResourceExceeded(f"cutoff {cutoff:g} needs {lmax // step + 1} blocks (budget {MAX_BLOCKS})")
    l = np.arange(0, lmax + 1, step, dtype=np.int64)
    lams = (l * (l + n - 1)).astype(np.float64)
    return lams, _harmonic_dims(n, l)


# ---------------------------------------------------------------------------
# public operations


class _SpectrumCache:
    """Largest enumeration seen per manifold; smaller cutoffs are slices of it."""

    def __init__(self, maxsize: int = 32) -> None:
        self._lock = threading.Lock()
        self._store: dict[ManifoldSpectrum, tuple[float, np.ndarray, np.ndarray]] = {}
        self._maxsize = maxsize

    def get(self, spec: ManifoldSpectrum, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
        with self._lock:
            hit = self._store.get(spec)
        if hit is not None and hit[0] >= cutoff:
            _, lams, mults = hit
            stop = int(np.searchsorted(lams, cutoff, side="right"))
            return lams[:stop], mults[:stop]
        if spec.kind == "torus":
            lams, mults = _torus_arrays(spec, cutoff)
        else:
            lams, mults = _sphere_arrays(spec, cutoff)
        lams.setflags(write=False)
        mults.setflags(write=False)
        with self._lock:
            if len(self._store) >= self._maxsize:
                self._store.pop(next(iter(self._store)))
            self._store[spec] = (cutoff, lams, mults)
        return lams, mults

    def clear(self) -> None:
        with self._lock:
            self._store.clear()


_cache = _SpectrumCache()


def spectrum_arrays(spec: ManifoldSpectrum, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
    """Distinct eigenvalues ``<= cutoff`` and their multiplicities, ascending.

    The returned arrays are read-only views into a shared cache.
    """
    if not cutoff >= 0:
        raise ValueError("cutoff must be nonnegative")
    if not math.isfinite(cutoff):
        raise ResourceExceeded("infinite cutoff")
    return _cache.get(spec, float(cutoff))


def enumerate_spectrum(spec: ManifoldSpectrum, cutoff: float) -> list[SpectralBlock]:
    lams, mults = spectrum_arrays(spec, cutoff)
    return [SpectralBlock(float(lam), int(m)) for lam, m in zip(lams, mults)]


def counting(spec: ManifoldSpectrum, lam: float) -> int:
    """N(lam): number of eigenvalues ``<= lam`` counted with multiplicity."""
    if not lam >= 0:
        raise ValueError("lam must be nonnegative")
    _, mults = spectrum_arrays(spec, lam)
    return int(mults.sum())


def weyl_constant(spec: ManifoldSpectrum) -> float:
    n = spec.dimension
    return spec.volume / (math.gamma(n / 2 + 1) * (4.0 * math.pi) ** (n / 2))


def counting_bound_coefficients(spec: ManifoldSpectrum) -> np.ndarray:
    """Coefficients ``c_0..c_n >= 0`` with ``N(u) <= sum_j c_j u^(j/2)`` for all ``u >= 0``.

    Torus: the unit cubes centred at lattice points of the ellipsoid
    ``E = {sum (2 pi k_i / L_i)^2 <= u}`` (semi-axes ``a_i = L_i sqrt(u) / 2 pi``)
    are disjoint and lie in ``(1 + s) E`` with ``s = 1/2 sqrt(sum 1/a_i^2)``, so
    ``N(u) <= omega_n prod(a_i) (1 + s)^n = K (sqrt(u) + d)^n`` with
    ``d = pi sqrt(sum 1/L_i^2)``.

    Sphere ``S^n``: ``N(u) = C(L+n, n) + C(L+n-1, n)`` for the top degree ``L``,
    an increasing polynomial in ``L``, and ``L <= sqrt(u)``.  SO(3) sums
    ``(2j+1)^2`` over ``j <= J`` which is ``(J+1)(2J+1)(2J+3)/3`` with ``J <= sqrt(u)/2``.
    """
    n = spec.dimension
    if spec.kind == "torus":
        omega = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
        k = omega * math.prod(s / TWO_PI for s in spec.sides)
        d = math.pi * math.sqrt(sum(1.0 / s**2 for s in spec.sides))
        coeffs = k * np.array([math.comb(n, j) * d ** (n - j) for j in range(n + 1)])
    elif spec.kind == "so3":
        coeffs = P.polyfromroots([-2.0, -1.0, -3.0]) / 6.0
    else:
        upper = P.polyfromroots([-float(j) for j in range(1, n + 1)])
        lower = P.polyfromroots([-float(j) for j in range(0, n)])
        coeffs = (upper + lower) / math.factorial(n)
    return np.clip(coeffs, 0.0, None) * _BOUND_SLACK


def counting_upper_bound(spec: ManifoldSpectrum, lam: float) -> float:
    """An upper bound on ``counting(spec, lam)`` valid for every ``lam >= 0``."""
    if not lam >= 0:
        raise ValueError("lam must be nonnegative")
    n = spec.dimension
    if spec.kind == "torus":
        poly = float(P.polyval(math.sqrt(lam), counting_bound_coefficients(spec)))
        # lattice points also lie in the box |k_i| <= a_i
        box = 1.0
        for side in spec.sides:
            a = side * math.sqrt(lam) / TWO_PI
            box *= 2 * math.floor(a * (1 + 1e-12) + 1e-12) + 1
        return min(poly, box)
    root = (-(n - 1) + math.sqrt((n - 1) ** 2 + 4.0 * lam)) / 2.0
    if spec.kind == "so3":
        j = root / 2.0
        return (j + 1) * (2 * j + 1) * (2 * j + 3) / 3.0 * _BOUND_SLACK
    upper = math.prod(root + j for j in range(1, n + 1))
    lower = math.prod(root + j for j in range(0, n))
    return (upper + lower) / math.factorial(n) * _BOUND_SLACK


def enumeration_cost(spec: ManifoldSpectrum, cutoff: float) -> tuple[int, int]:
    """``(estimated cost, budget)`` of enumerating up to ``cutoff``."""
    if spec.kind != "torus":
        return _sphere_degree_cap(spec.dimension, cutoff) + 1, MAX_BLOCKS
    form = _torus_form(spec.sides)
    if form is None:
        cost = math.prod(2 * (math.sqrt(cutoff) * s / TWO_PI + 1) + 1 for s in spec.sides)
        return int(min(cost, 2**62)), MAX_POINTS
    scale, weights = form
    levels = cutoff / scale
    if len(weights) == 1:
        return int(math.sqrt(levels / weights[0])) + 1, MAX_BLOCKS
    return int(min(levels, 2**62)) + 1, MAX_LEVELS
