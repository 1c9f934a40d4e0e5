"""Asymptotic reference formulas and the ratio tables that test them.

All trace asymptotes go through :func:`theorem_asymptote`; the heat and
stable formulas are the ``psi = identity`` and ``psi = lam^(alpha/2)`` cases
of it, so they agree with it bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .bernstein import BernsteinFunction
from .errors import DivergentTrace
from .spectra import ManifoldSpectrum, counting, spectrum_arrays, weyl_constant
from .trace_engine import counting_subordinated, trace


def heat_trace_asymptote(spec: ManifoldSpectrum, t: float) -> float:
    """Vol / (4 pi)^(n/2) * t^(-n/2)."""
    return theorem_asymptote(spec, BernsteinFunction.identity(), t)


def weyl_asymptote(spec: ManifoldSpectrum, lam: float) -> float:
    return weyl_constant(spec) * lam ** (spec.dimension / 2)


def subordinated_counting_asymptote(spec: ManifoldSpectrum, f: BernsteinFunction, lam: float) -> float:
    """Weyl constant times phi(lam)^(n/2)."""
    return weyl_constant(spec) * f.inverse(lam) ** (spec.dimension / 2)


def stable_asymptotes(spec: ManifoldSpectrum, alpha: float, mode: str, x: float) -> float:
    """Counting (``x = lam``) or trace (``x = t``) asymptote for ``psi = lam^(alpha/2)``."""
    f = BernsteinFunction.stable(alpha)
    if mode == "counting":
        return subordinated_counting_asymptote(spec, f, x)
    if mode == "trace":
        return theorem_asymptote(spec, f, x)
    raise ValueError(f"mode must be 'counting' or 'trace', got {mode!r}")


def trace_constant(spec: ManifoldSpectrum, r: float) -> float:
    """Weyl constant times Gamma(n/(2r) + 1); the gamma factor is 1 when ``r = 0``."""
    if r < 0:
        raise ValueError("regular variation index must be nonnegative")
    c = weyl_constant(spec)
    if r == 0:
        return c
    return c * math.gamma(spec.dimension / (2 * r) + 1)


def theorem_asymptote(spec: ManifoldSpectrum, f: BernsteinFunction, t: float) -> float:
    """Small-t asymptote of Tr(Q_t): ``trace_constant(spec, r) * phi(1/t)^(n/2)``."""
    if not t > 0:
        raise ValueError("t must be positive")
    try:
        phi = f.inverse(1.0 / t)
    except OverflowError:
        return math.inf
    return trace_constant(spec, f.rv_index) * phi ** (spec.dimension / 2)


class RatioRow(NamedTuple):
    parameter: float
    computed: float
    asymptote: float
    ratio: float


def _fit_slope(rows) -> float | None:
    pts = [(r.parameter, r.computed) for r in rows if r.computed > 0 and math.isfinite(r.computed)]
    if len(pts) < 2:
        return None
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


@dataclass(frozen=True)
class RatioReport:
    """Computed values against an asymptote, plus a log-log slope fit."""

    mode: str
    rows: tuple[RatioRow, ...]
    fitted_slope: float | None
    target_slope: float | None
    divergent: tuple[float, ...] = ()
    flags: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def build(cls, mode, rows, target_slope, divergent=(), flags=(), meta=None) -> RatioReport:
        rows = tuple(sorted((RatioRow(*map(float, r)) for r in rows), key=lambda r: r.parameter))
        divergent = tuple(sorted(float(d) for d in divergent))
        flags = tuple(flags)
        if divergent and "divergent" not in flags:
            flags += ("divergent",)
        if not rows and "empty" not in flags:
            flags += ("empty",)
        return cls(mode, rows, _fit_slope(rows), target_slope, divergent, flags, dict(meta or {}))

    @property
    def final_ratio(self) -> float | None:
        """Ratio at the row nearest the asymptotic end (smallest t, largest lam)."""
        if not self.rows:
            return None
        return self.rows[0].ratio if self.mode == "trace" else self.rows[-1].ratio

    def ratios_toward_limit(self) -> list[float]:
        """Ratios ordered from farthest to nearest the asymptotic regime."""
        ratios = [r.ratio for r in self.rows]
        return ratios[::-1] if self.mode == "trace" else ratios

    def approaches_one(self, floor: float = 0.0) -> bool:
        """``|ratio - 1|`` never grows toward the limit, ignoring moves below ``floor``.

        Pass the certified relative error as ``floor`` when the ratios are
        already equal to 1 up to the summation tolerance.
        """
        dev = [abs(r - 1) for r in self.ratios_toward_limit()]
        return all(b <= a or b <= floor for a, b in zip(dev, dev[1:]))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rows"] = [r._asdict() for r in self.rows]
        out["divergent"] = list(self.divergent)
        out["flags"] = list(self.flags)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> RatioReport:
        return cls(
            data["mode"],
            tuple(RatioRow(**r) for r in data["rows"]),
            data["fitted_slope"],
            data["target_slope"],
            tuple(data.get("divergent", ())),
            tuple(data.get("flags", ())),
            dict(data.get("meta", {})),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> RatioReport:
        return cls.from_dict(json.loads(text))


def ratio_table(
    spec: ManifoldSpectrum,
    f: BernsteinFunction,
    mode: str,
    grid,
    eps: float | None = None,
) -> RatioReport:
    """Pair computed traces (``mode="trace"``) or subordinated counts
    (``mode="counting"``) with their asymptotes over a geometric grid.

    Rows raising :class:`DivergentTrace` are listed in ``divergent`` and left
    out of the slope fit.
    """
    grid = [float(x) for x in grid]
    if len(grid) < 4:
        raise ValueError("grid needs at least 4 points")
    steps = [b / a for a, b in zip(grid, grid[1:])]
    if any(x <= 0 for x in grid) or not np.allclose(steps, steps[0], rtol=1e-9) or steps[0] == 1:
        raise ValueError("grid must be a geometric sequence of positive values")
    r = f.rv_index
    rows, divergent, flags = [], [], []
    if mode == "trace":
        target = -spec.dimension / (2 * r) if r > 0 else None
        for t in grid:
            try:
                cv = trace(spec, f, t, eps)
            except DivergentTrace:
                divergent.append(t)
                continue
            if not cv.certified:
                flags.append(f"uncertified:t={t!r}")
            asym = theorem_asymptote(spec, f, t)
            rows.append((t, cv.value, asym, cv.value / asym))
    elif mode == "counting":
        target = spec.dimension / (2 * r) if r > 0 else None
        for lam in grid:
            n_psi = counting_subordinated(spec, f, lam)
            asym = subordinated_counting_asymptote(spec, f, lam)
            rows.append((lam, n_psi, asym, n_psi / asym))
    else:
        raise ValueError(f"mode must be 'trace' or 'counting', got {mode!r}")
    if r == 0:
        flags.append("slowly-varying")
    return RatioReport.build(mode, rows, target, divergent, flags, {"manifold": str(spec), "psi": str(f)})


# ---------------------------------------------------------------------------
# counting functions and the tauberian link


@dataclass(frozen=True, eq=False)
class CountingFunction:
    """Right-continuous staircase given by its breakpoints and cumulative counts.

    ``cutoff`` is the largest argument the staircase is known to be exact for.
    """

    breakpoints: np.ndarray
    cumulative: np.ndarray
    cutoff: float

    def __post_init__(self) -> None:
        if self.breakpoints.shape != self.cumulative.shape or self.breakpoints.size == 0:
            raise ValueError("breakpoints and cumulative counts must be nonempty and aligned")
        if np.any(np.diff(self.breakpoints) <= 0) or np.any(np.diff(self.cumulative) <= 0):
            raise ValueError("breakpoints and counts must be strictly increasing")

    @classmethod
    def from_spectrum(cls, spec: ManifoldSpectrum, cutoff: float) -> CountingFunction:
        lams, mults = spectrum_arrays(spec, cutoff)
        return cls(np.array(lams), np.cumsum(mults), float(cutoff))

    @classmethod
    def from_jumps(cls, points, jumps, cutoff: float) -> CountingFunction:
        points = np.asarray(points, dtype=np.float64)
        return cls(points, np.cumsum(np.asarray(jumps, dtype=np.int64)), float(cutoff))

    @property
    def jumps(self) -> np.ndarray:
        return np.diff(self.cumulative, prepend=0)

    def __call__(self, lam: float) -> int:
        if lam > self.cutoff:
            raise ValueError(f"staircase is only known up to {self.cutoff!r}")
        idx = int(np.searchsorted(self.breakpoints, lam, side="right"))
        return int(self.cumulative[idx - 1]) if idx else 0

    def subordinated(self, f: BernsteinFunction) -> CountingFunction:
        """N^psi: the same jumps moved to ``psi(lam)``."""
        return CountingFunction(f(self.breakpoints), self.cumulative.copy(), float(f(self.cutoff)))

    def laplace(self, t: float) -> float:
        """``int e^{-t lam} dN(lam)`` over the known part of the staircase."""
        return math.fsum(self.jumps * np.exp(-t * self.breakpoints))


def ratio_sequence_is_monotone(values) -> bool:
    values = list(values)
    return all(b <= a for a, b in zip(values, values[1:]))


def tauberian_check(
    counting_fn: CountingFunction,
    t_grid,
    gamma: float,
    index: float,
    slowly_varying: Callable[[float], float] | None = None,
) -> RatioReport:
    """Laplace-Stieltjes transform of a staircase against ``gamma t^(-index) l(1/t)``.

    By the Karamata theorem ``N(lam) ~ gamma/Gamma(1+index) lam^index l(lam)``
    corresponds to the transform behaving like ``gamma t^(-index) l(1/t)``.
    """
    t_grid = sorted(float(t) for t in t_grid)
    if not t_grid or t_grid[0] <= 0:
        raise ValueError("t grid must be positive")
    if math.exp(-t_grid[0] * counting_fn.cutoff) >= 1e-12:
        raise ValueError(
            f"staircase cutoff {counting_fn.cutoff!r} too small for t={t_grid[0]!r}: need exp(-t cutoff) < 1e-12"
        )
    ell = slowly_varying or (lambda x: 1.0)
    rows = []
    for t in t_grid:
        val = counting_fn.laplace(t)
        asym = gamma * t ** (-index) * ell(1.0 / t)
        rows.append((t, val, asym, val / asym))
    return RatioReport.build("trace", rows, -index)


def laplace_constants(spec: ManifoldSpectrum, alpha: float = 2.0) -> tuple[float, float]:
    """``(gamma, index)`` of the transform asymptote for ``psi = lam^(alpha/2)`` (``alpha = 2``: heat)."""
    index = spec.dimension / alpha
    return weyl_constant(spec) * math.gamma(index + 1), index


def weyl_ratios(spec: ManifoldSpectrum, grid) -> list[tuple[float, int, float, float]]:
    """``(lam, N(lam), Weyl asymptote, ratio)`` along ``grid``."""
    out = []
    for lam in grid:
        n = counting(spec, lam)
        w = weyl_asymptote(spec, lam)
        out.append((float(lam), n, w, n / w))
    return out
