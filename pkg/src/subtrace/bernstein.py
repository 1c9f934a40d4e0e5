"""Laplace exponents of subordinators (Bernstein functions) and their inverses.

A Bernstein function has the Levy-Khintchine form

    psi(lam) = b * lam + int_0^inf (1 - exp(-lam s)) nu(ds)

Closed forms are provided for the stable, relativistic stable, Gamma and
identity (pure drift) exponents; anything else goes through
:class:`LevyMeasureSpec` and adaptive quadrature.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, QuadratureError, SpecParseError
from .spectra import parse_spec_string

QUAD_RTOL = 1e-10
QUAD_LIMIT = 200
# log-space half-widths past which the Levy integrand is below e^-38
_TAIL_DECADES = 38.0

FORMS = ("stable", "relativistic", "gamma", "identity", "levy")


@dataclass(frozen=True)
class GrowthCertificate:
    """Lower bound on psi used to bound trace tails.

    ``kind="power"``: ``psi(u) >= kappa * u**rho`` for ``u >= u0``.
    ``kind="log"``:   ``psi(u) >= kappa * log(1 + u)`` for ``u >= u0``.
    """

    kappa: float
    rho: float = 0.0
    u0: float = 0.0
    kind: str = "power"

    def __post_init__(self) -> None:
        if self.kind not in ("power", "log"):
            raise ValueError("certificate kind must be 'power' or 'log'")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.kind == "power" and not self.rho > 0:
            raise ValueError("rho must be positive for a power certificate")
        if not self.u0 >= 0:
            raise ValueError("u0 must be nonnegative")

    def lower(self, u):
        if self.kind == "log":
            return self.kappa * np.log1p(u)
        return self.kappa * np.power(u, self.rho)


@dataclass(frozen=True)
class LevyMeasureSpec:
    """A Levy density with declared power-law exponents at 0 and infinity.

    ``density(s) ~ s**exponent_zero`` as ``s -> 0`` and ``~ s**exponent_inf`` as
    ``s -> inf``.  The declared exponents are what make ``int (s ^ 1) nu(ds)``
    finite, and they are also used to close the quadrature analytically past
    the integration window.
    """

    density: Callable[[float], float] = field(compare=False)
    exponent_zero: float
    exponent_inf: float
    label: str = "custom"

    def __post_init__(self) -> None:
        if not self.exponent_zero > -2.0:
            raise ValueError("density must be O(s^e) with e > -2 near 0 for int (s ^ 1) nu(ds) < inf")
        if not self.exponent_inf < -1.0:
            raise ValueError("density must decay faster than 1/s at infinity")

    @property
    def infinite_mass(self) -> bool:
        return self.exponent_zero <= -1.0

    @classmethod
    def stable(cls, alpha: float) -> LevyMeasureSpec:
        """``nu(ds) = (alpha/2) / Gamma(1 - alpha/2) * s^(-1-alpha/2) ds``."""
        if not 0 < alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        beta = alpha / 2
        c = beta / math.gamma(1 - beta)
        return cls(lambda s: c * s ** (-1 - beta), -1 - beta, -1 - beta, label=f"stable-measure:alpha={alpha!r}")

    @classmethod
    def from_csv(cls, path: str | Path) -> tuple[LevyMeasureSpec, dict[str, float]]:
        """Read a sampled density.

        Columns ``s,density``; leading ``# key=value`` lines declare
        ``exponent_zero`` and ``exponent_inf`` (required) plus optional
        ``drift``, ``rv_index``, ``kappa``, ``rho``, ``u0``.  Between samples
        the density is interpolated linearly in log-log coordinates and it is
        extended past the end samples by the declared power laws.
        """
        path = Path(path)
        meta: dict[str, float] = {}
        rows = []
        with path.open(newline="") as fh:
            body = []
            for line in fh:
                stripped = line.strip()
                if stripped.startswith("#"):
                    key, sep, value = stripped.lstrip("#").partition("=")
                    if sep:
                        meta[key.strip()] = float(value)
                elif stripped:
                    body.append(line)
            for row in csv.DictReader(body):
                rows.append((float(row["s"]), float(row["density"])))
        if "exponent_zero" not in meta or "exponent_inf" not in meta:
            raise ValueError(f"{path}: exponent_zero and exponent_inf must be declared")
        if len(rows) < 2:
            raise ValueError(f"{path}: need at least two density samples")
        rows.sort()
        s = np.array([r[0] for r in rows])
        d = np.array([r[1] for r in rows])
        if np.any(s <= 0) or np.any(d <= 0):
            raise ValueError(f"{path}: samples must be positive")
        ls, ld = np.log(s), np.log(d)
        e0, einf = meta["exponent_zero"], meta["exponent_inf"]

        def density(x: float) -> float:
            lx = math.log(x)
            if lx < ls[0]:
                return math.exp(ld[0] + e0 * (lx - ls[0]))
            if lx > ls[-1]:
                return math.exp(ld[-1] + einf * (lx - ls[-1]))
            return math.exp(float(np.interp(lx, ls, ld)))

        return cls(density, e0, einf, label=f"file={path}"), meta


class RVEstimate(NamedTuple):
    index: float
    max_deviation: float


@dataclass(frozen=True)
class BernsteinFunction:
    """A Laplace exponent ``psi``; call it on a scalar or an array of ``lam >= 0``."""

    form: str
    alpha: float | None = None
    m: float | None = None
    drift: float = 0.0
    levy: LevyMeasureSpec | None = None
    rv_index: float = 0.0
    certificate: GrowthCertificate | None = None

    def __post_init__(self) -> None:
        if self.form not in FORMS:
            raise ValueError(f"unknown Bernstein form {self.form!r}")
        if self.drift < 0:
            raise ValueError("drift must be nonnegative")
        if self.form == "levy" and self.levy is None:
            raise ValueError("levy form needs a LevyMeasureSpec")

    # -- constructors -------------------------------------------------------

    @classmethod
    def stable(cls, alpha: float) -> BernsteinFunction:
        """``psi(lam) = lam^(alpha/2)``; ``alpha = 2`` is the identity."""
        if not 0 < alpha <= 2:
            raise ValueError("alpha must lie in (0, 2]")
        beta = alpha / 2
        return cls("stable", alpha=float(alpha), rv_index=beta, certificate=GrowthCertificate(1.0, beta))

    @classmethod
    def relativistic(cls, alpha: float, m: float) -> BernsteinFunction:
        """``psi(lam) = (lam + m^(2/alpha))^(alpha/2) - m``."""
        if not 0 < alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        if not m > 0:
            raise ValueError("m must be positive")
        beta = alpha / 2
        # (u + c)^beta - c^beta >= 0.9 u^beta once u^beta >= 10 c^beta
        u0 = 10.0 ** (1 / beta) * m ** (1 / beta)
        return cls(
            "relativistic",
            alpha=float(alpha),
            m=float(m),
            rv_index=beta,
            certificate=GrowthCertificate(0.9, beta, u0),
        )

    @classmethod
    def gamma(cls) -> BernsteinFunction:
        """``psi(lam) = log(1 + lam)``, slowly varying (index 0)."""
        return cls("gamma", rv_index=0.0, certificate=GrowthCertificate(1.0, kind="log"))

    @classmethod
    def identity(cls) -> BernsteinFunction:
        """``psi(lam) = lam``: pure drift ``b = 1`` and no jumps."""
        return cls("identity", drift=1.0, rv_index=1.0, certificate=GrowthCertificate(1.0, 1.0))

    @classmethod
    def levy_quadrature(
        cls,
        measure: LevyMeasureSpec,
        drift: float = 0.0,
        rv_index: float | None = None,
        certificate: GrowthCertificate | None = None,
    ) -> BernsteinFunction:
        if rv_index is None:
            rv_index = 1.0 if drift > 0 else max(0.0, -1.0 - measure.exponent_zero)
        if certificate is None and drift > 0:
            certificate = GrowthCertificate(drift, 1.0)
        return cls("levy", drift=float(drift), levy=measure, rv_index=rv_index, certificate=certificate)

    @classmethod
    def parse(cls, text: str) -> BernsteinFunction:
        """Parse ``stable:alpha=1``, ``relativistic:alpha=1,m=1``, ``gamma``, ``identity``, ``levy:file=PATH``."""
        form, params = parse_spec_string(text)
        expected = {
            "stable": {"alpha"},
            "relativistic": {"alpha", "m"},
            "gamma": set(),
            "identity": set(),
            "levy": {"file"},
        }
        if form not in expected:
            raise SpecParseError(f"unknown Bernstein function {form!r}", text, 0)
        for key, (_, pos) in params.items():
            if key not in expected[form]:
                raise SpecParseError(f"unexpected parameter {key!r} for {form}", text, pos)
        for key in expected[form]:
            if key not in params:
                raise SpecParseError(f"{form} requires {key}=...", text, len(text))
        if form == "levy":
            path, pos = params["file"]
            try:
                measure, meta = LevyMeasureSpec.from_csv(path)
            except (OSError, ValueError, KeyError) as exc:
                raise SpecParseError(f"cannot load Levy density: {exc}", text, pos) from None
            cert = None
            if "kappa" in meta:
                cert = GrowthCertificate(meta["kappa"], meta.get("rho", 0.0), meta.get("u0", 0.0))
            return cls.levy_quadrature(measure, meta.get("drift", 0.0), meta.get("rv_index"), cert)
        values = {}
        for key, (raw, pos) in params.items():
            try:
                values[key] = float(raw)
            except ValueError:
                raise SpecParseError(f"{key} must be a number, got {raw!r}", text, pos) from None
        try:
            if form == "stable":
                return cls.stable(values["alpha"])
            if form == "relativistic":
                return cls.relativistic(values["alpha"], values["m"])
        except ValueError as exc:
            raise SpecParseError(str(exc), text, params["alpha"][1]) from None
        return cls.gamma() if form == "gamma" else cls.identity()

    def __str__(self) -> str:
        if self.form == "stable":
            return f"stable:alpha={self.alpha!r}"
        if self.form == "relativistic":
            return f"relativistic:alpha={self.alpha!r},m={self.m!r}"
        if self.form == "levy":
            return f"levy:{self.levy.label}"
        return self.form

    # -- evaluation ----------------------------------------------------------

    @property
    def invertible(self) -> bool:
        if self.form == "levy":
            return self.drift > 0 or self.levy.infinite_mass
        return True

    def __call__(self, lam):
        return self.evaluate(lam)[0]

    def evaluate(self, lam):
        """``(psi(lam), quadrature error estimate)``; the error is 0 for closed forms."""
        scalar = np.ndim(lam) == 0
        x = np.asarray(lam, dtype=np.float64)
        if np.any(x < 0):
            raise DomainError("psi is defined for lam >= 0")
        err = np.zeros_like(x)
        if self.form == "stable":
            val = x if self.alpha == 2 else np.power(x, self.alpha / 2)
        elif self.form == "relativistic":
            beta = self.alpha / 2
            c = self.m ** (1 / beta)
            val = self.m * np.expm1(beta * np.log1p(x / c))
        elif self.form == "gamma":
            val = np.log1p(x)
        elif self.form == "identity":
            val = np.zeros_like(x)
        else:
            flat = [_levy_integral(self.levy, float(v)) for v in x.ravel()]
            val = np.array([f[0] for f in flat]).reshape(x.shape)
            err = np.array([f[1] for f in flat]).reshape(x.shape)
        val = val + self.drift * x
        if scalar:
            return float(val), float(err)
        return val, err

    def inverse(self, y: float) -> float:
        """phi(y): the unique ``lam`` with ``psi(lam) = y``."""
        if not self.invertible:
            raise DomainError(f"{self} is bounded and has no inverse on (0, inf)")
        if not y > 0:
            raise DomainError("phi is defined for y > psi(0+) = 0")
        if self.form == "stable":
            return y if self.alpha == 2 else y ** (2 / self.alpha)
        if self.form == "identity":
            return float(y)
        if self.form == "gamma":
            if y > 709.0:
                raise OverflowError("exp(y) - 1 overflows")
            return math.expm1(y)
        if self.form == "relativistic":
            beta = self.alpha / 2
            return self.m ** (1 / beta) * math.expm1(math.log1p(y / self.m) / beta)
        return _numeric_inverse(self, y)


def _levy_integral(measure: LevyMeasureSpec, lam: float) -> tuple[float, float]:
    """``int_0^inf (1 - e^{-lam s}) nu(ds)`` in ``u = log s``, split at ``s = 1/lam``."""
    if lam == 0:
        return 0.0, 0.0
    dens = measure.density

    def integrand(u: float) -> float:
        s = math.exp(u)
        return -math.expm1(-lam * s) * dens(s) * s

    e0, einf = measure.exponent_zero, measure.exponent_inf
    u_mid = -math.log(lam)
    u_lo = u_mid - _TAIL_DECADES / (e0 + 2)
    u_hi = u_mid + _TAIL_DECADES / (-einf - 1)
    total, err = 0.0, 0.0
    for a, b in ((u_lo, u_mid), (u_mid, u_hi)):
        val, est, info, *msg = integrate.quad(
            integrand, a, b, epsabs=0.0, epsrel=QUAD_RTOL * 1e-2, limit=QUAD_LIMIT, full_output=1
        )
        total += val
        err += est
        if msg and info["last"] >= QUAD_LIMIT:
            raise QuadratureError("Levy quadrature hit the subdivision cap", total, err)
    # power-law closures: 1 - e^{-lam s} ~ lam s below s_lo and ~ 1 above s_hi
    s_lo, s_hi = math.exp(u_lo), math.exp(u_hi)
    head = lam * dens(s_lo) * s_lo**2 / (e0 + 2)
    tail = dens(s_hi) * s_hi / (-einf - 1)
    total += head + tail
    err += 0.5 * lam * s_lo * head + math.exp(-lam * s_hi) * tail
    if err > QUAD_RTOL * abs(total):
        raise QuadratureError("Levy quadrature missed its relative tolerance", total, err)
    return total, err


def _numeric_inverse(f: BernsteinFunction, y: float) -> float:
    hi = 1.0
    while f(hi) < y:
        hi *= 4.0
        if hi > 1e300:
            raise DomainError(f"psi never reaches {y!r}")
    lo = hi / 4.0
    while lo > 1e-300 and f(lo) > y:
        lo /= 4.0
    root = optimize.brentq(lambda x: f(x) - y, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400)
    return float(root)


# ---------------------------------------------------------------------------
# module-level operations


def psi_eval(f: BernsteinFunction, lam: float) -> float:
    if not lam > 0:
        raise DomainError("psi_eval requires lam > 0")
    return f(lam)


def psi_inverse(f: BernsteinFunction, y: float) -> float:
    return f.inverse(y)


def rv_index_estimate(f: BernsteinFunction, a: float, grid) -> RVEstimate:
    """Median of ``log(psi(a lam) / psi(lam)) / log(a)`` over ``grid``.

    ``max_deviation`` is the largest distance of a single grid point's estimate
    from the median; it is small only where psi already behaves like a power.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if not a > 1:
        raise ValueError("a must exceed 1")
    if grid.size < 3 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must hold at least 3 ascending positive points")
    if math.log10(grid[-1] / grid[0]) < 4 - 1e-9:
        raise ValueError("grid must span at least 4 decades")
    ratios = np.log(f(a * grid) / f(grid)) / math.log(a)
    med = float(np.median(ratios))
    return RVEstimate(med, float(np.max(np.abs(ratios - med))))


def subordinator_density_half(t: float, s):
    """Density of the 1/2-stable subordinator (``psi = sqrt``) at time ``t``.

    ``(t / (2 sqrt(pi))) s^(-3/2) exp(-t^2 / (4 s))``, whose Laplace transform
    is ``exp(-t sqrt(lam))``.  Evaluated in log space so ``s -> 0`` underflows
    cleanly to 0.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    x = np.asarray(s, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_val = math.log(t / (2 * math.sqrt(math.pi))) - 1.5 * np.log(x) - t * t / (4 * x)
    out = np.where(x > 0, np.exp(log_val), 0.0)
    return float(out) if np.ndim(s) == 0 else out
