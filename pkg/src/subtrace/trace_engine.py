"""Certified traces of subordinated heat semigroups.

``trace`` sums ``sum_k mult_k exp(-t psi(lam_k))`` over an adaptively chosen
cutoff and returns a rigorous bound on the neglected tail.  With
``B(u) = sum_j c_j u^(j/2) >= N(u)`` (see
:func:`~subtrace.spectra.counting_bound_coefficients`) and
``g(u) = exp(-t psi(u))`` decreasing, two integrations by parts give

    sum_{lam_k > L} mult_k g(lam_k) <= B(L) g(L) + int_L^inf g(u) B'(u) du

and the last integral is bounded in closed form by replacing ``g`` with the
growth certificate of ``psi`` (incomplete gamma functions for power
certificates, a plain power integral for log certificates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .bernstein import BernsteinFunction, subordinator_density_half
from .errors import DivergentTrace, QuadratureError, ResourceExceeded
from .spectra import (
    ManifoldSpectrum,
    counting,
    counting_bound_coefficients,
    enumeration_cost,
    spectrum_arrays,
)

DEFAULT_RTOL = 1e-8
MAX_DOUBLINGS = 2000
# log-certificate stall rule: four doublings in a row each shrinking the bound by < 10%
STALL_FACTOR = 0.9
STALL_LIMIT = 4


@dataclass(frozen=True)
class CertifiedValue:
    """A value and bounds on what was left out of it.

    ``cutoff`` is the eigenvalue cutoff the partial sum stopped at.
    """

    value: float
    truncation_bound: float
    quadrature_bound: float = 0.0
    certified: bool = True
    cutoff: float = math.inf

    def __post_init__(self) -> None:
        if self.truncation_bound < 0 or self.quadrature_bound < 0:
            raise ValueError("error bounds must be nonnegative")

    @property
    def error_bound(self) -> float:
        return self.truncation_bound + self.quadrature_bound

    def scaled(self, factor: float) -> CertifiedValue:
        return CertifiedValue(
            self.value * factor,
            self.truncation_bound * factor,
            self.quadrature_bound * factor,
            self.certified,
            self.cutoff,
        )


def _log_upper_gamma(a: float, x: float) -> float:
    """``log Gamma(a, x)`` (upper incomplete), safe when the regularized value underflows."""
    q = special.gammaincc(a, x)
    if q > 0:
        return math.log(q) + special.gammaln(a)
    # Gamma(a, x) <= x^(a-1) e^-x / (1 - (a-1)/x) for x > a - 1 (a > 1); x^(a-1) e^-x for a <= 1
    corr = 0.0 if a <= 1 else -math.log1p(-(a - 1) / x)
    return (a - 1) * math.log(x) - x + corr


def tail_bound(spec: ManifoldSpectrum, f: BernsteinFunction, t: float, cutoff: float) -> float:
    """Rigorous bound on ``sum_{lam_k > cutoff} mult_k exp(-t psi(lam_k))``.

    Needs ``f.certificate`` and ``cutoff >= max(certificate.u0, tiny)``.
    Returns ``inf`` when the certificate cannot make the tail summable.
    """
    cert = f.certificate
    if cert is None:
        raise ValueError("tail bounds need a growth certificate")
    if cutoff < cert.u0 or cutoff <= 0:
        raise ValueError("cutoff must be positive and past the certificate threshold")
    coeffs = counting_bound_coefficients(spec)
    g = math.exp(-t * f(cutoff))
    root = math.sqrt(cutoff)
    total = 0.0
    for j, c in enumerate(coeffs):
        if c == 0:
            continue
        total += c * g * root**j
        if j == 0:
            continue
        q = j / 2
        # int_L^inf q u^(q-1) G(u) du with G the certificate envelope of g
        if cert.kind == "power":
            a = q / cert.rho
            x = t * cert.kappa * cutoff**cert.rho
            log_int = math.log(q / cert.rho) - a * math.log(t * cert.kappa) + _log_upper_gamma(a, x)
            total += c * math.exp(log_int) if log_int < 700 else math.inf
        else:
            p = t * cert.kappa
            if p <= q:
                return math.inf
            total += c * q * cutoff ** (q - p) / (p - q)
    return float(total)


def partial_trace(spec: ManifoldSpectrum, f: BernsteinFunction, t: float, cutoff: float) -> tuple[float, float]:
    """``(sum over lam_k <= cutoff of mult_k exp(-t psi(lam_k)), psi quadrature error contribution)``."""
    lams, mults = spectrum_arrays(spec, cutoff)
    psi, psi_err = f.evaluate(lams)
    terms = mults * np.exp(-t * psi)
    quad = math.fsum(t * terms * psi_err) if f.form == "levy" else 0.0
    return math.fsum(terms), quad


def _check_budget(spec: ManifoldSpectrum, cutoff: float) -> None:
    cost, budget = enumeration_cost(spec, cutoff)
    if cost > budget:
        raise ResourceExceeded(f"cutoff {cutoff:.6g} needs ~{cost} enumeration units (budget {budget})")


def _find_cutoff(spec, f, t, target, start) -> tuple[float, float]:
    cert = f.certificate
    cutoff = start
    prev = None
    stalls = 0
    for _ in range(MAX_DOUBLINGS):
        bound = tail_bound(spec, f, t, cutoff)
        if math.isinf(bound) and cert.kind == "log":
            raise DivergentTrace(
                f"{f} on {spec} at t={t!r}: tail envelope (1+u)^(-{t * cert.kappa:g}) "
                f"is not summable against N(u) ~ u^{spec.dimension / 2:g}"
            )
        if bound <= target:
            return cutoff, bound
        if cert.kind == "log" and prev is not None and math.isfinite(prev):
            stalls = stalls + 1 if bound > STALL_FACTOR * prev else 0
            if stalls >= STALL_LIMIT:
                raise DivergentTrace(f"{f} on {spec} at t={t!r}: tail bound stalls under cutoff doubling")
        _check_budget(spec, cutoff)
        prev = bound
        cutoff *= 2.0
    raise ResourceExceeded("cutoff search did not terminate")


def trace(
    spec: ManifoldSpectrum,
    f: BernsteinFunction,
    t: float,
    eps: float | None = None,
    *,
    rtol: float = DEFAULT_RTOL,
) -> CertifiedValue:
    """Tr exp(-t psi(-Delta)) with a certified truncation bound.

    ``eps`` is an absolute tolerance on ``truncation_bound + quadrature_bound``.
    Without it the tolerance is ``rtol`` times a partial sum (a lower bound
    for the trace, since every term is positive).
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if eps is not None and not eps > 0:
        raise ValueError("eps must be positive")
    cert = f.certificate
    if cert is None:
        return _uncertified_trace(spec, f, t, eps if eps is not None else rtol)
    start = max(cert.u0, 1.0)
    if eps is None:
        rough, _ = _find_cutoff(spec, f, t, 1e-3, start)
        _check_budget(spec, rough)
        lower, _ = partial_trace(spec, f, t, rough)
        target = rtol * lower
        start = rough
    else:
        target = eps
    cutoff, bound = _find_cutoff(spec, f, t, target, start)
    _check_budget(spec, cutoff)
    value, quad = partial_trace(spec, f, t, cutoff)
    return CertifiedValue(value, bound, quad, bool(bound + quad <= target), cutoff)


def _uncertified_trace(spec, f, t, target) -> CertifiedValue:
    # No certificate: stop once the Weyl-bound-weighted last term is below target.
    coeffs = counting_bound_coefficients(spec)
    cutoff = 1.0
    for _ in range(MAX_DOUBLINGS):
        est = float(np.polyval(coeffs[::-1], math.sqrt(cutoff))) * math.exp(-t * f(cutoff))
        if est <= target:
            break
        _check_budget(spec, cutoff)
        cutoff *= 2.0
    _check_budget(spec, cutoff)
    value, quad = partial_trace(spec, f, t, cutoff)
    return CertifiedValue(value, float(est), quad, False, cutoff)


def counting_subordinated(spec: ManifoldSpectrum, f: BernsteinFunction, lam: float) -> int:
    """N^psi(lam) = N(phi(lam))."""
    return counting(spec, f.inverse(lam))


def diagonal_heat_value(
    spec: ManifoldSpectrum, f: BernsteinFunction, t: float, eps: float | None = None
) -> CertifiedValue:
    """q_t(x, x); on a homogeneous space this is the trace divided by the volume."""
    vol = spec.volume
    cv = trace(spec, f, t, None if eps is None else eps * vol)
    return cv.scaled(1.0 / vol)


def _head_mass_bound(coeffs: np.ndarray, t: float, s_lo: float) -> float:
    """Bound on ``int_0^s_lo Tr(P_s) eta_t(s) ds``.

    ``Tr(P_s) = int_0^inf s e^{-su} N(u) du <= sum_j c_j Gamma(j/2+1) s^(-j/2)`` and
    ``int_0^s_lo s^(-q) eta_t(s) ds = t/(2 sqrt(pi)) (t^2/4)^(-q-1/2) Gamma(q+1/2, t^2/(4 s_lo))``.
    """
    w = t * t / (4.0 * s_lo)
    total = 0.0
    for j, c in enumerate(coeffs):
        q = j / 2
        log_term = (
            math.log(c)
            + special.gammaln(q + 1)
            + math.log(t / (2 * math.sqrt(math.pi)))
            - (q + 0.5) * math.log(t * t / 4)
            + _log_upper_gamma(q + 0.5, w)
        )
        total += math.exp(log_term)
    return float(total)


def trace_via_subordination(spec: ManifoldSpectrum, t: float, eps: float = 1e-9) -> CertifiedValue:
    """Tr(Q_t) for ``psi = sqrt`` as ``int_0^inf Tr(P_s) eta_t(ds)``.

    The heat trace ``Tr(P_s)`` is summed from the spectrum and integrated
    against the closed-form 1/2-stable density.  Only the quadrature error is
    an estimate (QUADPACK's); the three cut-off pieces are bounded rigorously.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    budget = eps / 4
    heat = BernsteinFunction.identity()
    coeffs = counting_bound_coefficients(spec)
    coeffs = coeffs[coeffs > 0]

    # small s: pick s_lo so the neglected head is below budget
    s_lo = t * t
    while _head_mass_bound(coeffs, t, s_lo) > budget:
        s_lo /= 2.0
    head = _head_mass_bound(coeffs, t, s_lo)

    # heat traces for every s >= s_lo share one cutoff: the tail bound decreases in s
    cutoff, trunc = _find_cutoff(spec, heat, s_lo, budget, 1.0)
    _check_budget(spec, cutoff)
    lams, mults = spectrum_arrays(spec, cutoff)
    lams = lams[1:]
    mults = mults[1:].astype(np.float64)

    def excess(s: float) -> float:  # Tr(P_s) - 1, the zero mode removed
        return math.fsum(mults * np.exp(-s * lams))

    # large s: Tr(P_s) - 1 <= excess(s_hi) + trunc for s >= s_hi
    s_hi = max(t * t, s_lo)
    while excess(s_hi) > budget:
        s_hi *= 2.0
    mass_hi = math.erf(t / (2.0 * math.sqrt(s_hi)))
    upper = mass_hi * (excess(s_hi) + trunc)

    def integrand(u: float) -> float:
        s = math.exp(u)
        return (1.0 + excess(s)) * subordinator_density_half(t, s) * s

    middle, quad_err, info, *msg = integrate.quad(
        integrand, math.log(s_lo), math.log(s_hi), epsabs=budget, epsrel=1e-13, limit=200, full_output=1
    )
    if msg and info["last"] >= 200:
        raise QuadratureError("subordination integral hit the subdivision cap", middle, quad_err)
    value = middle + mass_hi
    truncation = head + upper + trunc
    return CertifiedValue(value, float(truncation), quad_err, bool(truncation + quad_err <= eps), cutoff)
