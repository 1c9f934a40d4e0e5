import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from subtrace.bernstein import (
    BernsteinFunction,
    GrowthCertificate,
    LevyMeasureSpec,
    psi_eval,
    psi_inverse,
    rv_index_estimate,
    subordinator_density_half,
)
from subtrace.errors import DomainError, QuadratureError, SpecParseError

BUILTINS = [
    BernsteinFunction.stable(0.5),
    BernsteinFunction.stable(1.0),
    BernsteinFunction.stable(1.5),
    BernsteinFunction.stable(2.0),
    BernsteinFunction.relativistic(1.0, 1.0),
    BernsteinFunction.relativistic(0.7, 2.5),
    BernsteinFunction.gamma(),
    BernsteinFunction.identity(),
]


def levy_stable(alpha):
    return BernsteinFunction.levy_quadrature(LevyMeasureSpec.stable(alpha))


# -- examples ---------------------------------------------------------------


def test_psi_eval_examples():
    assert psi_eval(BernsteinFunction.stable(1.0), 4.0) == 2.0
    assert psi_eval(BernsteinFunction.identity(), 7.3) == 7.3
    assert psi_eval(levy_stable(1.0), 4.0) == pytest.approx(2.0, abs=1e-8)


def test_psi_eval_requires_positive_argument():
    with pytest.raises(DomainError):
        psi_eval(BernsteinFunction.stable(1.0), 0.0)
    with pytest.raises(DomainError):
        BernsteinFunction.gamma()(-1.0)


def test_psi_inverse_examples():
    assert psi_inverse(BernsteinFunction.stable(1.0), 2.0) == 4.0
    assert psi_inverse(BernsteinFunction.identity(), 5.0) == 5.0
    assert psi_inverse(BernsteinFunction.gamma(), 3.0) == pytest.approx(math.e**3 - 1, rel=1e-14)


def test_inverse_domain_errors():
    with pytest.raises(DomainError):
        psi_inverse(BernsteinFunction.stable(1.0), 0.0)
    with pytest.raises(DomainError):
        psi_inverse(BernsteinFunction.gamma(), -2.0)
    finite = LevyMeasureSpec(lambda s: math.exp(-s), 0.0, -3.0)  # e^{-s} decays faster than any power
    bounded = BernsteinFunction.levy_quadrature(finite)
    assert not bounded.invertible
    with pytest.raises(DomainError):
        bounded.inverse(0.5)


def test_relativistic_closed_form():
    f = BernsteinFunction.relativistic(1.0, 1.0)
    for lam in (1e-8, 0.3, 3.0, 1e6):
        assert f(lam) == pytest.approx(math.sqrt(lam + 1) - 1, rel=1e-12)
    assert f.inverse(1e3) == pytest.approx((1e3 + 1) ** 2 - 1, rel=1e-14)


def test_stable_alpha_two_is_identity():
    f = BernsteinFunction.stable(2.0)
    xs = np.geomspace(1e-3, 1e9, 40)
    assert np.array_equal(f(xs), xs)
    assert f.rv_index == 1.0


def test_declared_indices_and_certificates():
    assert BernsteinFunction.stable(1.2).rv_index == 0.6
    assert BernsteinFunction.relativistic(1.0, 1.0).rv_index == 0.5
    assert BernsteinFunction.identity().rv_index == 1.0
    assert BernsteinFunction.gamma().rv_index == 0.0
    assert BernsteinFunction.stable(1.0).certificate == GrowthCertificate(1.0, 0.5, 0.0)


@pytest.mark.parametrize("f", BUILTINS, ids=str)
def test_certificate_is_a_lower_bound(f):
    cert = f.certificate
    us = np.geomspace(max(cert.u0, 1e-6), 1e15, 400)
    assert np.all(f(us) >= cert.lower(us))


def test_constructor_validation():
    with pytest.raises(ValueError):
        BernsteinFunction.stable(0.0)
    with pytest.raises(ValueError):
        BernsteinFunction.stable(2.5)
    with pytest.raises(ValueError):
        BernsteinFunction.relativistic(1.0, 0.0)
    with pytest.raises(ValueError):
        LevyMeasureSpec(lambda s: s**-2.5, -2.5, -2.5)
    with pytest.raises(ValueError):
        LevyMeasureSpec(lambda s: s**-0.5, -0.5, -0.5)


# -- quadrature -------------------------------------------------------------


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_levy_stable_matches_closed_form(alpha):
    f = levy_stable(alpha)
    for lam in np.geomspace(1e-2, 1e6, 25):
        val, err = f.evaluate(lam)
        assert val == pytest.approx(lam ** (alpha / 2), rel=1e-8)
        assert 0 <= err <= 1e-10 * val


def test_levy_with_drift_adds_linear_term():
    f = BernsteinFunction.levy_quadrature(LevyMeasureSpec.stable(1.0), drift=2.0)
    assert f(9.0) == pytest.approx(3.0 + 18.0, rel=1e-10)
    assert f.rv_index == 1.0
    assert f.inverse(21.0) == pytest.approx(9.0, rel=1e-9)


def test_levy_gamma_measure_reproduces_log1p():
    # Gamma subordinator: nu(ds) = e^{-s}/s ds; declared exponents are valid majorant slopes
    dens = lambda s: math.exp(-s) / s  # noqa: E731
    f = BernsteinFunction.levy_quadrature(LevyMeasureSpec(dens, -1.0, -3.0))
    for lam in (0.01, 1.0, 50.0, 1e4):
        assert f(lam) == pytest.approx(math.log1p(lam), rel=1e-8)


def test_levy_numeric_inverse():
    f = levy_stable(1.0)
    for y in (0.05, 1.0, 30.0, 900.0):
        lam = f.inverse(y)
        assert lam == pytest.approx(y * y, rel=1e-8)
        assert abs(f(lam) - y) <= 1e-10 * max(1.0, y)


def test_quadrature_cap_is_an_error():
    dens = lambda s: s**-1.5 * (1.5 + math.sin(1e5 * s))  # noqa: E731
    f = BernsteinFunction.levy_quadrature(LevyMeasureSpec(dens, -1.5, -1.5))
    with pytest.raises(QuadratureError) as info:
        f(1.0)
    assert info.value.partial > 0
    assert info.value.residual > 0


def test_levy_csv_file(tmp_path):
    # sampled stable(1) density: s^{-3/2} / (2 sqrt(pi))
    c = 0.5 / math.sqrt(math.pi)
    s = np.geomspace(1e-8, 1e8, 400)
    lines = ["# exponent_zero=-1.5", "# exponent_inf=-1.5", "# kappa=0.99", "# rho=0.5", "s,density"]
    lines += [f"{float(x)!r},{float(c * x**-1.5)!r}" for x in s]
    path = tmp_path / "nu.csv"
    path.write_text("\n".join(lines) + "\n")
    measure, meta = LevyMeasureSpec.from_csv(path)
    assert meta == {"exponent_zero": -1.5, "exponent_inf": -1.5, "kappa": 0.99, "rho": 0.5}
    f = BernsteinFunction.parse(f"levy:file={path}")
    for lam in (0.01, 4.0, 1e5):
        assert f(lam) == pytest.approx(math.sqrt(lam), rel=1e-8)
    assert f.certificate is not None and f.certificate.rho == 0.5


def test_levy_csv_requires_exponents(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("s,density\n1,1\n2,0.5\n")
    with pytest.raises(ValueError):
        LevyMeasureSpec.from_csv(path)


# -- regular variation ---------------------------------------------------------


def test_rv_index_stable_exact():
    est = rv_index_estimate(BernsteinFunction.stable(1.2), 10.0, np.geomspace(1e2, 1e10, 9))
    assert est.index == pytest.approx(0.6, abs=1e-9)
    assert est.max_deviation < 1e-9


def test_rv_index_relativistic():
    est = rv_index_estimate(BernsteinFunction.relativistic(1.0, 1.0), 10.0, np.geomspace(1e4, 1e12, 9))
    assert est.index == pytest.approx(0.5, abs=1e-3)


def test_rv_index_gamma_is_slowly_varying():
    grid = np.geomspace(1e4, 1e12, 9)
    est = rv_index_estimate(BernsteinFunction.gamma(), 10.0, grid)
    # log(1 + a lam)/log(1 + lam) decays like 1/log(lam): the estimator sees ~1/ln(lam_median)
    median_lam = grid[len(grid) // 2]
    oracle = math.log(math.log1p(10 * median_lam) / math.log1p(median_lam)) / math.log(10)
    assert est.index == pytest.approx(oracle, rel=1e-12)
    assert 0 < est.index < 0.06
    far = rv_index_estimate(BernsteinFunction.gamma(), 10.0, np.geomspace(1e50, 1e100, 9))
    assert 0 < far.index < 1e-2
    assert far.index < est.index


def test_rv_index_grid_preconditions():
    f = BernsteinFunction.stable(1.0)
    with pytest.raises(ValueError):
        rv_index_estimate(f, 10.0, [1.0, 10.0])
    with pytest.raises(ValueError):
        rv_index_estimate(f, 10.0, [1.0, 10.0, 100.0])
    with pytest.raises(ValueError):
        rv_index_estimate(f, 1.0, np.geomspace(1, 1e6, 5))


# -- 1/2-stable density ----------------------------------------------------------


def test_density_spot_value_against_mpmath():
    expected = mpmath.mpf(1) / (2 * mpmath.sqrt(mpmath.pi)) * 8 * mpmath.exp(-1)
    assert subordinator_density_half(1.0, 0.25) == pytest.approx(float(expected), rel=1e-14)
    for t, s in [(0.3, 0.01), (2.0, 5.0), (10.0, 0.7)]:
        ref = t / (2 * mpmath.sqrt(mpmath.pi)) * mpmath.mpf(s) ** -1.5 * mpmath.exp(-mpmath.mpf(t) ** 2 / (4 * s))
        assert subordinator_density_half(t, s) == pytest.approx(float(ref), rel=1e-13)


def test_density_vanishes_at_zero():
    assert subordinator_density_half(1.0, 1e-300) == 0.0
    assert subordinator_density_half(1.0, 0.0) == 0.0
    arr = subordinator_density_half(1.0, np.array([0.0, 1e-5, 1.0]))
    assert arr[0] == 0.0 and arr[2] > 0


def _log_quad(fn):
    val, _ = integrate.quad(lambda u: fn(math.exp(u)) * math.exp(u), -60, 60, epsabs=0, epsrel=1e-13, limit=500)
    return val


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_density_normalization(t):
    assert _log_quad(lambda s: subordinator_density_half(t, s)) == pytest.approx(1.0, abs=1e-9)


def test_density_laplace_transform_grid():
    for t in (0.2, 0.5, 1.0, 2.0, 4.0):
        for lam in (0.1, 1.0, 4.0, 10.0, 50.0):
            got = _log_quad(lambda s: math.exp(-lam * s) * subordinator_density_half(t, s))
            assert got == pytest.approx(math.exp(-t * math.sqrt(lam)), abs=1e-9)


# -- grammar -----------------------------------------------------------------


def test_parse_examples():
    assert BernsteinFunction.parse("stable:alpha=1.0") == BernsteinFunction.stable(1.0)
    assert BernsteinFunction.parse("relativistic:alpha=1.0,m=1.0") == BernsteinFunction.relativistic(1.0, 1.0)
    assert BernsteinFunction.parse("gamma") == BernsteinFunction.gamma()
    assert BernsteinFunction.parse("identity") == BernsteinFunction.identity()


@pytest.mark.parametrize("text", ["stable", "stable:alpha=3", "poisson", "relativistic:alpha=1", "gamma:x=1"])
def test_parse_errors(text):
    with pytest.raises(SpecParseError):
        BernsteinFunction.parse(text)


@pytest.mark.parametrize("f", [g for g in BUILTINS], ids=str)
def test_text_round_trip(f):
    assert BernsteinFunction.parse(str(f)) == f


# -- properties ---------------------------------------------------------------


@pytest.mark.parametrize("f", BUILTINS, ids=str)
def test_monotone_on_random_grids(f):
    rng = np.random.default_rng(7)
    xs = np.sort(np.exp(rng.uniform(math.log(1e-6), math.log(1e12), 2000)))
    vals = f(xs)
    assert np.all(vals >= 0)
    assert np.all(np.diff(vals) >= 0)


@pytest.mark.parametrize("f", BUILTINS, ids=str)
def test_concave_on_grid(f):
    xs = np.linspace(0.01, 50, 400)
    second = np.diff(f(xs), 2)
    assert np.all(second <= 1e-12 * np.max(np.abs(f(xs))))


invertible = st.sampled_from(BUILTINS)
log_uniform = st.floats(math.log(1e-4), math.log(1e8)).map(math.exp)


@settings(max_examples=500, deadline=None)
@given(invertible, log_uniform)
def test_inverse_round_trips(f, x):
    if f.form == "gamma" and x > 700:
        x = 700.0
    lam = f.inverse(x)
    assert abs(f(lam) - x) <= 1e-10 * max(1.0, x)
    assert f.inverse(f(x)) == pytest.approx(x, rel=1e-8)
