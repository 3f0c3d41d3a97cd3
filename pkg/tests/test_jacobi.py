import numpy as np
import pytest

from sinh_spectral.errors import ValidationError
from sinh_spectral.jacobi import (
    TruncatedCurve,
    a_period_matrix,
    abel_along_flow,
    abel_map,
    flow_slope_check,
    monomial_one_form,
    period_integral,
    sqrt_psi,
)
from sinh_spectral.vacuum_geometry import vacuum_lattice

FLOW_KW = {"tail": "vacuum"}


def test_a_periods_are_the_identity(synthetic_curve, synthetic_forms):
    assert synthetic_curve.genus == 6
    P = a_period_matrix(synthetic_curve, synthetic_forms)
    assert np.max(np.abs(P - np.eye(6))) <= 1e-6


def test_segment_and_ellipse_routes_agree(synthetic_curve, synthetic_forms):
    f = synthetic_forms[2]
    for k in synthetic_curve.open_set:
        fun = lambda lam: f.phi(synthetic_curve, lam)  # noqa: E731
        seg = period_integral(synthetic_curve, fun, "segment", k)
        ell = period_integral(synthetic_curve, fun, "A-ellipse", k)
        assert abs(2 * seg - ell) <= 1e-8 * max(1.0, abs(ell))


def test_products_match_linear_solve(synthetic_curve, synthetic_forms):
    lam = vacuum_lattice(np.array([4, 5, -3, -5])) * 1.3 + 2j
    for f in synthetic_forms:
        oracle = monomial_one_form(synthetic_curve, f.n)
        ref = f.phi(synthetic_curve, lam)
        assert np.max(np.abs(oracle(lam) - ref) / np.abs(ref)) <= 1e-6


def test_sqrt_psi_squares_and_sheets(synthetic_curve):
    C = synthetic_curve
    i = C._i(1)
    lam = C.kappa_mid[i] + np.array([0.3, -0.2j, 0.1 + 0.1j]) * abs(C.half_gap[i]) * 4
    psi = sqrt_psi(C, 1, lam)
    assert np.allclose(psi**2, (lam - C.kappa1[i]) * (lam - C.kappa2[i]), rtol=1e-12)
    assert np.array_equal(sqrt_psi(C, 1, lam, -1), -psi)
    with pytest.raises(ValidationError):
        sqrt_psi(C, 1, lam, 2)
    with pytest.raises(ValidationError):
        sqrt_psi(C, 1, vacuum_lattice(3))


def test_sqrt_psi_at_a_closed_gap(synthetic_curve):
    k = 5
    mid = synthetic_curve.kappa_mid[synthetic_curve._i(k)]
    lam = mid * (1 + np.array([1e-3, -2e-3j]))
    assert np.allclose(sqrt_psi(synthetic_curve, k, lam), lam - mid, rtol=1e-14)
    assert np.allclose(sqrt_psi(synthetic_curve, k, lam, -1), mid - lam, rtol=1e-14)


def test_abel_map_of_the_origin_is_zero(finite_type_setup):
    curve, forms, D0 = finite_type_setup
    assert np.all(abel_map(curve, forms, D0, D0).phi == 0)


def test_a_loop_adds_a_unit_vector(finite_type_setup):
    curve, forms, D0 = finite_type_setup
    ns = [f.n for f in forms]
    for k in ns:
        phi = abel_map(curve, forms, D0, D0, loops={k: 1}).phi
        e = np.array([1.0 if n == k else 0.0 for n in ns])
        assert np.max(np.abs(phi - e)) <= 1e-6


def test_change_of_origin(finite_type_setup):
    from sinh_spectral.flows import integrate_flow

    curve, forms, D0 = finite_type_setup
    kw = dict(FLOW_KW, trace=curve.trace_at)
    D1 = integrate_flow(D0, "x", 0.01, **kw).divisor
    D2 = integrate_flow(D1, "x", 0.01, **kw).divisor
    direct = abel_map(curve, forms, D2, D0).phi
    chained = abel_map(curve, forms, D2, D1).phi + abel_map(curve, forms, D1, D0).phi
    assert np.max(np.abs(direct - chained)) <= 1e-8


def test_flow_slopes_are_the_gap_indices(finite_type_setup):
    curve, forms, D0 = finite_type_setup
    slopes = flow_slope_check(curve, forms, D0, "x", trace=curve.trace_at, **FLOW_KW)
    for f, s in zip(forms, slopes):
        assert abs(s - f.n) <= 0.02 * abs(f.n)


def test_abel_coordinates_move_linearly(finite_type_setup):
    curve, forms, D0 = finite_type_setup
    times = np.linspace(0.0, 0.05, 6)
    phi = abel_along_flow(curve, forms, D0, "x", times, trace=curve.trace_at, **FLOW_KW)
    for j, f in enumerate(forms):
        coef = np.polyfit(times, phi[:, j].real, 1)
        resid = np.max(np.abs(np.polyval(coef, times) - phi[:, j].real))
        assert resid <= 1e-3 * abs(coef[0])
        assert abs(coef[0] - f.n) <= 0.02 * abs(f.n)


def test_truncated_curve_validation():
    with pytest.raises(ValidationError):
        TruncatedCurve(2, np.zeros(3), np.zeros(3))
    lat = vacuum_lattice(np.arange(-2, 3)).astype(complex)
    k2 = lat.copy()
    k2[3] = lat[4]
    with pytest.raises(ValidationError):
        TruncatedCurve(2, lat, k2)
    with pytest.raises(ValidationError):
        period_integral(TruncatedCurve(2, lat, lat), lambda lam: lam, "B", 1)
