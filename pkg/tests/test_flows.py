import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sinh_spectral.errors import ValidationError
from sinh_spectral.flows import darboux_vectors, divisor_velocity, integrate_flow, symplectic_form_omega
from sinh_spectral.monodromy import ODEMonodromy
from sinh_spectral.potentials import PotentialModel
from sinh_spectral.spectral_extract import divisor_distance, find_divisor, vacuum_divisor
from sinh_spectral.vacuum_geometry import vacuum_lattice

GRID = np.arange(64) / 64


def test_vacuum_is_stationary():
    D = vacuum_divisor(6)
    for direction in ("x", "y"):
        assert np.all(divisor_velocity(D, direction) == 0)
        st_ = integrate_flow(D, direction, 0.5)
        assert np.array_equal(st_.divisor.lam, D.lam)
        assert np.array_equal(st_.divisor.mu, D.mu)


def test_involution_negates_velocity():
    D = find_divisor(ODEMonodromy(PotentialModel.cosine(0.3, uy_eps=0.3), 1e-12), 6)
    v = divisor_velocity(D, "x")
    w = divisor_velocity(D.with_points(mu=1 / D.mu), "x")
    assert np.max(np.abs(v)) > 0
    assert np.max(np.abs(w + v)) <= 1e-12 * np.max(np.abs(v))


def test_invalid_direction():
    with pytest.raises(ValidationError):
        divisor_velocity(vacuum_divisor(2), "z")
    with pytest.raises(ValidationError):
        integrate_flow(vacuum_divisor(2), "t", 1.0)


def test_omega_examples():
    c = np.cos(2 * np.pi * GRID)
    zero = np.zeros_like(c)
    assert symplectic_form_omega((c, zero), (zero, c)) == pytest.approx(0.5, abs=1e-15)
    assert symplectic_form_omega((zero, c), (c, zero)) == pytest.approx(-0.5, abs=1e-15)
    with pytest.raises(ValidationError):
        symplectic_form_omega((c, zero), (c[:3], zero[:3]))


vec = st.lists(st.floats(-1, 1), min_size=8, max_size=8)


@given(vec, vec, vec, vec, vec, vec, st.floats(-2, 2))
def test_omega_is_antisymmetric_and_bilinear(a1, b1, a2, b2, a3, b3, s):
    d1, d2, d3 = (np.array(a1), np.array(b1)), (np.array(a2), np.array(b2)), (np.array(a3), np.array(b3))
    w = symplectic_form_omega
    assert w(d1, d2) == pytest.approx(-w(d2, d1), abs=1e-12)
    comb = (d1[0] + s * d3[0], d1[1] + s * d3[1])
    assert w(comb, d2) == pytest.approx(w(d1, d2) + s * w(d3, d2), abs=1e-12)


def test_vacuum_darboux_scalars():
    for k in (1, 2, -1):
        dv = darboux_vectors(PotentialModel.vacuum(), k)
        lam = vacuum_lattice(k)
        assert dv.theta == pytest.approx(0.5 * (lam + 1), rel=1e-10)
        assert dv.pairing == pytest.approx(0.25j * (lam - 1), rel=1e-10)
        assert symplectic_form_omega(dv.v, dv.w, dv.weights) == pytest.approx(dv.pairing, rel=1e-10)


def test_flow_matches_translated_potential(cos_potential, cos_divisor16):
    st_ = integrate_flow(cos_divisor16, "x", 0.1)
    Dt = find_divisor(ODEMonodromy(cos_potential.shifted(0.1), 1e-12), 16)
    assert divisor_distance(st_.divisor, Dt) <= 1e-5
    assert st_.on_curve_defect <= 1e-7


def test_y_flow_stays_on_curve(cos_divisor16):
    st_ = integrate_flow(cos_divisor16, "y", 0.1)
    assert st_.on_curve_defect <= 1e-7
    assert st_.times[-1] == pytest.approx(0.1)
