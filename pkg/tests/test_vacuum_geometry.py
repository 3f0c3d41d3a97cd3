import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sinh_spectral.errors import ValidationError
from sinh_spectral.vacuum_geometry import (
    K0_DELTA_MAX,
    annulus_index,
    contour_excluded_domain,
    in_excluded_domain,
    lambda_from_zeta,
    sample_outside_domains,
    seq_norm,
    vacuum_c,
    vacuum_c_over_node,
    vacuum_frame,
    vacuum_lattice,
    vacuum_monodromy,
    weight_w,
    zeta,
)

finite = dict(allow_nan=False, allow_infinity=False)
lam_strategy = st.builds(
    lambda r, t: np.exp(r + 1j * t),
    st.floats(-6, 6, **finite),
    st.floats(-3.1, 3.1, **finite),
)


def test_lattice_values():
    # closed form 8 pi^2 k^2 + 4 pi k sqrt(4 pi^2 k^2 - 1) - 1
    closed = 8 * np.pi**2 + 4 * np.pi * np.sqrt(4 * np.pi**2 - 1) - 1
    assert vacuum_lattice(1) == pytest.approx(closed, rel=1e-14)
    assert vacuum_lattice(1) == pytest.approx(155.907256, rel=1e-8)
    assert vacuum_lattice(-1) == pytest.approx(0.0064140, rel=1e-4)
    assert vacuum_lattice(0) == -1.0


def test_lattice_points_are_zeros_of_sin_zeta():
    lam = vacuum_lattice(np.arange(-6, 7))
    assert np.max(np.abs(np.sin(zeta(lam)))) < 1e-12


def test_weight_at_one():
    # zeta(1) = 1/2
    assert weight_w(1.0) == pytest.approx(np.cos(0.5) + np.sin(0.5), abs=1e-12)
    assert weight_w(1.0) == pytest.approx(1.35700, abs=1e-5)


@given(
    st.floats(0.05, 6, **finite),
    st.floats(-3.1, 3.1, **finite),
    st.sampled_from([1, -1]),
)
def test_zeta_inverse_round_trip(r, t, side):
    # zeta(lam) = zeta(1/lam); the side of the unit circle selects the root
    lam = np.exp(side * r + 1j * t)
    z = zeta(lam)
    back = lambda_from_zeta(z, outer=abs(lam) >= 1)
    assert abs(back - lam) <= 1e-9 * max(1.0, abs(lam))


@given(lam_strategy)
def test_weight_is_branch_independent(lam):
    assert weight_w(lam) == pytest.approx(weight_w(lam * np.exp(2j * np.pi)), rel=1e-12)


@given(lam_strategy)
def test_vacuum_monodromy_unit_determinant(lam):
    M = vacuum_monodromy(lam)
    assert abs(np.linalg.det(M) - 1.0) < 1e-9 * max(1.0, np.abs(M).max() ** 2)


def test_vacuum_monodromy_at_lattice():
    for k in range(-4, 5):
        M = vacuum_monodromy(vacuum_lattice(k))
        assert np.allclose(M, (-1) ** k * np.eye(2), atol=1e-10)


def test_vacuum_frame_endpoints():
    lam = np.array([2.0 + 1j, 0.3 - 0.2j])
    for z in lam:
        assert np.allclose(vacuum_frame(0.0, z), np.eye(2))
        assert np.allclose(vacuum_frame(1.0, z), vacuum_monodromy(z), atol=1e-13)


def test_c_over_node_is_stable_near_node():
    for j in (-2, 1, 2):
        lam0 = vacuum_lattice(j)
        lam = lam0 * (1 + 1e-3)
        direct = vacuum_c(lam) / (lam0 - lam)
        assert vacuum_c_over_node(lam, j) == pytest.approx(direct, rel=1e-8)
        limit = vacuum_c_over_node(lam0 * (1 + 1e-14), j)
        assert np.isfinite(limit) and abs(limit) > 0


@pytest.mark.parametrize("k", [-3, -1, 0, 1, 2])
def test_domain_contour_winds_once(k):
    lam, dlam = contour_excluded_domain(k, 0.5, 128)
    winding = np.sum(dlam / (lam - vacuum_lattice(k))) * (2 * np.pi / 128) / (2j * np.pi)
    assert winding == pytest.approx(1.0, abs=1e-10)
    z = zeta(lam)
    dist = np.minimum(np.abs(z - k * np.pi), np.abs(z + k * np.pi))
    # the central domain uses a slightly smaller radius, away from lam = 1
    radius = min(0.5, K0_DELTA_MAX) if k == 0 else 0.5
    assert np.max(np.abs(dist - radius)) < 1e-9


def test_annulus_index_of_lattice():
    ks = np.arange(-5, 6)
    assert np.array_equal(annulus_index(vacuum_lattice(ks)), ks)


def test_samples_avoid_excluded_domains():
    lam = sample_outside_domains(60, 6, seed=3)
    assert lam.shape == (60,)
    for k in range(-7, 8):
        assert not np.any(in_excluded_domain(lam, k, 0.5))
    assert np.array_equal(lam, sample_outside_domains(60, 6, seed=3))


def test_seq_norm_plain_window():
    v = np.array([0.0, 3.0, 4.0])
    # window k = -1..1 with unit weights
    assert seq_norm(v) == pytest.approx(5.0)


def test_zeta_rejects_zero():
    with pytest.raises((ValidationError, ZeroDivisionError, ValueError)):
        zeta(0.0)
