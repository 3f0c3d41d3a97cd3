import numpy as np
import pytest

from sinh_spectral.errors import ValidationError
from sinh_spectral.finite_type import critical_points_eta, finite_type_project, project_with_doubling
from sinh_spectral.monodromy import VacuumMonodromy
from sinh_spectral.spectral_extract import divisor_distance, find_branch_points, find_divisor, vacuum_divisor
from sinh_spectral.reconstruction import reconstruct_monodromy
from sinh_spectral.vacuum_geometry import vacuum_lattice


def test_vacuum_critical_points_are_the_lattice():
    cp = critical_points_eta(VacuumMonodromy(), 4)
    assert np.allclose(cp.eta, vacuum_lattice(cp.ks), rtol=1e-10)
    assert cp.residual < 1e-10


def test_vacuum_is_already_finite_type():
    D = vacuum_divisor(6)
    res = finite_type_project(D, 2)
    assert res.distance <= 1e-10
    assert res.residual <= 1e-12


def test_finite_type_divisor_is_fixed(finite_type_setup, cos_monodromy):
    D = find_divisor(cos_monodromy, 12)
    first = finite_type_project(D, 4).divisor
    second = finite_type_project(first, 4)
    assert divisor_distance(first, second.divisor) <= 1e-10
    assert second.iterations <= 2


def test_window_is_kept_exactly(cos_monodromy):
    D = find_divisor(cos_monodromy, 12)
    res = finite_type_project(D, 4)
    inner = np.abs(D.ks) <= 4
    assert np.array_equal(res.divisor.lam[inner], D.lam[inner])
    assert np.array_equal(res.divisor.mu[inner], D.mu[inner])
    outer = ~inner
    assert np.all(res.divisor.mu[outer] == (-1.0) ** np.abs(D.ks[outer]))


def perturbed_vacuum(N=12, seed=0):
    # a tame divisor with open gaps at every k
    D = vacuum_divisor(N)
    rng = np.random.default_rng(seed)
    k = np.abs(D.ks)
    lam = D.lam * (1 + 1e-2 * rng.standard_normal(k.size) / (1 + k) ** 2)
    mu = D.mu * np.exp(0.05 * rng.standard_normal(k.size) / (1 + k))
    return D.with_points(lam=lam, mu=mu)


def test_iteration_contracts():
    D = perturbed_vacuum()
    for n in (1, 4):
        res = finite_type_project(D, n)
        assert res.iterations >= 3
        assert 0 < res.contraction < 1
        assert all(r < 1 for r in res.ratios)
        assert res.residual <= 1e-12


def test_outer_gaps_close(cos_monodromy):
    D = find_divisor(cos_monodromy, 12)
    Ds = finite_type_project(D, 4).divisor
    C = find_branch_points(reconstruct_monodromy(Ds, 1, "vacuum"), 12, tol=1e-10)
    outer = np.abs(C.ks) > 4
    assert np.max(C.gap_raw[outer] / np.abs(C.kappa_mid[outer])) <= 1e-7


def test_distance_decreases_with_window(cos_monodromy):
    D = find_divisor(cos_monodromy, 12)
    d = [finite_type_project(D, n).distance for n in (2, 4, 6)]
    assert d[0] > d[1] > d[2]


def test_doubling_and_arguments():
    D = vacuum_divisor(4)
    assert project_with_doubling(D, 1).N_fix == 1
    with pytest.raises(ValidationError):
        finite_type_project(D, 5)
