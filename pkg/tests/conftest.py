"""Shared fixtures: test potentials, their monodromies and extracted data.

The expensive objects (ODE monodromies, divisors, the finite-type curve)
are session scoped so every module reuses one forward run.
"""

import numpy as np
import pytest

from sinh_spectral.finite_type import finite_type_project
from sinh_spectral.jacobi import TruncatedCurve, canonical_one_forms
from sinh_spectral.monodromy import ODEMonodromy
from sinh_spectral.potentials import PotentialModel, make_constant_potential
from sinh_spectral.reconstruction import reconstruct_monodromy
from sinh_spectral.spectral_extract import find_branch_points, find_divisor
from sinh_spectral.vacuum_geometry import vacuum_lattice

TAU = np.exp(-0.1)


def closed_form_constant_zeros(tau, ks):
    """Zeros of the lower-left entry of the constant-data monodromy."""
    ks = np.asarray(ks)
    s = 16.0 * np.pi**2 * ks**2 - tau**2 - tau**-2
    big = 0.5 * (s + np.sqrt(s * s - 4.0 + 0j))
    out = np.where(ks > 0, big, 1.0 / big)
    return np.where(ks == 0, -(tau**-2), out).astype(complex)


@pytest.fixture(scope="session")
def tau():
    return TAU


@pytest.fixture(scope="session")
def constant_zeros():
    """Closed-form zeros of the lower-left entry for constant data."""
    return closed_form_constant_zeros


@pytest.fixture(scope="session")
def cos_potential():
    return PotentialModel.cosine(0.3)


@pytest.fixture(scope="session")
def complex_potential():
    return PotentialModel([0.1 + 0.05j, 0.2, 0.3 - 0.1j, 0.1j, 0.05], [0.02, 0.1j, 0.3, 0.1, 0.0])


@pytest.fixture(scope="session")
def cos_monodromy(cos_potential):
    return ODEMonodromy(cos_potential, tol=1e-12)


@pytest.fixture(scope="session")
def cos_divisor16(cos_monodromy):
    return find_divisor(cos_monodromy, 16)


@pytest.fixture(scope="session")
def cos_divisor32(cos_monodromy):
    return find_divisor(cos_monodromy, 32)


@pytest.fixture(scope="session")
def cos_curve16(cos_monodromy):
    return find_branch_points(cos_monodromy, 16)


@pytest.fixture(scope="session")
def constant_potential():
    return make_constant_potential(TAU)


@pytest.fixture(scope="session")
def constant_monodromy(constant_potential):
    return ODEMonodromy(constant_potential, tol=1e-12)


@pytest.fixture(scope="session")
def constant_divisor8(constant_monodromy):
    return find_divisor(constant_monodromy, 8)


@pytest.fixture(scope="session")
def constant_curve8(constant_monodromy):
    return find_branch_points(constant_monodromy, 8)


@pytest.fixture(scope="session")
def finite_type_setup(cos_monodromy):
    """Finite-type projection of the cosine divisor (``N = 12``, ``N_fix = 4``).

    Returns the truncated curve, its canonical forms on the open gaps and
    the projected divisor moved onto the truncated curve.
    """
    D = find_divisor(cos_monodromy, 12)
    Ds = finite_type_project(D, 4).divisor
    model = find_branch_points(reconstruct_monodromy(Ds, 1, "vacuum"), 12, tol=1e-10)
    curve = TruncatedCurve.from_model(model)
    forms = canonical_one_forms(curve, ns=curve.open_set)
    return curve, forms, curve.on_curve(Ds)


@pytest.fixture(scope="session")
def synthetic_curve():
    """Genus six: gaps of relative width about 4% at ``k = -2..3``."""
    eps = 0.02
    gaps = {
        k: (vacuum_lattice(k) * (1 + eps * (1 + 0.3j)), vacuum_lattice(k) * (1 - eps))
        for k in (-2, -1, 0, 1, 2, 3)
    }
    return TruncatedCurve.from_gaps(8, gaps)


@pytest.fixture(scope="session")
def synthetic_forms(synthetic_curve):
    return canonical_one_forms(synthetic_curve, ns=synthetic_curve.open_set)
