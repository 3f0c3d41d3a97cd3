"""Closed-form vacuum objects and the geometry of the spectral plane.

Everything here refers to the trivial solution ``u = 0``. Its monodromy,
lattice of double points and frame are known in closed form and serve as
the reference that all numerical objects are compared against.

The square root ``sqrt(lam)`` is taken on the principal branch (slit along
the negative real axis). Quantities that are even in ``sqrt(lam)`` are
evaluated in branch-free form (via ``sinc``) so that they are continuous
across the slit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_DELTA",
    "ExcludedDomain",
    "annulus_index",
    "contour_excluded_domain",
    "dzeta_dlambda",
    "in_annulus",
    "in_excluded_domain",
    "lambda_from_zeta",
    "lattice_sqrt",
    "sample_outside_domains",
    "seq_norm",
    "sinc",
    "sqrt_lambda",
    "vacuum_c",
    "vacuum_c_over_node",
    "vacuum_frame",
    "vacuum_lattice",
    "vacuum_monodromy",
    "weight_w",
    "zeta",
]

DEFAULT_DELTA = 0.5
K0_DELTA_MAX = 0.45


def _check_nonzero(lam):
    lam = np.asarray(lam, dtype=complex)
    if np.any(lam == 0):
        raise ValueError("spectral parameter must be nonzero")
    return lam


def sinc(z):
    """Unnormalized ``sin(z)/z`` for complex arguments, exact at 0."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-4
    zs = z[small]
    z2 = zs * zs
    out[small] = 1.0 - z2 / 6.0 + z2 * z2 / 120.0
    zl = z[~small]
    out[~small] = np.sin(zl) / zl
    return out if out.ndim else out[()]


def sqrt_lambda(lam, branch=1):
    """Square root of ``lam`` on the principal branch, times ``branch``."""
    lam = _check_nonzero(lam)
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    return branch * np.sqrt(lam)


def zeta(lam, branch=1):
    """Return ``zeta(lam) = (sqrt(lam) + 1/sqrt(lam)) / 4``.

    Parameters
    ----------
    lam : complex or array_like
        Nonzero spectral parameter.
    branch : {1, -1}
        Sign applied to the principal square root. Flipping the branch
        flips the sign of zeta.

    Returns
    -------
    complex or ndarray
    """
    s = sqrt_lambda(lam, branch)
    return 0.25 * (s + 1.0 / s)


def dzeta_dlambda(lam, branch=1):
    """Derivative of :func:`zeta` with respect to ``lam``."""
    lam = _check_nonzero(lam)
    s = sqrt_lambda(lam, branch)
    return 0.125 * (1.0 / s - 1.0 / (s * lam))


def weight_w(lam):
    """Return ``w(lam) = |cos zeta| + |sin zeta|`` (branch independent)."""
    z = zeta(lam)
    return np.abs(np.cos(z)) + np.abs(np.sin(z))


def lattice_sqrt(k):
    """Principal square root of the lattice point ``lambda_{k,0}``.

    For ``k > 0`` this is ``2 pi k + sqrt(4 pi^2 k^2 - 1)``, for ``k < 0`` its
    reciprocal (computed without cancellation) and ``1j`` for ``k = 0``.
    """
    k = np.asarray(k)
    ak = np.abs(k).astype(float)
    big = 2.0 * np.pi * ak + np.sqrt(np.maximum(4.0 * np.pi**2 * ak**2 - 1.0, 0.0))
    out = np.where(k > 0, big + 0j, 0j)
    out = np.where(k < 0, 1.0 / np.where(k < 0, big, 1.0) + 0j, out)
    out = np.where(k == 0, 1j, out)
    return out if out.ndim else out[()]


def vacuum_lattice(k):
    """Return the vacuum double points ``lambda_{k,0}``.

    ``lambda_{k,0} = 8 pi^2 k^2 + 4 pi k sqrt(4 pi^2 k^2 - 1) - 1``; the values
    for negative ``k`` are taken as reciprocals to avoid cancellation.

    Examples
    --------
    >>> round(float(vacuum_lattice(1).real), 4)
    155.9073
    """
    k = np.asarray(k)
    s = lattice_sqrt(k)
    out = np.where(k == 0, -1.0 + 0j, s * s)
    return out if out.ndim else out[()]


def vacuum_monodromy(lam):
    """Closed-form vacuum monodromy ``M0(lam)`` with shape ``(..., 2, 2)``.

    The entries are ``cos zeta``, ``-lam^{-1/2} sin zeta``,
    ``lam^{1/2} sin zeta`` and ``cos zeta``, written through ``sinc`` so that
    they are manifestly even in ``sqrt(lam)``.
    """
    lam = _check_nonzero(lam)
    z = zeta(lam)
    cz = np.cos(z)
    sz = sinc(z)
    out = np.empty(lam.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = cz
    out[..., 0, 1] = -0.25 * (1.0 + 1.0 / lam) * sz
    out[..., 1, 0] = 0.25 * (lam + 1.0) * sz
    out[..., 1, 1] = cz
    return out


def vacuum_c(lam):
    """Lower-left vacuum entry ``c0 = sqrt(lam) sin zeta = (lam+1)/4 sinc zeta``."""
    lam = _check_nonzero(lam)
    return 0.25 * (lam + 1.0) * sinc(zeta(lam))


def vacuum_c_over_node(lam, j):
    """Stable evaluation of ``c0(lam) / (lambda_{j,0} - lam)``.

    The removable singularity at ``lam = lambda_{j,0}`` is resolved by
    writing ``zeta - j pi`` as a product that does not cancel. Far from the
    node the quotient is formed directly.
    """
    lam = _check_nonzero(lam)
    j = np.broadcast_to(np.asarray(j), lam.shape)
    out = np.empty(np.broadcast(lam, j).shape, dtype=complex)
    lam_b = np.broadcast_to(lam, out.shape)
    z = zeta(lam_b)
    zero = j == 0
    out[zero] = -0.25 * sinc(z[zero])
    nz = ~zero
    if np.any(nz):
        ln = lam_b[nz]
        jn = j[nz]
        nodes = vacuum_lattice(jn)
        sj = lattice_sqrt(jn)
        s = np.sqrt(ln)
        dz = 0.25 * (1.0 - 1.0 / (s * sj)) / (s + sj)
        sign = np.where(jn % 2 == 0, 1.0, -1.0)
        # zeta - |j| pi = dz * (lam - lambda_j); sinc keeps the node removable
        near = np.abs(z[nz] - np.abs(jn) * np.pi) < 1.0
        res = np.empty(ln.shape, dtype=complex)
        dzz = dz[near] * (ln[near] - nodes[near])
        res[near] = -sign[near] * s[near] * sinc(dzz) * dz[near]
        far = ~near
        res[far] = vacuum_c(ln[far]) / (nodes[far] - ln[far])
        out[nz] = res
    return out if out.ndim else out[()]


def vacuum_frame(x, lam):
    """Closed-form vacuum extended frame ``F0(x, lam)``.

    Parameters
    ----------
    x : array_like
        Positions in ``[0, 1]``.
    lam : complex
        Spectral parameter.

    Returns
    -------
    ndarray
        Shape ``x.shape + (2, 2)``.
    """
    lam = complex(_check_nonzero(lam))
    x = np.asarray(x, dtype=float)
    z = complex(zeta(lam))
    xz = x * z
    sz = x * sinc(xz)
    out = np.empty(x.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.cos(xz)
    out[..., 0, 1] = -0.25 * (1.0 + 1.0 / lam) * sz
    out[..., 1, 0] = 0.25 * (lam + 1.0) * sz
    out[..., 1, 1] = np.cos(xz)
    return out


def lambda_from_zeta(z, outer=True):
    """Invert ``zeta``: the ``lam`` with ``zeta(lam) = z``.

    ``outer`` selects the preimage with ``|lam| >= 1``; otherwise the
    reciprocal one is returned.
    """
    z = np.asarray(z, dtype=complex)
    root = np.sqrt(4.0 * z * z - 1.0)
    s = 2.0 * z + root
    # pick the square root of lam with the requested modulus
    s_alt = 2.0 * z - root
    pick_big = np.abs(s) >= np.abs(s_alt)
    big = np.where(pick_big, s, s_alt)
    small = np.where(pick_big, s_alt, s)
    s = big if outer else small
    return s * s


def sample_outside_domains(n, K, delta=DEFAULT_DELTA, height=2.0, seed=0):
    """``n`` pseudo-random points of ``V_delta`` with ``|zeta| <= (K + 1/2) pi``.

    ``zeta`` is drawn uniformly from ``0.3 <= Re zeta <= (K + 1/2) pi``,
    ``|Im zeta| <= height``, rejecting the discs ``|zeta - k pi| <= delta + 0.1``;
    the first half of the points is mapped to ``|lam| > 1``, the rest to
    ``|lam| < 1``.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        z = rng.uniform(0.3, (K + 0.5) * np.pi) + 1j * rng.uniform(-height, height)
        k = round(z.real / np.pi)
        if abs(z - k * np.pi) > delta + 0.1:
            out.append(z)
    z = np.array(out)
    half = (n + 1) // 2
    return np.concatenate([lambda_from_zeta(z[:half], True), lambda_from_zeta(z[half:], False)])


def annulus_index(lam):
    """Index ``k`` of the annulus ``S_k`` containing ``lam``.

    ``S_k`` is ``(|k|-1/2) pi <= |zeta| <= (|k|+1/2) pi`` with ``|lam| > 1``
    for ``k > 0`` and ``|lam| < 1`` for ``k < 0``.
    """
    lam = _check_nonzero(lam)
    a = np.abs(zeta(lam))
    k = np.floor(a / np.pi + 0.5).astype(int)
    k = np.where(np.abs(lam) < 1.0, -k, k)
    return k if k.ndim else int(k)


def in_annulus(lam, k):
    """Membership test for the annulus ``S_k``."""
    lam = _check_nonzero(lam)
    a = np.abs(zeta(lam))
    ak = abs(int(k))
    ok = (a >= (ak - 0.5) * np.pi) & (a <= (ak + 0.5) * np.pi)
    if k > 0:
        ok &= np.abs(lam) > 1.0
    elif k < 0:
        ok &= np.abs(lam) < 1.0
    return ok


def in_excluded_domain(lam, k, delta=DEFAULT_DELTA):
    """Membership test ``lam in U_{k,delta}``.

    ``|zeta(lam) - zeta(lambda_{k,0})| < delta`` (for either sign of zeta)
    together with ``|lam| > 1`` for ``k > 0`` and ``|lam| < 1`` for ``k < 0``.
    """
    lam = _check_nonzero(lam)
    z = zeta(lam)
    zk = abs(int(k)) * np.pi
    ok = np.minimum(np.abs(z - zk), np.abs(z + zk)) < delta
    if k > 0:
        ok &= np.abs(lam) > 1.0
    elif k < 0:
        ok &= np.abs(lam) < 1.0
    return ok


@dataclass(frozen=True)
class ExcludedDomain:
    """The excluded domain ``U_{k,delta}`` around ``lambda_{k,0}``."""

    k: int
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not 0.0 < self.delta < np.pi - 0.5:
            raise ValueError("delta must lie in (0, pi - 1/2)")

    @property
    def center(self):
        return complex(vacuum_lattice(self.k))

    def contains(self, lam):
        return in_excluded_domain(lam, self.k, self.delta)

    def contour(self, n=64):
        return contour_excluded_domain(self.k, self.delta, n)

    def length_scale(self):
        """Radius of the domain measured in ``lam`` (first order in delta)."""
        return self.delta / abs(complex(dzeta_dlambda(self.center)))


def contour_excluded_domain(k, delta=DEFAULT_DELTA, n=64):
    """Counterclockwise boundary of ``U_{k,delta}``.

    The boundary is the image of the circle ``|zeta - |k| pi| = delta`` under
    the inverse of ``zeta``. Returns the points and ``d lam / d theta`` at
    ``n`` equispaced parameter values. For ``k = 0`` the radius is capped at
    ``K0_DELTA_MAX`` because the boundary of ``U_0`` touches the critical
    point ``lam = 1`` of zeta when ``delta = 1/2``.
    """
    if k == 0:
        # the boundary of U_0 degenerates at zeta = 1/2 (lam = 1)
        delta = min(delta, K0_DELTA_MAX)
    theta = 2.0 * np.pi * np.arange(n) / n
    e = np.exp(1j * theta)
    z = abs(k) * np.pi + delta * e
    dz = 1j * delta * e
    if k == 0:
        s = 2.0 * z + 1j * np.sqrt(1.0 - 4.0 * z * z)
        ds = 2.0 - 4j * z / np.sqrt(1.0 - 4.0 * z * z)
    else:
        r = np.sqrt(4.0 * z * z - 1.0)
        sgn = 1.0 if k > 0 else -1.0
        s = 2.0 * z + sgn * r
        ds = 2.0 + sgn * 4.0 * z / r
    lam = s * s
    dlam = 2.0 * s * ds * dz
    return lam, dlam


def seq_norm(values, n=0, m=0):
    """Weighted sequence norm of a centred window.

    ``values`` holds ``a_k`` for ``k = -N..N``. The norm is
    ``(sum_{k>0} |k^n a_k|^2 + |a_0|^2 + sum_{k>0} |k^m a_{-k}|^2)^{1/2}``.

    Examples
    --------
    >>> round(seq_norm([0, 0, 0, 1, 1], n=1, m=0) ** 2, 12)
    5.0
    """
    a = np.asarray(values, dtype=complex)
    if a.ndim != 1 or a.size % 2 != 1:
        raise ValueError("window must have odd length 2N+1")
    big_n = a.size // 2
    ks = np.arange(1, big_n + 1, dtype=float)
    pos = a[big_n + 1 :]
    neg = a[: big_n][::-1]
    total = np.sum(np.abs(ks**n * pos) ** 2) + abs(a[big_n]) ** 2
    total += np.sum(np.abs(ks**m * neg) ** 2)
    return float(np.sqrt(total))
