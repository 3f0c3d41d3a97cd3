"""Truncated Jacobi machinery: square-root charts, periods, canonical forms, Abel map.

A truncated curve has finitely many open gaps ``G``; every other gap is a
double point. Its discriminant is the product

    Delta^2 - 4 = -(4/lam) c0(lam)^2 prod_k (lam - kappa_{k,1})(lam - kappa_{k,2}) / (lam - lambda_{k,0})^2,

so the truncation is exact rather than approximate.

Near gap ``k`` write ``mu - 1/mu = G_k(lam) Psi_k(lam)`` where
``Psi_k^2 = (lam - kappa_{k,1})(lam - kappa_{k,2})`` and ``G_k`` is
holomorphic without zeros on the excluded domain. The sign of ``G_k`` is
fixed by ``G_k ~ 1/(4i (-1)^k lambda_{k,0}^{rho/2})`` with ``rho = 1`` for
``k > 0`` and ``rho = 3`` for ``k < 0``. The uniformising variable ``s``
with

    lam = kappa_{k,*} + (h/2) cosh s,   Psi_k = (h/2) sinh s,   h = kappa_{k,1} - kappa_{k,2},

turns ``d lam / Psi_k`` into ``ds``. The lifted A-cycle is
``s -> s + 2 pi i``, so for a 1-form ``omega = Phi/(mu - 1/mu) d lam``

    int_{A_k} omega = i int_0^{2 pi} (Phi/G_k)(kappa_{k,*} + (h/2) cos theta) d theta,

and Abel integrals along paths inside the excluded domain become smooth
integrals in ``s``; the winding around the gap is the imaginary part of
``s``. At a closed gap the chart is ``lam = kappa_{k,*} + e^s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractionError, ConvergenceError, DegenerateError, ValidationError
from .numerics import gauss_legendre_01, local_radius
from .spectral_extract import Divisor
from .vacuum_geometry import (
    DEFAULT_DELTA,
    annulus_index,
    in_excluded_domain,
    vacuum_c,
    vacuum_c_over_node,
    vacuum_lattice,
    zeta,
)

__all__ = [
    "AbelVector",
    "OneFormModel",
    "TruncatedCurve",
    "a_period_matrix",
    "abel_along_flow",
    "abel_map",
    "canonical_one_forms",
    "flow_slope_check",
    "monomial_one_form",
    "period_integral",
    "phi_product",
    "point_sheet",
    "sqrt_psi",
]

# points this close to a double point (relative to the domain radius) count as
# sitting on it; numerically closed gaps leave their points there up to noise
NODE_TOL = 1e-7

# default bound |xi_k - kappa_{k,*}| <= C_XI |kappa_{k,1} - kappa_{k,2}|
C_XI = 8.0


def _reference_g(k):
    """Asymptotic value of ``G_k`` that fixes its sign."""
    if k == 0:
        # no asymptotic statement at k = 0; the vacuum has G_0 = +-1/2
        return -0.5 + 0j
    lam0 = float(vacuum_lattice(k).real)
    rho = 1 if k > 0 else 3
    sign = 1.0 if k % 2 == 0 else -1.0
    return 1.0 / (4j * sign * lam0 ** (rho / 2.0))


class TruncatedCurve:
    """Spectral curve with open gaps on a finite set and double points elsewhere.

    Parameters
    ----------
    N : int
        Window ``|k| <= N`` on which branch points are stored; beyond it
        the gaps are the vacuum double points ``lambda_{k,0}``.
    kappa1, kappa2 : array_like
        Branch points, length ``2N+1``; equal entries are double points.
    delta : float
        Radius of the excluded domains in the ``zeta`` plane.
    trace : callable, optional
        ``Delta(lam)`` when the curve comes from a monodromy; used only to
        build eigenvalues ``mu`` from ``mu - 1/mu``.

    Raises
    ------
    ValidationError
        If a branch point leaves its excluded domain or two gaps share a
        point (a zero of order three or more).
    """

    def __init__(self, N, kappa1, kappa2, delta=DEFAULT_DELTA, trace=None):
        self.N = int(N)
        self.kappa1 = np.asarray(kappa1, dtype=complex).copy()
        self.kappa2 = np.asarray(kappa2, dtype=complex).copy()
        if self.kappa1.shape != (2 * self.N + 1,) or self.kappa2.shape != self.kappa1.shape:
            raise ValidationError("branch point arrays must have length 2N+1")
        self.delta = float(delta)
        self.trace = trace
        self.ks = np.arange(-self.N, self.N + 1)
        self.lattice = vacuum_lattice(self.ks)
        self.closed = self.kappa1 == self.kappa2
        for i, k in enumerate(self.ks):
            pts = np.array([self.kappa1[i], self.kappa2[i]])
            if not np.all(in_excluded_domain(pts, int(k), self.delta)):
                raise ValidationError(f"branch points of gap {k} leave their excluded domain")
        mids = self.kappa_mid
        sep = np.abs(mids[:, None] - mids[None, :]) + np.diag(np.full(mids.size, np.inf))
        if np.any(sep == 0):
            raise ValidationError("two gaps share a point: Delta^2 - 4 would have a zero of order >= 3")

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_model(cls, model, open_set=None):
        """Truncate a :class:`SpectralCurveModel`.

        Gaps flagged closed in the model, or outside ``open_set`` when it is
        given, are collapsed to their midpoint (the critical point of
        ``Delta`` when the model records it).
        """
        k1 = model.kappa1.copy()
        k2 = model.kappa2.copy()
        ks = np.arange(-model.N, model.N + 1)
        mid = model.eta if model.eta is not None else 0.5 * (k1 + k2)
        keep = ~np.asarray(model.closed, dtype=bool)
        if open_set is not None:
            keep &= np.isin(ks, list(open_set))
        k1 = np.where(keep, k1, mid)
        k2 = np.where(keep, k2, mid)
        trace = model.trace
        fun = None
        if trace is not None:
            fun = (lambda lam: trace.trace(lam)[0]) if hasattr(trace, "trace") else trace
        return cls(model.N, k1, k2, model.delta, fun)

    @classmethod
    def from_gaps(cls, N, gaps, delta=DEFAULT_DELTA):
        """Vacuum double points except for the gaps ``{k: (kappa1, kappa2)}``."""
        ks = np.arange(-N, N + 1)
        k1 = vacuum_lattice(ks).astype(complex)
        k2 = k1.copy()
        for k, (a, b) in gaps.items():
            if abs(int(k)) > N:
                raise ValidationError(f"gap {k} lies outside the window |k| <= {N}")
            k1[int(k) + N] = a
            k2[int(k) + N] = b
        return cls(N, k1, k2, delta)

    # -- geometry -------------------------------------------------------------

    @property
    def kappa_mid(self):
        return 0.5 * (self.kappa1 + self.kappa2)

    @property
    def half_gap(self):
        """``h/2 = (kappa_{k,1} - kappa_{k,2})/2``."""
        return 0.5 * (self.kappa1 - self.kappa2)

    @property
    def open_set(self):
        return [int(k) for k, c in zip(self.ks, self.closed) if not c]

    @property
    def genus(self):
        return len(self.open_set)

    def _i(self, k):
        k = int(k)
        if abs(k) > self.N:
            raise ValidationError(f"index {k} outside the curve window |k| <= {self.N}")
        return k + self.N

    def mid(self, k):
        return complex(self.kappa_mid[self._i(k)])

    def is_open(self, k):
        return abs(int(k)) <= self.N and not self.closed[self._i(k)]

    def disc(self, lam, skip=None):
        """``Delta^2 - 4``, or with ``skip=k`` the quotient by ``(lam - kappa_{k,1})(lam - kappa_{k,2})``."""
        lam = np.asarray(lam, dtype=complex)
        flat = lam.ravel()
        if np.any(flat == 0):
            raise ValidationError("spectral parameter must be nonzero")
        N = self.N
        m = np.atleast_1d(annulus_index(flat))
        num = (flat[:, None] - self.kappa1[None, :]) * (flat[:, None] - self.kappa2[None, :])
        den = (flat[:, None] - self.lattice[None, :]) ** 2
        if skip is not None:
            num[:, self._i(skip)] = 1.0
        inside = np.abs(m) <= N
        rows = np.nonzero(inside)[0]
        den[rows, m[rows] + N] = 1.0
        pref = np.empty(flat.shape, dtype=complex)
        if np.any(inside):
            R = vacuum_c_over_node(flat[inside], m[inside])
            pref[inside] = R * R
        if np.any(~inside):
            pref[~inside] = vacuum_c(flat[~inside]) ** 2
        val = -4.0 / flat * pref * np.prod(num / den, axis=1)
        return val.reshape(lam.shape)

    def g(self, k, lam):
        """``G_k(lam)``: the holomorphic factor of ``mu - 1/mu`` near gap ``k``."""
        w = np.sqrt(self.disc(lam, skip=k))
        ref = _reference_g(int(k))
        return np.where((w * np.conj(ref)).real >= 0, w, -w)

    def local_scale(self, k):
        """Radius of the excluded domain of ``k`` in the ``lam`` plane."""
        return float(local_radius(np.array([self.lattice[self._i(k)]]), self.delta)[0])

    def trace_at(self, lam):
        """``Delta(lam)`` of the truncated curve: the root of ``Delta^2 = disc + 4``.

        The sign follows the trace the curve was built from, or ``2 cos zeta``
        for synthetic curves.
        """
        lam = np.asarray(lam, dtype=complex)
        root = np.sqrt(self.disc(lam) + 4.0)
        if self.trace is not None:
            ref = np.asarray(self.trace(lam), dtype=complex)
        else:
            ref = 2.0 * np.cos(zeta(lam))
        return np.where(np.abs(root - ref) <= np.abs(root + ref), root, -root)

    def on_curve(self, D):
        """``D`` with each ``mu_k`` replaced by the eigenvalue of this curve closest to it."""
        if D.N > self.N:
            raise ValidationError("divisor window exceeds the curve window")
        delta = self.trace_at(D.lam)
        root = np.sqrt(delta * delta - 4.0)
        roots = np.stack([0.5 * (delta + root), 0.5 * (delta - root)])
        pick = np.argmin(np.abs(roots - D.mu[None, :]), axis=0)
        mu = np.where(pick == 0, roots[0], roots[1])
        return D.with_points(mu=mu)

    def to_dict(self):
        pair = lambda z: [float(z.real), float(z.imag)]  # noqa: E731
        return {
            "N": self.N,
            "delta": self.delta,
            "points": [
                {"k": int(k), "kappa1": pair(a), "kappa2": pair(b), "closed": bool(c)}
                for k, a, b, c in zip(self.ks, self.kappa1, self.kappa2, self.closed)
            ],
        }


# -- square-root charts -----------------------------------------------------------


def _psi_plus(a, t):
    """``Psi`` with the cut on the segment ``[-a, a]`` and ``Psi ~ t`` far away."""
    if a == 0:
        return t
    r = t / a
    return a * np.sqrt(r - 1.0) * np.sqrt(r + 1.0)


def sqrt_psi(curve, k, lam, sheet=1):
    """``Psi_k(lam)`` on the given sheet, ``Psi_k^2 = (lam - kappa_{k,1})(lam - kappa_{k,2})``.

    Sheet ``+1`` is the branch with its cut on the segment between the
    branch points and ``Psi_k ~ lam - kappa_{k,*}`` away from it; sheet
    ``-1`` is its negative (the image under the involution).

    Raises
    ------
    ValidationError
        If ``lam`` is outside the excluded domain of ``k`` or ``sheet`` is
        not ``+-1``.
    """
    if sheet not in (1, -1):
        raise ValidationError("sheet must be +1 or -1")
    lam = np.asarray(lam, dtype=complex)
    if not np.all(in_excluded_domain(lam, int(k), curve.delta)):
        raise ValidationError(f"lambda outside the excluded domain of k={k}")
    i = curve._i(k)
    return sheet * _psi_plus(complex(curve.half_gap[i]), lam - curve.kappa_mid[i])


def point_sheet(curve, k, lam, y):
    """Sheet (``+-1``) of the point with ``mu - 1/mu = y`` over ``lam`` in chart ``k``."""
    psi = y / curve.g(k, lam)
    plus = sqrt_psi(curve, k, lam, 1)
    return np.where(np.abs(psi - plus) <= np.abs(psi + plus), 1, -1)


def _chart_s(curve, k, lam, y):
    """Uniformising coordinate ``s`` (principal imaginary part) of a point."""
    i = curve._i(k)
    a = complex(curve.half_gap[i])
    t = lam - curve.kappa_mid[i]
    psi = y / curve.g(k, lam)
    if a == 0:
        return np.log(t), np.sign((psi / t).real)
    return np.log((t + psi) / a), 1.0


def _chart_lam(curve, k, s):
    i = curve._i(k)
    a = complex(curve.half_gap[i])
    if a == 0:
        return curve.kappa_mid[i] + np.exp(s)
    return curve.kappa_mid[i] + a * np.cosh(s)


# -- products Phi_{n, xi, -1} -------------------------------------------------------


def _vacuum_factor(n, lam):
    """The factor of ``4 c0`` belonging to index ``n``."""
    lam0 = vacuum_lattice(n)
    if n > 0:
        return (lam0 - lam) / (16.0 * np.pi**2 * n * n)
    if n < 0:
        return (lam - lam0) / lam
    return lam + 1.0


def phi_product(curve, xi, n, lam, skip=None):
    """``Phi_{n, xi, -1}(lam)``, optionally divided by ``lam - xi_skip``.

    ``xi`` is a window of zeros (length ``2N+1``; entry ``n`` is ignored);
    beyond the window the zeros are the vacuum lattice points, so the
    infinite product is ``4 c0`` with finitely many factors replaced::

        Phi_n = lam^rho' 4 c0(lam) / f_n(lam) prod_{|k| <= N, k != n} (lam - xi_k)/(lam - lambda_{k,0})

    where ``f_n`` is the vacuum factor of index ``n`` and ``rho' = -1``
    (``-2`` for ``n < 0``). For ``n = 0`` this is the product that matches
    the vacuum comparison function ``4 lam^-1 c0 / (lam + 1)``.
    """
    lam = np.asarray(lam, dtype=complex)
    flat = lam.ravel()
    N = curve.N
    ks = curve.ks
    xi = np.asarray(xi, dtype=complex)
    use = ks != n
    if skip is not None:
        use_num = use & (ks != skip)
    else:
        use_num = use
    num = np.where(use_num[None, :], flat[:, None] - xi[None, :], 1.0)
    den = np.where(use[None, :], flat[:, None] - curve.lattice[None, :], 1.0)
    m = np.atleast_1d(annulus_index(flat))
    R = vacuum_c_over_node(flat, m)  # c0 / (lambda_{m,0} - lam)
    pref = -4.0 * R
    lam_m = vacuum_lattice(m)
    in_use = (np.abs(m) <= N) & (m != n)
    rows = np.nonzero(in_use)[0]
    den[rows, m[rows] + N] = 1.0
    # rows where the lattice factor of c0 is not cancelled by a window factor
    keep = ~in_use & (m != n)
    pref = np.where(keep, pref * (flat - lam_m), pref)
    at_n = m == n
    fn = np.empty(flat.shape, dtype=complex)
    if n > 0:
        fn[at_n] = -1.0 / (16.0 * np.pi**2 * n * n)
    elif n < 0:
        fn[at_n] = 1.0 / flat[at_n]
    else:
        fn[at_n] = 1.0
    fn[~at_n] = _vacuum_factor(n, flat[~at_n])
    # on rows with m == n, fn holds f_n / (lam - lambda_{n,0}), which stays finite
    val = pref / fn * np.prod(num / den, axis=1)
    power = -2 if n < 0 else -1
    val = val * flat**power
    return val.reshape(lam.shape)


# -- periods ------------------------------------------------------------------------


def _cheb_nodes(n):
    theta = (np.arange(n) + 0.5) * np.pi / n
    return theta


def _segment_quadrature(curve, k, fun, n):
    """``i int_0^pi (fun/G_k)(kappa_* + (h/2) cos theta) d theta`` by Gauss-Chebyshev."""
    i = curve._i(k)
    theta = _cheb_nodes(n)
    lam = curve.kappa_mid[i] + curve.half_gap[i] * np.cos(theta)
    vals = np.asarray(fun(lam)) / curve.g(k, lam)
    return 1j * np.pi / n * np.sum(vals, axis=-1)


def _ellipse_quadrature(curve, k, fun, n, R):
    """``i int_0^{2pi} (fun/G_k)(lam(log R + i theta)) d theta`` by the trapezoid rule."""
    i = curve._i(k)
    theta = 2.0 * np.pi * np.arange(n) / n
    if curve.closed[i]:
        r = R
        lam = curve.kappa_mid[i] + r * np.exp(1j * theta)
    else:
        lam = _chart_lam(curve, k, np.log(R) + 1j * theta)
    vals = np.asarray(fun(lam)) / curve.g(k, lam)
    return 1j * 2.0 * np.pi / n * np.sum(vals, axis=-1)


def _ellipse_radius(curve, k):
    i = curve._i(k)
    scale = curve.local_scale(k)
    a = abs(curve.half_gap[i])
    if a == 0:
        return 0.25 * scale
    target = 0.3 * scale  # semi-major axis a (R + 1/R)/2 kept inside the domain
    if target <= a * 1.05:
        return 1.05
    x = target / a
    return float(min(1.5, x + np.sqrt(x * x - 1.0)))


def period_integral(curve, integrand, cycle, k, quad_n=64, tol=1e-13, max_n=4096):
    """Integral of ``omega = integrand(lam)/(mu - 1/mu) d lam`` over a cycle of gap ``k``.

    Parameters
    ----------
    curve : TruncatedCurve
    integrand : callable
        ``Phi(lam)``, vectorised; may return an array whose last axis runs
        over the quadrature nodes.
    cycle : {"A", "segment", "A-ellipse"}
        ``"A"``: the A-cycle as twice the segment integral (Gauss-Chebyshev
        at open gaps, the residue at closed gaps). ``"segment"``: the lift
        of the straight segment from ``kappa_{k,1}`` to ``kappa_{k,2}`` on
        sheet ``+1``. ``"A-ellipse"``: the A-cycle by the trapezoid rule on
        a confocal ellipse (a circle at closed gaps), an independent route.
    quad_n : int
        Initial number of nodes; doubled until two successive values agree.

    Raises
    ------
    ConvergenceError
        If the node count exceeds ``max_n``; the message lists the history.
    """
    if cycle not in ("A", "segment", "A-ellipse"):
        raise ValidationError(f"unknown cycle {cycle!r}")
    i = curve._i(k)
    if cycle == "A" and curve.closed[i]:
        mid = np.array([curve.kappa_mid[i]])
        vals = np.asarray(integrand(mid)) / curve.g(k, mid)
        return 2j * np.pi * vals[..., 0]
    if cycle == "segment" and curve.closed[i]:
        return 0.0 * np.asarray(integrand(np.array([curve.kappa_mid[i]])))[..., 0]
    if cycle == "A-ellipse":
        R = _ellipse_radius(curve, k)

        def rule(n):
            return _ellipse_quadrature(curve, k, integrand, n, R)

    else:
        factor = 2.0 if cycle == "A" else 1.0

        def rule(n):
            return factor * _segment_quadrature(curve, k, integrand, n)

    n = int(quad_n)
    prev = rule(n)
    history = []
    while True:
        n *= 2
        cur = rule(n)
        err = np.max(np.abs(cur - prev))
        history.append((n, float(err)))
        if err <= tol * max(1.0, float(np.max(np.abs(cur)))):
            return cur
        if n >= max_n:
            raise ConvergenceError(f"period quadrature did not converge: {history}")
        prev = cur


# -- canonical forms ----------------------------------------------------------------


@dataclass
class OneFormModel:
    """A member ``omega_n = Phi_n/(mu - 1/mu) d lam`` of the canonical basis.

    ``Phi_n = sum_l scales[l] Phi_{l, xis[l], -1}``; ``xi`` is the zero
    window of the product with index ``n`` itself (``nan`` at ``n``).

    Attributes
    ----------
    n : int
    xi : ndarray
    scales : dict
        ``s_{n,l}``; ``scales[n]`` is ``s_{n,n}``.
    xis : dict
        Zero windows of every product in the combination.
    iterations : int
        Fixed-point sweeps used for the product with index ``n``.
    residual : float
        Last fixed-point step in units of the gap widths.
    rho : int
        Exponent of ``lam`` in the products (always ``-1``).
    """

    n: int
    xi: np.ndarray
    scales: dict
    xis: dict
    iterations: int = 0
    residual: float = 0.0
    ratios: list = field(default_factory=list)
    rho: int = -1

    def phi(self, curve, lam, skip=None):
        """``Phi_n(lam)``; with ``skip=k`` (a closed gap) divided by ``lam - kappa_{k,*}``."""
        lam = np.asarray(lam, dtype=complex)
        out = np.zeros(lam.shape, dtype=complex)
        for ell, s in self.scales.items():
            out = out + s * phi_product(curve, self.xis[ell], ell, lam, skip=skip)
        return out

    def __call__(self, curve, lam, y):
        """Coefficient ``Phi_n(lam)/y`` of ``d lam`` at the point with ``mu - 1/mu = y``."""
        return self.phi(curve, lam) / y


def _moment_map(curve, xi, n, free, quad_n):
    new = xi.copy()
    for k in free:
        i = curve._i(k)
        mid = curve.kappa_mid[i]

        def f(lam, k=k):
            base = phi_product(curve, xi, n, lam, skip=k)
            return np.stack([base, (lam - mid) * base])

        p0, p1 = period_integral(curve, f, "A", k, quad_n)
        if p0 == 0:
            raise DegenerateError(f"vanishing moment denominator at gap {k}")
        new[i] = mid + p1 / p0
    return new


def _fixed_point(curve, n, fixed_xi, free, C_xi, tol, max_iter, quad_n):
    xi = fixed_xi.copy()
    if not free:
        return xi, 0, 0.0, []
    widths = np.array([abs(curve.kappa1[curve._i(k)] - curve.kappa2[curve._i(k)]) for k in free])
    idx = np.array([curve._i(k) for k in free])
    ratios = []
    prev = None
    bad = 0
    for it in range(1, max_iter + 1):
        new = _moment_map(curve, xi, n, free, quad_n)
        step = float(np.max(np.abs(new[idx] - xi[idx]) / widths))
        dist = np.abs(new[idx] - curve.kappa_mid[idx]) / widths
        if np.any(dist > C_xi):
            raise ContractionError(
                f"form {n}: zero left the ball |xi - kappa_*| <= {C_xi} |gap| (at {dist.max():.3g})"
            )
        xi = new
        if prev is not None and prev > 0:
            ratios.append(step / prev)
            bad = bad + 1 if step >= prev else 0
            if bad >= 3:
                raise ContractionError(f"form {n}: moment map does not contract (ratios {ratios[-3:]})")
        if step <= tol:
            return xi, it, step, ratios
        prev = step
    raise ContractionError(f"form {n}: no convergence in {max_iter} sweeps (last step {step:.3g})")


def a_period_matrix(curve, forms, ks=None, quad_n=64):
    """``P[i, j] = int_{A_{ks[i]}} omega_{forms[j].n}``."""
    if ks is None:
        ks = [f.n for f in forms]
    P = np.empty((len(ks), len(forms)), dtype=complex)
    for i, k in enumerate(ks):
        vals = period_integral(curve, lambda lam: np.stack([f.phi(curve, lam) for f in forms]), "A", k, quad_n)
        P[i] = vals
    return P


def canonical_one_forms(curve, C_xi=C_XI, tol=1e-12, ns=None, compact=None, quad_n=64, max_iter=100):
    """Canonical basis ``omega_n`` with ``int_{A_k} omega_n = delta_{kn}``.

    For each ``n`` the zeros of ``Phi_{n, xi, -1}`` at the open gaps outside
    the compact set are moved by the moment fixed point

        xi_k <- kappa_{k,*} + int_{A_k} (lam - kappa_{k,*}) Phi_{n;k} / int_{A_k} Phi_{n;k},

    with ``Phi_{n;k} = Phi_n/(lam - xi_k)``, which makes the A-periods at
    those gaps vanish; closed gaps have ``xi_k = kappa_{k,*}`` and zero
    A-period automatically. At the open gaps of the compact set the zeros
    stay at ``kappa_{k,*}``, and a linear combination with the products of
    the compact indices restores the normalisation there.

    Parameters
    ----------
    curve : TruncatedCurve
    C_xi : float
        Ball radius for the zeros in units of the gap width.
    tol : float
        Fixed-point tolerance in units of the gap widths.
    ns : iterable of int, optional
        Indices of the forms (default: the whole window).
    compact : iterable of int, optional
        Open gaps whose zeros are held fixed. By default the fixed point is
        tried on all open gaps, and the compact set grows to the open gaps
        with ``|k| <= 1, 2, 4, ...`` while the iteration fails to contract.

    Returns
    -------
    list of OneFormModel

    Raises
    ------
    ContractionError
        If no compact set makes the iteration contract.
    DegenerateError
        If the normalisation system is singular.
    """
    if ns is None:
        ns = [int(k) for k in curve.ks]
    if compact is not None:
        return _canonical(curve, C_xi, tol, ns, sorted(set(int(k) for k in compact)), quad_n, max_iter)
    opens = curve.open_set
    bound = 0
    last = None
    while True:
        comp = [k for k in opens if abs(k) <= bound] if bound else []
        try:
            return _canonical(curve, C_xi, tol, ns, comp, quad_n, max_iter)
        except ContractionError as exc:
            last = exc
        if all(abs(k) <= bound for k in opens):
            raise last
        bound = 1 if bound == 0 else 2 * bound


def _canonical(curve, C_xi, tol, ns, comp, quad_n, max_iter):
    opens = curve.open_set
    for k in comp:
        if not curve.is_open(k):
            raise ValidationError(f"compact index {k} is not an open gap")
    base = curve.kappa_mid.copy()

    cache = {}

    def tilde(ell):
        if ell not in cache:
            free = [k for k in opens if k not in comp and k != ell]
            xi0 = base.copy()
            xi0[curve._i(ell)] = np.nan
            xi, it, res, ratios = _fixed_point(curve, ell, np.where(np.isnan(xi0), 0, xi0), free, C_xi, tol, max_iter, quad_n)
            xi = xi.astype(complex)
            xi[curve._i(ell)] = np.nan
            cache[ell] = (xi, it, res, ratios)
        return cache[ell]

    def periods(ell, ks):
        xi = tilde(ell)[0]
        fill = np.where(np.isnan(xi), 0, xi)
        return np.array(
            [period_integral(curve, lambda lam: phi_product(curve, fill, ell, lam), "A", k, quad_n) for k in ks]
        )

    M = None
    if comp:
        M = np.column_stack([periods(ell, comp) for ell in comp])
        if np.linalg.cond(M) > 1e12:
            raise DegenerateError("normalisation system for the compact gaps is singular")
    forms = []
    for n in ns:
        n = int(n)
        xi, it, res, ratios = tilde(n) if n not in comp else tilde(n)
        fill = lambda a: np.where(np.isnan(a), 0, a)  # noqa: E731
        xis = {}
        if n in comp:
            e = np.zeros(len(comp), dtype=complex)
            e[comp.index(n)] = 1.0
            s = np.linalg.solve(M, e)
            scales = {ell: complex(v) for ell, v in zip(comp, s)}
            for ell in comp:
                xis[ell] = fill(tilde(ell)[0])
        else:
            ann = periods(n, [n])[0]
            if ann == 0:
                raise DegenerateError(f"form {n} has vanishing A-period")
            snn = 1.0 / ann
            scales = {n: complex(snn)}
            xis[n] = fill(xi)
            if comp:
                rhs = -snn * periods(n, comp)
                s = np.linalg.solve(M, rhs)
                for ell, v in zip(comp, s):
                    scales[ell] = complex(v)
                    xis[ell] = fill(tilde(ell)[0])
        forms.append(OneFormModel(n, xi, scales, xis, it, res, ratios))
    return forms


def monomial_one_form(curve, n, quad_n=64):
    """The form ``omega_n`` by linear algebra on a monomial basis.

    With ``O`` the open gaps other than ``n``, every square-integrable form
    that vanishes at the remaining double points is ``P(lam) B_n(lam)/(mu -
    1/mu) d lam`` with ``B_n = lam^q Phi_{n, kappa_*, -1} / prod_{k in O} (lam -
    kappa_{k,*})`` and ``P`` a Laurent polynomial spanned by ``lam^j``,
    ``-q <= j <= p``, where ``p`` counts the indices ``k >= 0`` and ``q`` the
    indices ``k < 0`` in ``O``. The coefficients solve the square system
    ``int_{A_k} omega = delta_{kn}`` for ``k in O + {n}``. This construction
    shares only the quadrature with :func:`canonical_one_forms`.

    Returns
    -------
    callable
        ``lam -> Phi_n(lam)``.
    """
    O = [k for k in curve.open_set if k != n]
    p = sum(1 for k in O if k >= 0)
    q = sum(1 for k in O if k < 0)
    powers = list(range(-q, p + 1))
    mids = curve.kappa_mid
    xi = mids.copy()

    def base(lam):
        out = phi_product(curve, xi, n, lam)
        for k in O:
            out = out / (lam - mids[curve._i(k)])
        return out

    def basis(lam):
        b = base(lam) * lam**q
        return np.stack([lam**j * b for j in powers])

    rows = O + [n]
    A = np.array([period_integral(curve, basis, "A", k, quad_n) for k in rows])
    rhs = np.zeros(len(rows), dtype=complex)
    rhs[-1] = 1.0
    if np.linalg.cond(A) > 1e13:
        raise DegenerateError("monomial normalisation system is singular")
    coef = np.linalg.solve(A, rhs)

    def phi(lam):
        lam = np.asarray(lam, dtype=complex)
        return np.tensordot(coef, basis(lam), axes=1)

    return phi


# -- Abel map -----------------------------------------------------------------------


@dataclass
class AbelVector:
    """Jacobi coordinates ``phi_n`` of a divisor relative to an origin divisor.

    Attributes
    ----------
    ns : list of int
    phi : ndarray
    origin : Divisor
    windings : dict
        Per divisor index, the number of extra A-loops added to the path.
    """

    ns: list
    phi: np.ndarray
    origin: Divisor
    windings: dict = field(default_factory=dict)


def _y(D, i):
    mu = D.mu[i]
    return mu - 1.0 / mu


def _open_ends(curve, k, lam0, y0, lam1, y1):
    """Chart coordinates of both ends; the second is the lift closest to the first.

    The path ``gamma_k`` is the straight segment between them in the
    uniformising coordinate ``s``; the two candidate lifts are ``2 pi``
    apart in ``Im s``, and a tie means the path would run through a branch
    point.
    """
    s0, _ = _chart_s(curve, k, lam0, y0)
    s1, _ = _chart_s(curve, k, lam1, y1)
    d = s1.imag - s0.imag
    turns = np.round(d / (2.0 * np.pi))
    rem = d - 2.0 * np.pi * turns
    if abs(abs(rem) - np.pi) < 1e-9:
        raise ValidationError(f"the path of point {k} runs through a branch point")
    return complex(s0), complex(s1 - 2j * np.pi * turns)


def _chart_integral(curve, k, forms, s0, s1, sign, nodes):
    x, w = gauss_legendre_01(nodes)
    s = s0 + x * (s1 - s0)
    lam = _chart_lam(curve, k, s)
    if not np.all(in_excluded_domain(lam, int(k), curve.delta)):
        raise ValidationError(f"the Abel path of point {k} leaves its excluded domain")
    g = curve.g(k, lam)
    vals = np.stack([f.phi(curve, lam) for f in forms]) / g
    return sign * (s1 - s0) * np.sum(w * vals, axis=-1)


def _closed_sheet(curve, k, lam, y):
    """Sheet of a point near a double point, or 0 when it sits on the node."""
    mid = curve.mid(k)
    t = lam - mid
    scale = curve.local_scale(k)
    if abs(t) <= NODE_TOL * scale:
        return 0
    return 1 if (y / (curve.g(k, lam) * t)).real >= 0 else -1


def _closed_segment(curve, k, forms, lam0, lam1, sign, nodes):
    if lam0 == lam1:
        return np.zeros(len(forms), dtype=complex)
    x, w = gauss_legendre_01(nodes)
    lam = lam0 + x * (lam1 - lam0)
    if not np.all(in_excluded_domain(lam, int(k), curve.delta)):
        raise ValidationError(f"the Abel path of point {k} leaves its excluded domain")
    vals = np.stack([f.phi(curve, lam, skip=k) for f in forms]) / curve.g(k, lam)
    return sign * (lam1 - lam0) * np.sum(w * vals, axis=-1)


def _point_increment(curve, forms, k, lam0, y0, lam1, y1, loops, nodes):
    i = curve._i(k)
    if curve.closed[i]:
        # omega_n = +-Phi_{n;k}/G_k d lam is holomorphic at the node, so the
        # straight path is integrated in lam and loops contribute nothing
        if lam0 == lam1:
            return np.zeros(len(forms), dtype=complex)
        sg0 = _closed_sheet(curve, k, lam0, y0)
        sg1 = _closed_sheet(curve, k, lam1, y1)
        if sg0 and sg1 and sg0 != sg1:
            # the point passes from one sheet to the other through the node,
            # the limit of a path through a shrinking cut
            mid = curve.mid(k)
            d = lam1 - lam0
            tc = float(np.clip(((mid - lam0) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0))
            lc = lam0 + tc * d
            return _closed_segment(curve, k, forms, lam0, lc, sg0, nodes) + _closed_segment(
                curve, k, forms, lc, lam1, sg1, nodes
            )
        return _closed_segment(curve, k, forms, lam0, lam1, sg0 or sg1 or 1, nodes)
    if lam0 == lam1 and y0 == y1 and loops == 0:
        return np.zeros(len(forms), dtype=complex)
    s0, s1 = _open_ends(curve, k, lam0, y0, lam1, y1)
    s1 = s1 + 2j * np.pi * loops
    return _chart_integral(curve, k, forms, s0, s1, 1.0, nodes)


def abel_map(curve, forms, D, D0, loops=None, nodes=48):
    """Jacobi coordinates ``phi_n(D) = sum_k int_{gamma_k} omega_n`` relative to ``D0``.

    Each ``gamma_k`` is the lift of the straight segment from the point of
    ``D0`` to the point of ``D`` (sheets followed continuously), followed by
    ``loops[k]`` A-cycles of gap ``k``. Points sitting at a double point on
    both divisors are stationary and contribute nothing.

    Raises
    ------
    ValidationError
        If a path meets a branch point or a double point, leaves its
        excluded domain, or ends on the other sheet.
    """
    if D.N != D0.N:
        raise ValidationError("divisors must share the window")
    if D.N > curve.N:
        raise ValidationError("divisor window exceeds the curve window")
    loops = dict(loops or {})
    total = np.zeros(len(forms), dtype=complex)
    for idx, k in enumerate(D.ks):
        k = int(k)
        lam0, lam1 = D0.lam[idx], D.lam[idx]
        y0, y1 = _y(D0, idx), _y(D, idx)
        m = int(loops.get(k, 0))
        if lam0 == lam1 and y0 == y1 and m == 0:
            continue
        total += _point_increment(curve, forms, k, lam0, y0, lam1, y1, m, nodes)
    return AbelVector([f.n for f in forms], total, D0, loops)


def abel_along_flow(curve, forms, D0, direction, times, nodes=32, **flow_kw):
    """Jacobi coordinates of ``D(t)`` relative to ``D0`` at increasing ``times``.

    The increments are accumulated over the accepted steps of the flow, so
    windings around the gaps are followed.
    """
    from .flows import integrate_flow

    times = np.asarray(times, dtype=float)
    out = np.zeros((times.size, len(forms)), dtype=complex)
    D = D0
    t_prev = 0.0
    acc = np.zeros(len(forms), dtype=complex)
    for j, t in enumerate(times):
        if t != t_prev:
            st = integrate_flow(D, direction, t - t_prev, **flow_kw)
            lam_path = st.lam_path
            mu_path = st.mu_path.copy()
            mu_path[-1] = st.divisor.mu
            for a in range(len(lam_path) - 1):
                for idx, k in enumerate(D.ks):
                    l0, l1 = lam_path[a, idx], lam_path[a + 1, idx]
                    if l0 == l1:
                        continue
                    y0 = mu_path[a, idx] - 1.0 / mu_path[a, idx]
                    y1 = mu_path[a + 1, idx] - 1.0 / mu_path[a + 1, idx]
                    acc = acc + _point_increment(curve, forms, int(k), l0, y0, l1, y1, 0, nodes)
            D = st.divisor
            t_prev = t
        out[j] = acc
    return out


def flow_slope_check(curve, forms, D0, direction="x", h=1e-3, **flow_kw):
    """Central difference ``(phi(D(h)) - phi(D(-h)))/(2h)`` of the Jacobi coordinates."""
    from .flows import integrate_flow

    plus = integrate_flow(D0, direction, h, **flow_kw).divisor
    minus = integrate_flow(D0, direction, -h, **flow_kw).divisor
    up = abel_map(curve, forms, plus, D0).phi
    down = abel_map(curve, forms, minus, D0).phi
    return (up - down) / (2.0 * h)
