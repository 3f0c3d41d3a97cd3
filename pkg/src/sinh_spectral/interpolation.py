"""Holomorphic functions on the punctured plane from zeros or from values.

Both kernels work on a finite window ``|k| <= N`` of nodes; beyond the
window the nodes are the vacuum lattice points and the data are those of
the vacuum. The vacuum part is never expanded as a product: it is folded
into the closed form ``c0(lam) = sqrt(lam) sin zeta(lam)``, and only the
window deviation factors ``(lam_k - lam) / (lambda_{k,0} - lam)`` are
multiplied explicitly.

Near a vacuum lattice point ``lambda_{m,0}`` both ``c0`` and the matching
denominator vanish; the quotient is evaluated by
:func:`~sinh_spectral.vacuum.vacuum_c_over_node`, which keeps every
evaluation (including evaluation exactly at a node) free of cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonTameError, ValidationError
from .numerics import cauchy_derivatives
from .vacuum_geometry import annulus_index, vacuum_c, vacuum_c_over_node, vacuum_lattice, zeta

__all__ = [
    "ProductC",
    "ValueInterpolant",
    "ValueSequence",
    "TailModel",
    "ZeroSequence",
    "fit_tail",
    "inf_product",
    "inf_sum",
    "inf_sum_bound",
    "interpolate_values",
    "product_c",
    "product_discriminant",
    "tau_from_zeros",
    "vacuum_cos",
    "vacuum_two_cos",
]


def vacuum_cos(lam):
    """``cos zeta(lam)``: the vacuum diagonal entry (branch independent)."""
    return np.cos(zeta(lam))


def vacuum_two_cos(lam):
    """``2 cos zeta(lam)``: the vacuum trace."""
    return 2.0 * np.cos(zeta(lam))


# number of explicit tail factors summed for a fitted tail
TAIL_TERMS = 1024


@dataclass(frozen=True)
class TailModel:
    """Asymptotic position of the zeros outside the window.

    For ``k > N`` the zeros sit at ``lambda_{k,0} + plus[0] + plus[1]/k^2``
    and for ``k < -N`` at ``1 / (lambda_{|k|,0} + minus[0] + minus[1]/k^2)``.
    The zero model is the vacuum tail.
    """

    plus: tuple = (0.0, 0.0)
    minus: tuple = (0.0, 0.0)

    @property
    def is_vacuum(self):
        return not (any(self.plus) or any(self.minus))

    def zeros(self, ks):
        """Model zeros for indices ``ks`` (all with ``|k| >= 1``)."""
        ks = np.asarray(ks)
        s = vacuum_lattice(np.abs(ks))
        k2 = ks.astype(float) ** 2
        pos = s + self.plus[0] + self.plus[1] / k2
        neg = 1.0 / (s + self.minus[0] + self.minus[1] / k2)
        return np.where(ks > 0, pos, neg)


def fit_tail(lam, N, points=6):
    """Fit a :class:`TailModel` to the outermost ``points`` zeros on each side.

    Least squares for ``shift_k = rho + beta / k^2`` with
    ``shift_k = lam_k - lambda_{k,0}`` (``k > 0``) and
    ``shift_k = 1/lam_k - lambda_{|k|,0}`` (``k < 0``). Windows with
    ``N < points + 2`` keep the vacuum tail.
    """
    lam = np.asarray(lam, dtype=complex)
    if N < points + 2:
        return TailModel()
    k = np.arange(N - points + 1, N + 1)
    A = np.stack([np.ones(points), 1.0 / k.astype(float) ** 2], axis=1)
    s = vacuum_lattice(k)
    shift_p = lam[N + k] - s
    shift_m = 1.0 / lam[N - k] - s
    plus = np.linalg.lstsq(A.astype(complex), shift_p, rcond=None)[0]
    minus = np.linalg.lstsq(A.astype(complex), shift_m, rcond=None)[0]
    return TailModel(tuple(complex(v) for v in plus), tuple(complex(v) for v in minus))


@dataclass(frozen=True, eq=False)
class ZeroSequence:
    """Zeros ``lam_k`` for ``k = -N..N``; model tail beyond the window.

    The tail defaults to the vacuum lattice. A fitted :class:`TailModel`
    accounts for the slow drift of the zeros and removes most of the
    truncation error of the product.
    """

    N: int
    lam: np.ndarray
    tail: TailModel = TailModel()

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=complex)
        if lam.shape != (2 * self.N + 1,):
            raise ValidationError("zero window must have length 2N+1")
        if np.any(lam == 0):
            raise ValidationError("zeros must be nonzero")
        object.__setattr__(self, "lam", lam)

    @property
    def ks(self):
        return np.arange(-self.N, self.N + 1)

    @property
    def lattice(self):
        return vacuum_lattice(self.ks)

    def tail_log_factors(self, lam, skip=None, terms=TAIL_TERMS):
        """``sum_{|k|>N} log((lam_k - lam) / (lambda_{k,0} - lam))`` over the model tail.

        ``skip`` holds, per point, an index whose factor is left out (0 for
        none). The remainder beyond ``terms`` factors per side is added in
        its leading order form.
        """
        lam = np.asarray(lam, dtype=complex)
        if self.tail.is_vacuum:
            return np.zeros(lam.shape, dtype=complex)
        k = np.arange(self.N + 1, self.N + terms + 1)
        ks = np.concatenate([k, -k])
        model = self.tail.zeros(ks)
        lat = vacuum_lattice(ks)
        den = lat[None, :] - lam[:, None]
        eps = (model - lat)[None, :] / den
        if skip is not None:
            hit = ks[None, :] == np.asarray(skip)[:, None]
            eps = np.where(hit, 0.0, eps)
        total = np.sum(np.log1p(eps), axis=1)
        # leading remainder: each side contributes shift / lambda_{k,0} per
        # factor, except that the negative side vanishes for lam != 0
        rem = 1.0 / (16.0 * np.pi**2 * (self.N + terms + 0.5))
        total += rem * (self.tail.plus[0] - np.where(lam == 0, self.tail.minus[0], 0.0))
        return total


@dataclass(frozen=True, eq=False)
class ValueSequence:
    """Nodes ``lam_k`` with target values ``v_k`` for ``k = -N..N``.

    Only simple nodes are supported: a repeated node raises
    :class:`~sinh_spectral.errors.NonTameError`.
    """

    N: int
    lam: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=complex)
        v = np.asarray(self.values, dtype=complex)
        if lam.shape != (2 * self.N + 1,) or v.shape != lam.shape:
            raise ValidationError("value window must have length 2N+1")
        d = np.abs(lam[:, None] - lam[None, :]) + np.eye(lam.size)
        if np.any(d == 0):
            raise NonTameError("repeated interpolation node; only simple nodes are supported")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "values", v)

    @property
    def multiplicity(self):
        return np.ones(self.lam.size, dtype=int)


def tau_from_zeros(z, sign=1):
    """``tau = sign * (prod_k lambda_{k,0} / lam_k)^{1/2}`` over the window.

    Examples
    --------
    >>> z = ZeroSequence(1, vacuum_lattice([-1, 0, 1]) * [1, 1, 2])
    >>> round(abs(tau_from_zeros(z)) ** 2, 12)
    0.5
    """
    if sign not in (1, -1):
        raise ValidationError("sign must be +1 or -1")
    if np.any(z.lam == 0):
        raise ValidationError("zeros must be nonzero")
    prod = np.prod(z.lattice / z.lam)
    return complex(sign * np.sqrt(prod))


class ProductC:
    """The function ``c`` with prescribed zeros, normalised like ``tau c0``.

    ``c(lam) = tau c0(lam) prod_{|k|<=N} (lam_k - lam) / (lambda_{k,0} - lam)``.

    Parameters
    ----------
    zeros : ZeroSequence
    sign : {1, -1}
        Sign of ``tau``; flipping it flips ``c``.
    tau : complex, optional
        Overrides the value computed from the zeros (used to keep the sign
        continuous along a flow).
    """

    def __init__(self, zeros, sign=1, tau=None):
        self.zeros = zeros
        self.sign = sign
        if tau is None:
            tau = tau_from_zeros(zeros, sign)
            if not zeros.tail.is_vacuum:
                # tail factors of prod lambda_{k,0} / lam_k
                tau = tau * np.exp(-0.5 * zeros.tail_log_factors(np.zeros(1))[0])
        self.tau = complex(tau)
        self.nodes = zeros.lam
        self.lattice = zeros.lattice
        self.ks = zeros.ks
        self._cprime = None

    def _factors(self, lam):
        """Pieces of the folded product at points ``lam`` (1-d array).

        Returns ``(pref, r, dprime)`` such that ``c = pref * prod_k r_k``
        and ``c / (lam - lam_j) = -pref * prod_{k != j} r_k / dprime_j``.
        """
        lam = np.asarray(lam, dtype=complex)
        N = self.zeros.N
        m = np.atleast_1d(annulus_index(lam))
        R = vacuum_c_over_node(lam, m)
        num = self.nodes[None, :] - lam[:, None]
        den = self.lattice[None, :] - lam[:, None]
        inside = np.abs(m) <= N
        rows = np.nonzero(inside)[0]
        den[rows, m[rows] + N] = 1.0
        pref = self.tau * R
        outside = ~inside
        if self.zeros.tail.is_vacuum:
            if np.any(outside):
                pref[outside] *= vacuum_lattice(m[outside]) - lam[outside]
        else:
            skip = np.where(outside, m, 0)
            pref *= np.exp(self.zeros.tail_log_factors(lam, skip))
            if np.any(outside):
                pref[outside] *= self.zeros.tail.zeros(m[outside]) - lam[outside]
        return pref, num / den, den

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        flat = lam.ravel()
        pref, r, _ = self._factors(flat)
        return (pref * np.prod(r, axis=1)).reshape(lam.shape)

    def divided(self, lam):
        """``Q_j(lam) = c(lam) / (lam - lam_j)`` for every window node ``j``.

        Shape ``lam.shape + (2N+1,)``; removable singularities are resolved.
        """
        lam = np.asarray(lam, dtype=complex)
        flat = lam.ravel()
        pref, r, den = self._factors(flat)
        n, W = r.shape
        # products of r with one factor left out, via prefix and suffix products
        pre = np.ones((n, W + 1), dtype=complex)
        suf = np.ones((n, W + 1), dtype=complex)
        pre[:, 1:] = np.cumprod(r, axis=1)
        suf[:, :-1] = np.cumprod(r[:, ::-1], axis=1)[:, ::-1]
        excl = pre[:, :-1] * suf[:, 1:]
        out = -pref[:, None] * excl / den
        return out.reshape(lam.shape + (W,))

    def derivative_at_nodes(self):
        """``c'(lam_j)`` for every window node, from the product formula."""
        if self._cprime is None:
            Q = self.divided(self.nodes)
            self._cprime = np.diagonal(Q).copy()
        return self._cprime

    def derivatives(self, lam, order):
        """``c`` and its derivatives at arbitrary points (Cauchy integrals)."""
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        return cauchy_derivatives(self, lam, order)


def product_c(z, sign, lam):
    """Evaluate ``c`` with zeros ``z`` and sign ``sign`` at ``lam``."""
    return ProductC(z, sign)(lam)


class ValueInterpolant:
    """The holomorphic function with prescribed values at the zeros of ``c``.

    ``f(lam) = f0(lam) + sum_j (v_j - f0(lam_j)) c(lam) / (c'(lam_j) (lam - lam_j))``

    where ``f0`` is the vacuum function taking the tail values at the
    vacuum lattice points. The sum over the window is exact; the tail
    contributes nothing because ``c`` vanishes there and ``f0`` already
    has the right values.

    Parameters
    ----------
    c : ProductC
    values : array_like
        ``v_j`` for the window nodes.
    f0 : callable
        Vacuum function, e.g. :func:`vacuum_cos` or :func:`vacuum_two_cos`.
    cprime : array_like, optional
        ``c'(lam_j)``; computed from the product formula when omitted.
    min_cond : float
        Relative threshold on ``|c'(lam_j)|`` below which the divisor is
        treated as non-tame.
    """

    def __init__(self, c, values, f0, cprime=None, min_cond=1e-12):
        self.c = c
        self.values = np.asarray(values, dtype=complex)
        if self.values.shape != c.nodes.shape:
            raise ValidationError("one value per node is required")
        self.f0 = f0
        cp = c.derivative_at_nodes() if cprime is None else np.asarray(cprime, dtype=complex)
        ref = np.abs(_vacuum_cprime(c.lattice))
        self.condition = np.abs(cp) / ref
        if np.any(self.condition < min_cond) or not np.all(np.isfinite(cp)):
            bad = c.ks[~(self.condition >= min_cond)]
            raise NonTameError(f"c' nearly vanishes at nodes k={bad.tolist()} (divisor not tame)")
        self.weights = (self.values - f0(c.nodes)) / cp

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        Q = self.c.divided(lam)
        return self.f0(lam) + Q @ self.weights

    def derivatives(self, lam, order):
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        return cauchy_derivatives(self, lam, order)


def _vacuum_cprime(lattice):
    """``|c0'|`` at the lattice points, ``|1 - 1/lam| / 8``."""
    lam = np.asarray(lattice, dtype=complex)
    return np.abs(0.125 * (1.0 - 1.0 / lam))


def interpolate_values(v, c, cprime, lam, f0=vacuum_cos):
    """Value interpolation at ``lam`` (functional form of :class:`ValueInterpolant`).

    ``v`` is a :class:`ValueSequence` whose nodes must be the zeros of ``c``.
    """
    if not np.allclose(v.lam, c.nodes, rtol=0, atol=0):
        raise ValidationError("value nodes must coincide with the zeros of c")
    return ValueInterpolant(c, v.values, f0, cprime)(lam)


def product_discriminant(curve, lam, tail="fit"):
    """``Delta^2 - 4`` from the branch points of a curve.

    ``-(4/lam) c0(lam)^2 prod_{|k|<=N} (lam - kappa_{k,1})(lam - kappa_{k,2}) /
    (lam - lambda_{k,0})^2``, with the square of the vacuum quotient taken
    at the nearest lattice point so that evaluation near the lattice is
    stable.

    With ``tail="fit"`` (the default) the double points beyond the window
    follow the drift of the outermost gap midpoints (:func:`fit_tail`)
    instead of sitting at the lattice, which removes the leading
    truncation error.
    """
    if tail not in ("vacuum", "fit"):
        raise ValidationError(f"unknown tail model {tail!r}")
    lam = np.asarray(lam, dtype=complex)
    flat = lam.ravel()
    if np.any(flat == 0):
        raise ValidationError("spectral parameter must be nonzero")
    N = curve.N
    ks = np.arange(-N, N + 1)
    lat = vacuum_lattice(ks)
    m = np.atleast_1d(annulus_index(flat))
    R = vacuum_c_over_node(flat, m)
    num = (flat[:, None] - curve.kappa1[None, :]) * (flat[:, None] - curve.kappa2[None, :])
    den = (flat[:, None] - lat[None, :]) ** 2
    inside = np.abs(m) <= N
    rows = np.nonzero(inside)[0]
    den[rows, m[rows] + N] = 1.0
    pref = R * R
    out_rows = ~inside
    model = TailModel() if tail == "vacuum" else fit_tail(0.5 * (curve.kappa1 + curve.kappa2), N)
    if model.is_vacuum:
        if np.any(out_rows):
            pref[out_rows] = vacuum_c(flat[out_rows]) ** 2
    else:
        z = ZeroSequence(N, lat, model)
        pref = pref * np.exp(2.0 * z.tail_log_factors(flat, np.where(out_rows, m, 0)))
        if np.any(out_rows):
            pref[out_rows] *= (model.zeros(m[out_rows]) - flat[out_rows]) ** 2
    val = -4.0 / flat * pref * np.prod(num / den, axis=1)
    return val.reshape(lam.shape)


def inf_product(a):
    """``prod (1 + a_k)`` over a window and the bound ``exp(||a||_1) - 1``.

    Examples
    --------
    >>> p, bound = inf_product([1.0, -0.5])
    >>> abs(p), round(bound, 4)
    (1.0, 3.4817)
    """
    a = np.asarray(a, dtype=complex)
    if np.any(1.0 + a == 0):
        raise ValidationError("a factor 1 + a_k vanishes")
    return complex(np.prod(1.0 + a)), float(np.expm1(np.sum(np.abs(a))))


def inf_sum(a, nodes, lam):
    """``sum_k a_k / (lam - lam_k)`` over a window."""
    lam = np.asarray(lam, dtype=complex)
    return (1.0 / (lam[..., None] - np.asarray(nodes)[None, :])) @ np.asarray(a, dtype=complex)


def inf_sum_bound(a, n_max):
    """Bounding sequence ``r_n = (|a_k| / k * 1/|k|)_n`` for ``n = 1..n_max``.

    ``a`` holds ``a_k`` for ``k = 1..K``; ``1/0`` is read as 1. Up to a
    constant, ``sum_k |a_k| / |lam - lam_k|`` is bounded by ``r_n`` on the
    annulus ``S_n`` outside the excluded domains.
    """
    a = np.abs(np.asarray(a, dtype=complex))
    K = a.size
    ks = np.arange(1, K + 1)
    r = np.empty(n_max)
    for n in range(1, n_max + 1):
        diff = np.abs(n - ks)
        inv = np.where(diff == 0, 1.0, 1.0 / np.maximum(diff, 1))
        r[n - 1] = np.sum(a / ks * inv)
    return r
