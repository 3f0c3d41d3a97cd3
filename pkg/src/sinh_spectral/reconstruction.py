"""Monodromy from a tame spectral divisor.

Given the divisor points ``(lam_k, mu_k)`` the lower-left entry ``c`` is
the product with zeros ``lam_k``, the trace ``Delta`` and the entry ``d``
are the interpolants of ``mu_k + 1/mu_k`` and ``1/mu_k`` at those zeros,
``a = Delta - d`` and ``b = (ad - 1)/c``. The quotient for ``b`` has
removable singularities at the ``lam_k``; in a small disc around each of
them ``b`` is replaced by its quadratic Taylor polynomial, whose
coefficients come from a Cauchy integral on a circle well away from the
node.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateError, ValidationError
from .interpolation import ProductC, ValueInterpolant, ZeroSequence, fit_tail, tau_from_zeros, vacuum_cos, vacuum_two_cos
from .monodromy import MonodromyFunction
from .numerics import cauchy_derivatives, local_radius
from .spectral_extract import divisor_window_norms
from .vacuum_geometry import sample_outside_domains

__all__ = [
    "ReconstructedMonodromy",
    "interpolation_nodes",
    "reconstruct_monodromy",
    "round_trip_deviation",
    "sign_matching_potential",
    "trace_formula_check",
    "trace_from_divisor",
]

# radius of the Taylor discs around the nodes, relative to the local scale
NODE_DISC = 1e-3


# extra model nodes appended on each side, in units of the window size
TAIL_EXTENSION = 2


def _zeros(D, tail="vacuum"):
    if tail == "vacuum":
        return ZeroSequence(D.N, D.lam)
    if tail == "fit":
        return ZeroSequence(D.N, D.lam, fit_tail(D.lam, D.N))
    raise ValidationError(f"unknown tail model {tail!r}")


def interpolation_nodes(D, tail="fit", extend=TAIL_EXTENSION):
    """Zeros and eigenvalues used for the interpolation.

    With the fitted tail the window is extended by ``extend * N`` model
    points per side carrying the closed-gap eigenvalues ``(-1)^k``. The
    interpolants then take the right values at the drifted zeros rather
    than at the lattice points, which removes the leading truncation
    error of the trace.

    Returns
    -------
    zeros : ZeroSequence
    mu : ndarray
    """
    z = _zeros(D, tail)
    if z.tail.is_vacuum or extend <= 0:
        return z, D.mu
    N = D.N
    M = N + int(extend) * N
    ks = np.arange(-M, M + 1)
    outer = np.abs(ks) > N
    lam = np.empty(ks.size, dtype=complex)
    lam[outer] = z.tail.zeros(ks[outer])
    lam[~outer] = D.lam
    mu = np.where(ks % 2 == 0, 1.0, -1.0).astype(complex)
    mu[~outer] = D.mu
    return ZeroSequence(M, lam, z.tail), mu


def trace_from_divisor(D, lam, tail="fit"):
    """``Delta(lam)``: the interpolant of ``mu_k + 1/mu_k`` at the nodes ``lam_k``."""
    z, mu = interpolation_nodes(D, tail)
    c = ProductC(z)
    return ValueInterpolant(c, mu + 1.0 / mu, vacuum_two_cos)(lam)


class ReconstructedMonodromy(MonodromyFunction):
    """The monodromy determined by a tame divisor and a sign of ``tau``.

    Attributes
    ----------
    divisor : Divisor
    sign : int
    tau : complex
    condition : ndarray
        ``|c'(lam_k)|`` relative to the vacuum value; small entries flag
        nearly coinciding nodes.
    window_norms : dict
        Weighted norms of the deviation of the divisor from the vacuum.

    Parameters
    ----------
    divisor : Divisor
    sign : {1, -1}
    tail : {"fit", "vacuum"}
        Zeros of ``c`` beyond the window: fitted to the drift of the
        outermost window points, or the vacuum lattice.
    pole_tol : float
        Tolerance for ``ad - 1`` at the nodes.
    """

    label = "reconstructed"

    def __init__(self, divisor, sign=1, tail="fit", pole_tol=1e-8):
        if sign not in (1, -1):
            raise ValidationError("sign must be +1 or -1")
        self.divisor = divisor
        self.sign = sign
        z, mu = interpolation_nodes(divisor, tail)
        self.c = ProductC(z, sign)
        self.tau = self.c.tau
        cp = self.c.derivative_at_nodes()
        self.d_fun = ValueInterpolant(self.c, 1.0 / mu, vacuum_cos, cprime=cp)
        self.trace_fun = ValueInterpolant(self.c, mu + 1.0 / mu, vacuum_two_cos, cprime=cp)
        self.condition = self.d_fun.condition
        self.window_norms = dict(zip(("lambda", "mu"), divisor_window_norms(divisor)))
        nodes = self.c.nodes
        a, d = self._ad(nodes)
        resid = np.abs(a * d - 1.0)
        if np.any(resid > pole_tol * np.maximum(1.0, np.abs(a * d))):
            raise DegenerateError("ad - 1 does not vanish at the zeros of c; inconsistent divisor")
        self._node_radius, self._node_taylor = self._node_expansions(nodes)

    def _ad(self, lam):
        d = self.d_fun(lam)
        a = self.trace_fun(lam) - d
        return a, d

    def _b_quotient(self, lam):
        a, d = self._ad(lam)
        return (a * d - 1.0) / self.c(lam)

    def _node_expansions(self, nodes):
        scale = local_radius(nodes)
        gap = np.abs(nodes[:, None] - nodes[None, :]) + np.diag(np.full(nodes.size, np.inf))
        circle = np.minimum(0.5 * scale, 0.4 * gap.min(axis=1))
        taylor = cauchy_derivatives(self._b_quotient, nodes, 2, radius=circle, npts=32, center=False)
        return NODE_DISC * scale, taylor

    def b(self, lam):
        lam = np.asarray(lam, dtype=complex)
        flat = lam.ravel()
        out = np.empty(flat.shape, dtype=complex)
        dist = flat[:, None] - self.c.nodes[None, :]
        near = np.abs(dist) < self._node_radius[None, :]
        hit = near.any(axis=1)
        far = ~hit
        if np.any(far):
            out[far] = self._b_quotient(flat[far])
        for i in np.nonzero(hit)[0]:
            j = int(np.argmax(near[i]))
            h = dist[i, j]
            t = self._node_taylor[:, j]
            out[i] = t[0] + h * t[1] + 0.5 * h * h * t[2]
        return out.reshape(lam.shape)

    def _matrices(self, lam):
        lam = np.asarray(lam, dtype=complex)
        a, d = self._ad(lam)
        out = np.empty(lam.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = a
        out[..., 0, 1] = self.b(lam)
        out[..., 1, 0] = self.c(lam)
        out[..., 1, 1] = d
        return out

    def trace(self, lam, order=0):
        lam = np.asarray(lam, dtype=complex)
        if order == 0:
            return self.trace_fun(lam)[None]
        out = cauchy_derivatives(self.trace_fun, lam.ravel(), order)
        return out.reshape((order + 1,) + lam.shape)

    def discriminant(self, lam, order=0):
        """``Delta^2 - 4`` and derivatives from the interpolated trace alone.

        Going through ``b`` would only reintroduce the same cancellation,
        and the trace is smooth everywhere including at the nodes.
        """
        if order > 2:
            raise ValueError("discriminant derivatives above order 2 are not provided")
        t = self.trace(lam, order)
        out = [(t[0] - 2.0) * (t[0] + 2.0)]
        if order >= 1:
            out.append(2.0 * t[0] * t[1])
        if order >= 2:
            out.append(2.0 * (t[1] ** 2 + t[0] * t[2]))
        return np.stack(out)


def reconstruct_monodromy(D, sign=1, tail="fit"):
    """Monodromy of a tame divisor; ``sign`` selects the sign of ``tau``.

    Flipping the sign negates ``b``, ``c`` and ``tau`` and leaves ``a``
    and ``d`` unchanged.
    """
    return ReconstructedMonodromy(D, sign, tail)


def sign_matching_potential(D, p):
    """The sign of ``tau`` that agrees with the boundary values of ``p``."""
    tau = tau_from_zeros(_zeros(D))
    target = p.boundary_tau()
    return 1 if abs(tau - target) <= abs(tau + target) else -1


def trace_formula_check(p, D):
    """``|exp((u(0) + u(1))/2) - prod_k lam_k / lambda_{k,0}|`` over the window."""
    lhs = np.exp((p.u(0.0) + p.u(1.0)) / 2.0)
    rhs = np.prod(D.lam / _zeros(D).lattice)
    return float(abs(lhs - rhs))


def round_trip_deviation(p, N, samples=50, seed=0, tol=1e-12, tail="fit", M=None, D=None):
    """Largest relative deviation of the reconstructed from the ODE monodromy.

    The divisor of ``p`` is extracted on ``|k| <= N`` (unless given), the
    monodromy is rebuilt with the sign of ``tau`` matching ``p``, and both
    are compared at ``samples`` points of ``V_delta`` inside ``|k| <= N/2``
    by ``||M_rec - M|| / ||M||`` (Frobenius norm).

    Returns
    -------
    float
    """
    from .monodromy import ODEMonodromy
    from .spectral_extract import find_divisor

    if M is None:
        M = ODEMonodromy(p, tol=tol)
    if D is None:
        D = find_divisor(M, N)
    R = reconstruct_monodromy(D, sign_matching_potential(D, p), tail)
    lam = sample_outside_domains(samples, max(1, N // 2), D.delta, seed=seed)
    ref = M(lam)
    rec = R(lam)
    err = np.linalg.norm(rec - ref, axis=(1, 2)) / np.linalg.norm(ref, axis=(1, 2))
    return float(err.max())
