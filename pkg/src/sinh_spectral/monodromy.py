"""Extended frame and monodromy of the connection form.

The extended frame solves ``F' = alpha(x; lam) F`` with ``F(0) = I`` on the
period ``[0, 1]``; the monodromy is ``M(lam) = F(1, lam)``. Integration is
done in the gauge ``D = diag(lam^{1/4}, lam^{-1/4})`` in which all four
entries of the frame have the same size, so that a single relative tolerance
controls every entry. Derivatives in ``lam`` are obtained from the
variational equations, integrated alongside the frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, ValidationError
from .numerics import cauchy_derivatives, local_radius
from .potentials import PotentialModel, eval_alpha_x
from .vacuum_geometry import sinc, vacuum_frame, vacuum_monodromy, zeta

__all__ = [
    "DEFAULT_TOL",
    "ConstantMonodromy",
    "FrameSolution",
    "MonodromyFunction",
    "ODEMonodromy",
    "VacuumMonodromy",
    "constant_monodromy_closed_form",
    "dyson_monodromy",
    "extended_frame",
    "monodromy",
    "trace_delta",
]

DEFAULT_TOL = 1e-10


class MonodromyFunction:
    """A map ``lam -> M(lam)`` with unit determinant.

    Subclasses implement :meth:`_matrices`; derivatives default to Cauchy
    integrals on small circles, which is exact up to rounding for the
    entire functions involved.
    """

    tol = DEFAULT_TOL
    label = "monodromy"

    def _matrices(self, lam):
        raise NotImplementedError

    def evaluate(self, lam, order=0):
        """Return ``M`` and its first ``order`` derivatives.

        Returns
        -------
        ndarray
            Shape ``(order + 1,) + lam.shape + (2, 2)``.
        """
        lam = np.asarray(lam, dtype=complex)
        flat = lam.ravel()
        if np.any(flat == 0):
            raise ValidationError("spectral parameter must be nonzero")
        if flat.size == 0:
            return np.zeros((order + 1,) + lam.shape + (2, 2), dtype=complex)
        out = cauchy_derivatives(self._matrices, flat, order)
        return out.reshape((order + 1,) + lam.shape + (2, 2))

    def __call__(self, lam):
        return self.evaluate(lam, 0)[0]

    def trace(self, lam, order=0):
        """``Delta = a + d`` and its derivatives, shape ``(order+1,) + lam.shape``."""
        m = self.evaluate(lam, order)
        return m[..., 0, 0] + m[..., 1, 1]

    def entry(self, lam, name, order=0):
        i, j = {"a": (0, 0), "b": (0, 1), "c": (1, 0), "d": (1, 1)}[name]
        return self.evaluate(lam, order)[..., i, j]

    def discriminant(self, lam, order=0):
        """``Delta^2 - 4`` and derivatives, free of cancellation near ``+-I``.

        With ``ad - bc = 1`` one has ``Delta^2 - 4 = (a - d)^2 + 4 bc``; the
        right side is small to second order when ``M`` is close to ``+-I``.
        """
        m = self.evaluate(lam, order)
        a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
        q = (a[0] - d[0]) ** 2 + 4.0 * b[0] * c[0]
        out = [q]
        tr = a + d
        if order >= 1:
            out.append(2.0 * tr[0] * tr[1])
        if order >= 2:
            out.append(2.0 * (tr[1] ** 2 + tr[0] * tr[2]))
        if order >= 3:
            raise ValueError("discriminant derivatives above order 2 are not provided")
        return np.stack(out)


class VacuumMonodromy(MonodromyFunction):
    """Closed-form monodromy of ``u = 0``."""

    label = "vacuum"

    def _matrices(self, lam):
        return vacuum_monodromy(lam)


def constant_monodromy_closed_form(tau, lam):
    """Monodromy of constant data ``u = -2 log(tau)``.

    ``M = cos(xi) I + sinc(xi) alpha`` where ``alpha`` is the constant
    connection matrix and ``xi^2 = (lam tau + 1/tau)(tau/lam + 1/tau) / 16``.
    Written through ``cos`` and ``sinc`` the result has no branch ambiguity,
    including at ``lam = -tau^{-2}``.

    Parameters
    ----------
    tau : complex
    lam : complex or array_like

    Returns
    -------
    ndarray
        Shape ``lam.shape + (2, 2)``.
    """
    tau = complex(tau)
    if tau == 0:
        raise ValidationError("tau must be nonzero")
    lam = np.asarray(lam, dtype=complex)
    if np.any(lam == 0):
        raise ValidationError("spectral parameter must be nonzero")
    p = lam * tau + 1.0 / tau
    q = tau / lam + 1.0 / tau
    xi = np.sqrt(p * q / 16.0)
    cx, sx = np.cos(xi), sinc(xi)
    out = np.empty(lam.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = cx
    out[..., 1, 1] = cx
    out[..., 0, 1] = -0.25 * q * sx
    out[..., 1, 0] = 0.25 * p * sx
    return out


class ConstantMonodromy(MonodromyFunction):
    """Closed-form monodromy of constant data, parametrised by ``tau``."""

    label = "constant"

    def __init__(self, tau):
        self.tau = complex(tau)

    def _matrices(self, lam):
        return constant_monodromy_closed_form(self.tau, lam)


# -- ODE integration --------------------------------------------------------


def _gauged_rhs(p, s, order):
    """Right-hand side of the gauged frame ODE and its variational system."""
    nb = s.size
    uh, uyh, modes = p.u_hat, p.uy_hat, p.modes
    inv_s = 1.0 / s
    twopi_modes = 2j * np.pi * modes

    def rhs(x, y):
        ph = np.exp(twopi_modes * x)
        u = ph @ uh
        d = 0.25j * (ph @ uyh)
        ep, em = np.exp(0.5 * u), np.exp(-0.5 * u)
        Y = y.reshape(order + 1, nb, 2, 2)
        A = np.empty((nb, 2, 2), dtype=complex)
        A[:, 0, 0] = d
        A[:, 1, 1] = -d
        A[:, 0, 1] = -0.25 * (s * ep + em * inv_s)
        A[:, 1, 0] = 0.25 * (ep * inv_s + s * em)
        out = np.empty_like(Y)
        out[0] = A @ Y[0]
        if order >= 1:
            # derivatives of the off-diagonal entries through s = sqrt(lam)
            f1 = -0.25 * (ep - em * inv_s**2)
            h1 = 0.25 * (em - ep * inv_s**2)
            A1 = np.zeros((nb, 2, 2), dtype=complex)
            A1[:, 0, 1] = f1 * 0.5 * inv_s
            A1[:, 1, 0] = h1 * 0.5 * inv_s
            out[1] = A @ Y[1] + A1 @ Y[0]
            if order >= 2:
                f2 = -0.5 * em * inv_s**3
                h2 = 0.5 * ep * inv_s**3
                A2 = np.zeros((nb, 2, 2), dtype=complex)
                A2[:, 0, 1] = (f2 - f1 * inv_s) * 0.25 * inv_s**2
                A2[:, 1, 0] = (h2 - h1 * inv_s) * 0.25 * inv_s**2
                out[2] = A @ Y[2] + 2.0 * (A1 @ Y[1]) + A2 @ Y[0]
        return out.ravel()

    return rhs


def _ungauge(Y, s, order):
    """Undo ``M = D^{-1} Mhat D`` including derivatives in ``lam``."""
    lam = s * s
    out = np.array(Y, copy=True)
    # b = bhat * lam^{-1/2}, c = chat * lam^{1/2}
    phi = [1.0 / s, -0.5 / (lam * s), 0.75 / (lam * lam * s)]
    psi = [s, 0.5 / s, -0.25 / (lam * s)]
    for (i, j), g in (((0, 1), phi), ((1, 0), psi)):
        src = Y[:, :, i, j]
        if order >= 0:
            out[0, :, i, j] = src[0] * g[0]
        if order >= 1:
            out[1, :, i, j] = src[1] * g[0] + src[0] * g[1]
        if order >= 2:
            out[2, :, i, j] = src[2] * g[0] + 2.0 * src[1] * g[1] + src[0] * g[2]
    return out


def _solve_batch(p, lam, order, tol, x_eval=None, method="DOP853"):
    s = np.sqrt(lam)
    nb = lam.size
    y0 = np.zeros((order + 1, nb, 2, 2), dtype=complex)
    y0[0, :, 0, 0] = 1.0
    y0[0, :, 1, 1] = 1.0
    # absolute tolerance per component, scaled to the size of d^m/dlam^m
    dz = np.abs(0.125 * (1.0 / s - 1.0 / (s * lam)))
    scale = np.ones((order + 1, nb, 2, 2))
    for m in range(1, order + 1):
        scale[m] = (np.maximum(dz, 1e-300) ** m)[:, None, None]
    atol = (tol * 1e-2 * scale).ravel()
    rhs = _gauged_rhs(p, s, order)
    sol = solve_ivp(
        rhs,
        (0.0, 1.0),
        y0.ravel(),
        method=method,
        rtol=tol,
        atol=atol,
        t_eval=x_eval,
    )
    if sol.status != 0:
        raise ConvergenceError(f"frame integration failed for lam in {lam[:3]}...: {sol.message}")
    if x_eval is None:
        Y = sol.y[:, -1].reshape(order + 1, nb, 2, 2)
        return _ungauge(Y, s, order), sol.nfev
    Ys = sol.y.T.reshape(len(x_eval), order + 1, nb, 2, 2)
    out = np.stack([_ungauge(Y, s, order) for Y in Ys])
    return out, sol.nfev


def _batches(lam, max_batch=128):
    """Group indices of ``lam`` into batches of similar oscillation rate."""
    rate = np.abs(zeta(lam))
    order = np.argsort(rate, kind="stable")
    batches, cur, base = [], [], None
    for i in order:
        r = max(rate[i], 1.0)
        if cur and (len(cur) >= max_batch or r > 2.0 * base):
            batches.append(np.array(cur))
            cur, base = [], None
        if base is None:
            base = r
        cur.append(i)
    if cur:
        batches.append(np.array(cur))
    return batches


class ODEMonodromy(MonodromyFunction):
    """Monodromy of a potential by adaptive Runge-Kutta integration.

    Parameters
    ----------
    potential : PotentialModel
    tol : float
        Relative local error tolerance of the embedded integrator.
    method : str
        ``scipy.integrate.solve_ivp`` method (order at least 5 by default).
    """

    label = "ode"

    def __init__(self, potential, tol=DEFAULT_TOL, method="DOP853"):
        if tol <= 0:
            raise ValidationError("tolerance must be positive")
        self.potential = potential
        self.tol = float(tol)
        self.method = method
        self.nfev = 0

    @property
    def metadata(self):
        return {"potential": self.potential.digest(), "tol": self.tol, "method": self.method}

    def evaluate(self, lam, order=0):
        if order > 2:
            raise ValueError("derivatives above order 2 are not integrated")
        lam = np.asarray(lam, dtype=complex)
        flat = lam.ravel()
        if np.any(flat == 0):
            raise ValidationError("spectral parameter must be nonzero")
        out = np.empty((order + 1, flat.size, 2, 2), dtype=complex)
        for idx in _batches(flat):
            res, nfev = _solve_batch(self.potential, flat[idx], order, self.tol, method=self.method)
            out[:, idx] = res
            self.nfev += nfev
        return out.reshape((order + 1,) + lam.shape + (2, 2))

    def frame(self, lam, x, order=0):
        """Frame samples ``F(x_i, lam)``, shape ``(len(x), order+1) + lam.shape + (2, 2)``."""
        lam = np.atleast_1d(np.asarray(lam, dtype=complex))
        x = np.asarray(x, dtype=float)
        out = np.empty((x.size, order + 1, lam.size, 2, 2), dtype=complex)
        for idx in _batches(lam):
            res, _ = _solve_batch(self.potential, lam[idx], order, self.tol, x_eval=x, method=self.method)
            out[:, :, idx] = res
        return out


@dataclass(frozen=True)
class FrameSolution:
    """Samples of the extended frame at one spectral parameter."""

    lam: complex
    x: np.ndarray
    samples: np.ndarray = field(repr=False)

    @property
    def M(self):
        return self.samples[-1]

    def det_defect(self):
        F = self.samples
        det = F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]
        return float(np.max(np.abs(det - 1.0)))


def extended_frame(p, lam, tol=DEFAULT_TOL, x=None):
    """Integrate ``F' = alpha F`` with ``F(0) = I`` and sample the frame.

    Parameters
    ----------
    p : PotentialModel
    lam : complex
    tol : float
    x : array_like, optional
        Sample positions in ``[0, 1]``; defaults to 33 equispaced points.
        The last sample is always ``x = 1``.
    """
    if tol <= 0:
        raise ValidationError("tolerance must be positive")
    lam = complex(lam)
    if lam == 0:
        raise ValidationError("spectral parameter must be nonzero")
    if x is None:
        x = np.linspace(0.0, 1.0, 33)
    x = np.unique(np.concatenate([np.asarray(x, dtype=float), [1.0]]))
    if x[0] < 0.0 or x[-1] > 1.0:
        raise ValidationError("sample positions must lie in [0, 1]")
    res, _ = _solve_batch(p, np.array([lam]), 0, tol, x_eval=x)
    return FrameSolution(lam, x, res[:, 0, 0])


def monodromy(p, lam, tol=DEFAULT_TOL):
    """``M(lam) = F(1, lam)`` for a scalar or an array of ``lam``."""
    return ODEMonodromy(p, tol).evaluate(lam, 0)[0]


def trace_delta(M, lam):
    """``Delta(lam) = a + d`` of a monodromy function."""
    return M.trace(lam, 0)[0]


# -- independent series oracle -------------------------------------------------


def _cheb_integration(n):
    """Chebyshev-Lobatto nodes on [0,1] and the matrix of ``int_0^x``."""
    from numpy.polynomial import chebyshev as C

    t = -np.cos(np.pi * np.arange(n) / (n - 1))
    V = C.chebvander(t, n - 1)
    Vinv = np.linalg.inv(V)
    E = np.empty((n, n))
    for m in range(n):
        e = np.zeros(n)
        e[m] = 1.0
        E[:, m] = 0.5 * C.chebval(t, C.chebint(e, lbnd=-1.0))
    return 0.5 * (t + 1.0), E @ Vinv


def dyson_monodromy(p, lam, nodes=48, max_terms=400, rtol=1e-15):
    """Monodromy as the Picard (Dyson) series ``sum_n I_n(1)``.

    ``I_0 = I`` and ``I_{n+1}(x) = int_0^x alpha(t) I_n(t) dt``, each integral
    evaluated by spectral integration on Chebyshev nodes. Independent of the
    Runge-Kutta code; intended for moderate ``|alpha|``.
    """
    lam = complex(lam)
    x, S = _cheb_integration(nodes)
    A = np.stack([eval_alpha_x(p, xi, lam) for xi in x])
    term = np.broadcast_to(np.eye(2, dtype=complex), (nodes, 2, 2)).copy()
    total = term[-1].copy()
    for _ in range(max_terms):
        g = A @ term
        term = np.einsum("ij,jab->iab", S, g)
        total += term[-1]
        if np.max(np.abs(term)) <= rtol * max(1.0, np.max(np.abs(total))):
            return total
    raise ConvergenceError("Picard series did not converge")


def frame_group_defect(p, lam, x, y, tol=DEFAULT_TOL):
    """``|F(x+y) - F(y) F(x)|`` for constant data where ``alpha`` commutes."""
    fr = extended_frame(p, lam, tol, [x, y, x + y])
    F = dict(zip(np.round(fr.x, 14), fr.samples))
    lhs = F[round(x + y, 14)]
    rhs = F[round(y, 14)] @ F[round(x, 14)]
    return float(np.max(np.abs(lhs - rhs)))


__all__ += ["frame_group_defect", "local_radius", "vacuum_frame"]
