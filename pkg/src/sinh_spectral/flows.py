"""Translation flows of spectral divisors and the Darboux system.

Translating the potential in ``x`` or ``y`` leaves the spectral curve fixed
and moves the divisor points along it. With ``c`` rebuilt from the current
zeros, the motion is the closed system

    d lam_k / dt = -alpha_21(lam_k) (mu_k - 1/mu_k) / c'(lam_k),
    d mu_k / dt  = -alpha_21(lam_k) Delta'(lam_k) mu_k / c'(lam_k),

where ``alpha_21`` is the lower-left entry of the connection at ``x = 0``:
``(lam tau + 1/tau)/4`` for ``x`` and ``i(-lam tau + 1/tau)/4`` for ``y``.
The second equation is the derivative of ``mu + 1/mu = Delta(lam)`` along
the first one; integrating ``mu`` with ``lam`` carries the points smoothly
through the branch points, where the sign of ``mu - 1/mu`` changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853

from .errors import CollisionError, ConvergenceError, DegenerateError, NonTameError, ValidationError
from .interpolation import ProductC, ValueInterpolant, ZeroSequence, vacuum_two_cos
from .monodromy import DEFAULT_TOL, ODEMonodromy
from .numerics import cauchy_derivatives, gauss_legendre_01, local_radius
from .reconstruction import interpolation_nodes
from .spectral_extract import Divisor

__all__ = [
    "DarbouxVectors",
    "FlowState",
    "darboux_vectors",
    "divisor_velocity",
    "integrate_flow",
    "symplectic_form_omega",
]

DIRECTIONS = ("x", "y")


def _alpha21(lam, tau, direction):
    if direction == "x":
        return 0.25 * (lam * tau + 1.0 / tau)
    if direction == "y":
        return 0.25j * (-lam * tau + 1.0 / tau)
    raise ValidationError(f"direction must be 'x' or 'y', not {direction!r}")


class _Nodes:
    """The interpolation nodes of a divisor with a movable window part."""

    def __init__(self, D, tail):
        z, mu = interpolation_nodes(D, tail)
        self.base = z
        self.mu = mu
        self.N = D.N
        self.inner = slice(z.N - D.N, z.N + D.N + 1)

    def product(self, lam, tau_prev=None):
        full = self.base.lam.copy()
        full[self.inner] = lam
        z = ZeroSequence(self.base.N, full, self.base.tail)
        c = ProductC(z)
        if tau_prev is not None and abs(c.tau + tau_prev) < abs(c.tau - tau_prev):
            c = ProductC(z, -1)
        return c


def _check_tame(lam, min_sep):
    scale = local_radius(lam)
    diff = np.abs(lam[:, None] - lam[None, :]) / np.minimum(scale[:, None], scale[None, :])
    np.fill_diagonal(diff, np.inf)
    i, j = np.unravel_index(np.argmin(diff), diff.shape)
    if diff[i, j] < min_sep:
        raise CollisionError(f"divisor points {i} and {j} collide (separation {diff[i, j]:.3g} local units)")


def divisor_velocity(D, direction="x", tail="fit", tau=None, cprime_min=1e-12):
    """``d lam_k / dt`` for the translation flow in ``x`` or ``y``.

    Parameters
    ----------
    D : Divisor
    direction : {"x", "y"}
    tail : {"fit", "vacuum"}
        Model for the zeros of ``c`` outside the window.
    tau : complex, optional
        Reference value selecting the sign of ``tau``.

    Raises
    ------
    NonTameError
        If ``c'`` nearly vanishes at a divisor point.
    """
    nodes = _Nodes(D, tail)
    c = nodes.product(D.lam, tau)
    cp = c.derivative_at_nodes()[nodes.inner]
    ref = np.abs(0.125 * (1.0 - 1.0 / c.lattice[nodes.inner]))
    if np.any(np.abs(cp) < cprime_min * ref):
        raise NonTameError("c' nearly vanishes at a divisor point")
    return -_alpha21(D.lam, c.tau, direction) * (D.mu - 1.0 / D.mu) / cp


@dataclass
class FlowState:
    """Result of :func:`integrate_flow`.

    Attributes
    ----------
    t : float
        Final time.
    divisor : Divisor
    times : ndarray
        Accepted step times.
    lam_path, mu_path : ndarray
        Divisor windows at the accepted steps, shape ``(len(times), 2N+1)``.
    sheet : ndarray
        Per point, the number of sheet changes (passages through a branch
        point) observed along the path.
    on_curve_defect : float
        ``max |Delta(lam_k) - mu_k - 1/mu_k|`` over all accepted steps.
    """

    t: float
    divisor: Divisor
    times: np.ndarray
    lam_path: np.ndarray
    mu_path: np.ndarray
    sheet: np.ndarray
    on_curve_defect: float
    taus: np.ndarray = field(default=None, repr=False)


def _closest_root(delta, mu_prev):
    disc = np.sqrt(delta * delta - 4.0 + 0j)
    r1 = 0.5 * (delta + disc)
    r2 = 0.5 * (delta - disc)
    return np.where(np.abs(r1 - mu_prev) <= np.abs(r2 - mu_prev), r1, r2), np.abs(r1 - r2)


def integrate_flow(
    D0,
    direction="x",
    t_end=1.0,
    tol=1e-11,
    tail="fit",
    curve_tol=1e-7,
    min_sep=1e-3,
    max_steps=100000,
    trace=None,
):
    """Integrate the translation flow from ``D0`` up to ``t_end``.

    The spectral curve is fixed: ``Delta`` is interpolated once from
    ``D0``. Each accepted step is checked against the curve; at the end
    ``mu`` is snapped to the closest root of ``mu^2 - Delta mu + 1`` where
    the two roots are well separated.

    ``trace`` replaces the interpolated ``Delta`` by a given curve (for
    instance a truncated curve whose gaps beyond the window are exactly
    closed); ``D0`` must lie on it.

    Raises
    ------
    CollisionError
        If two divisor points approach within ``min_sep`` local units.
    ConvergenceError
        If the point leaves the curve by more than ``curve_tol``.
    """
    if direction not in DIRECTIONS:
        raise ValidationError(f"direction must be 'x' or 'y', not {direction!r}")
    N = D0.N
    nodes = _Nodes(D0, tail)
    inner = nodes.inner
    c0 = nodes.product(D0.lam)
    if trace is None:
        trace = ValueInterpolant(c0, nodes.mu + 1.0 / nodes.mu, vacuum_two_cos)
    W = 2 * N + 1
    state = {"tau": c0.tau}

    if t_end == 0 or np.all(D0.mu - 1.0 / D0.mu == 0):
        lam = D0.lam.copy()
        return FlowState(
            float(t_end), D0, np.array([0.0]), lam[None], D0.mu[None], np.zeros(W, int), 0.0, np.array([c0.tau])
        )

    def rhs(t, y):
        lam, mu = y[:W], y[W:]
        c = nodes.product(lam, state["tau"])
        cp = c.derivative_at_nodes()[inner]
        dtr = cauchy_derivatives(trace, lam, 1)[1]
        f = -_alpha21(lam, c.tau, direction) / cp
        return np.concatenate([f * (mu - 1.0 / mu), f * dtr * mu])

    y0 = np.concatenate([D0.lam, D0.mu]).astype(complex)
    scale = np.concatenate([np.abs(c0.lattice[inner]), np.ones(W)])
    solver = DOP853(rhs, 0.0, y0, float(t_end), rtol=tol, atol=tol * scale)
    times, lams, mus, taus = [0.0], [D0.lam.copy()], [D0.mu.copy()], [c0.tau]
    sheet = np.zeros(W, dtype=int)
    sign_prev = np.sign((D0.mu - 1.0 / D0.mu).real)
    defect = 0.0
    steps = 0
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            raise ConvergenceError(f"flow integration failed: {msg}")
        steps += 1
        if steps > max_steps:
            raise ConvergenceError("flow integration exceeded the step budget")
        lam, mu = solver.y[:W], solver.y[W:]
        _check_tame(lam, min_sep)
        tr = trace(lam)
        dev = np.abs(tr - mu - 1.0 / mu) / np.maximum(1.0, np.abs(tr))
        defect = max(defect, float(np.max(dev)))
        if defect > curve_tol:
            raise ConvergenceError(f"divisor left the spectral curve (defect {defect:.3g})")
        c = nodes.product(lam, state["tau"])
        state["tau"] = c.tau
        gap = mu - 1.0 / mu
        s = np.where(np.abs(gap) > 1e-8, np.sign(gap.real), 0.0)
        sheet += (s * sign_prev < 0).astype(int)
        sign_prev = np.where(s != 0, s, sign_prev)
        times.append(solver.t)
        lams.append(lam.copy())
        mus.append(solver.y[W:].copy())
        taus.append(c.tau)
    # final sheet choice: the closest root, unless the two roots nearly coincide
    snapped, sep = _closest_root(trace(lams[-1]), mus[-1])
    ok = sep > 1e-3 * np.maximum(1.0, np.abs(mus[-1]))
    mus[-1] = np.where(ok, snapped, mus[-1])
    D = Divisor(N, lams[-1], mus[-1], D0.delta, {"flow": direction, "t": float(t_end)})
    return FlowState(
        float(t_end), D, np.array(times), np.array(lams), np.array(mus), sheet, defect, np.array(taus)
    )


# -- symplectic structure -----------------------------------------------------


def symplectic_form_omega(d1, d2, weights=None):
    """``Omega(d1, d2) = int (d1_u d2_uy - d2_u d1_uy) dx``.

    ``d1`` and ``d2`` are pairs ``(du, duy)`` of samples on a common grid;
    ``weights`` are the quadrature weights (uniform trapezoid weights on a
    periodic grid by default, exact for trigonometric data).
    """
    u1, uy1 = (np.asarray(v, dtype=complex) for v in d1)
    u2, uy2 = (np.asarray(v, dtype=complex) for v in d2)
    if not (u1.shape == uy1.shape == u2.shape == uy2.shape):
        raise ValidationError("tangent vectors must be sampled on the same grid")
    if weights is None:
        weights = np.full(u1.shape[-1], 1.0 / u1.shape[-1])
    weights = np.asarray(weights, dtype=float)
    if weights.shape != u1.shape[-1:]:
        raise ValidationError("quadrature weights do not match the grid")
    return complex(np.sum(weights * (u1 * uy2 - u2 * uy1)))


@dataclass(frozen=True)
class DarbouxVectors:
    """Tangent vectors ``v_k``, ``w_k`` and the scalars at one divisor point.

    The vectors are sampled at the Gauss-Legendre nodes ``x`` with
    weights ``weights``.

    Attributes
    ----------
    theta : complex
        ``int (lam a^2 + c^2/lam) e^{u/2} dx``; equals ``(lam + 1)/2`` for
        the vacuum.
    pairing : complex
        ``(i/2) int (lam a^2 - c^2/lam) e^{-u/2} dx``. This is the value of
        ``Omega(v_k, w_k)``, and ``c'(lam_k) = -i pairing / (2 mu_k lam_k)``.
        It differs from ``theta``; for the vacuum it is ``i(lam - 1)/4``.
    """

    k: int
    lam: complex
    x: np.ndarray
    weights: np.ndarray
    v: tuple
    w: tuple
    theta: complex
    pairing: complex


def darboux_vectors(p, k, lam_k=None, D=None, nodes=96, tol=1e-12):
    """Darboux vectors at the divisor point with index ``k``.

    Parameters
    ----------
    p : PotentialModel
    k : int
    lam_k : complex, optional
        The divisor point; taken from ``D`` (or the vacuum lattice for the
        vacuum) when omitted.
    D : Divisor, optional
    nodes : int
        Gauss-Legendre nodes on ``[0, 1]``.
    """
    if lam_k is None:
        if D is not None:
            lam_k = D.point(k)[0]
        elif p.is_vacuum():
            from .vacuum_geometry import vacuum_lattice

            lam_k = complex(vacuum_lattice(k))
        else:
            raise ValidationError("lam_k or a divisor is required")
    lam = complex(lam_k)
    if lam == 0:
        raise DegenerateError("divisor point at lam = 0")
    x, wts = gauss_legendre_01(nodes)
    F = ODEMonodromy(p, tol).frame(np.array([lam]), x)[:, 0, 0]
    a, b, c, d = F[:, 0, 0], F[:, 0, 1], F[:, 1, 0], F[:, 1, 1]
    u = p.u(x)
    ep, em = np.exp(u / 2.0), np.exp(-u / 2.0)
    s1 = ep - lam * em
    s2 = ep - em / lam
    v = (a * c, 0.25j * (s1 * a * a + s2 * c * c))
    w = (a * d + b * c, 0.5j * (s1 * a * b + s2 * c * d))
    theta = complex(np.sum(wts * (lam * a * a + c * c / lam) * ep))
    pairing = 0.5j * complex(np.sum(wts * (lam * a * a - c * c / lam) * em))
    return DarbouxVectors(int(k), lam, x, wts, v, w, theta, pairing)
