"""Projection of a tame divisor onto a divisor of finite type.

The points with ``|k| <= N_fix`` are kept. For ``|k| > N_fix`` the trace
values at the nodes are shifted by unknowns ``z_k`` until every critical
point ``eta_k`` of the new trace sits at a double point,
``Delta(eta_k) = 2 (-1)^k``. The update

    z_k <- Delta(lam_k) - Delta(eta_k)

is a contraction once ``N_fix`` is large; the divisor of finite type then
has the points ``(eta_k, (-1)^k)`` outside the prescribed window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractionError, ConvergenceError, CountMismatchError, ValidationError
from .interpolation import ProductC, ValueInterpolant, ZeroSequence, vacuum_two_cos
from .numerics import cauchy_derivatives, newton
from .spectral_extract import DEFAULT_DELTA, Divisor, count_zeros_contour, divisor_distance
from .vacuum_geometry import contour_excluded_domain, in_excluded_domain, vacuum_lattice

__all__ = [
    "CriticalPoints",
    "FiniteTypeResult",
    "critical_points_eta",
    "finite_type_project",
    "project_with_doubling",
    "trace_derivatives",
]


def trace_derivatives(trace, lam, order):
    """``Delta`` and derivatives at ``lam``, shape ``(order+1,) + lam.shape``.

    ``trace`` is either a monodromy evaluator (anything with a ``trace``
    method) or a plain vectorised callable ``lam -> Delta(lam)``.
    """
    lam = np.asarray(lam, dtype=complex)
    if hasattr(trace, "trace"):
        return trace.trace(lam, order)
    flat = lam.ravel()
    out = cauchy_derivatives(trace, flat, order)
    return out.reshape((order + 1,) + lam.shape)


@dataclass(frozen=True)
class CriticalPoints:
    """Zeros ``eta_k`` of ``Delta'`` on a window and the extra zero ``eta_*``."""

    K: int
    eta: np.ndarray
    eta_star: complex
    residual: float

    @property
    def ks(self):
        return np.arange(-self.K, self.K + 1)


def _eta_newton(trace, seeds, tol):
    def fun(x):
        t = trace_derivatives(trace, x, 2)
        return t[1], t[2]

    return newton(fun, seeds, rtol=tol, maxiter=60, name="critical point Newton")[0]


def _eta_star(trace, tol):
    # Delta' vanishes near lam = 1 where d zeta / d lam = 0; search from a
    # small ring of seeds and keep the closest convergent root
    seeds = 1.0 + 0.2 * np.exp(2j * np.pi * np.arange(8) / 8)
    seeds = np.concatenate([[1.0 + 0j], seeds])
    best = None
    for s in seeds:
        try:
            root = _eta_newton(trace, np.array([s]), tol)[0]
        except ConvergenceError:
            continue
        if best is None or abs(root - 1.0) < abs(best - 1.0):
            best = root
    if best is None:
        raise ConvergenceError("no zero of Delta' found near lam = 1")
    return complex(best)


def critical_points_eta(trace, K, delta=DEFAULT_DELTA, tol=1e-13, validate=True, quad_n=64):
    """Zeros of ``Delta'``: one per excluded domain ``|k| <= K`` plus ``eta_*``.

    Parameters
    ----------
    trace : evaluator
        Monodromy evaluator or callable trace, see :func:`trace_derivatives`.
    K : int
    delta : float
    tol : float
        Relative Newton step tolerance.
    validate : bool
        Count the zeros of ``Delta'`` in each domain with the argument
        principle and require exactly one.

    Raises
    ------
    CountMismatchError
        If a domain holds a number of critical points other than one, or
        the Newton root left its domain.
    """
    ks = np.arange(-K, K + 1)
    eta = _eta_newton(trace, vacuum_lattice(ks).astype(complex), tol)
    t = trace_derivatives(trace, eta, 1)
    residual = float(np.max(np.abs(t[1]) / np.maximum(1.0, np.abs(t[0]))))
    if validate:
        for i, k in enumerate(ks):
            contour = lambda n, k=int(k): contour_excluded_domain(k, delta, n)  # noqa: E731
            n = count_zeros_contour(
                lambda x: trace_derivatives(trace, x, 1)[1],
                contour,
                quad_n,
                fprime=lambda x: trace_derivatives(trace, x, 2)[2],
            )
            if n != 1 or not in_excluded_domain(eta[i], int(k), delta):
                raise CountMismatchError(f"k={k}: {n} zeros of Delta' in the excluded domain")
    return CriticalPoints(int(K), eta, _eta_star(trace, tol), residual)


@dataclass(frozen=True)
class FiniteTypeResult:
    """Outcome of :func:`finite_type_project`.

    Attributes
    ----------
    divisor : Divisor
        The finite-type divisor ``D*``.
    iterations : int
    residual : float
        Final ``max_k |Delta(eta_k) - 2 (-1)^k|``.
    contraction : float
        Largest ratio of successive update norms after the first sweep
        (0 when the iteration stopped at once).
    ratios : list of float
    distance : float
        ``||D* - D||`` in the divisor metric.
    """

    divisor: Divisor
    iterations: int
    residual: float
    contraction: float
    N_fix: int
    ratios: list = field(default_factory=list)
    distance: float = 0.0


def finite_type_project(D, N_fix, tol=1e-12, max_iter=100, eta_tol=1e-14):
    """Banach iteration for the finite-type divisor agreeing with ``D`` on ``|k| <= N_fix``.

    Raises
    ------
    ContractionError
        If three consecutive update ratios are at least 1 (``N_fix`` too
        small for the iteration to contract).
    ConvergenceError
        If ``max_iter`` sweeps do not reach ``tol``.
    """
    N = D.N
    if not 0 <= N_fix <= N:
        raise ValidationError("N_fix must lie in [0, N]")
    ks = D.ks
    sgn = np.where(ks % 2 == 0, 1.0, -1.0)
    outer = np.abs(ks) > N_fix
    c = ProductC(ZeroSequence(N, D.lam))
    cp = c.derivative_at_nodes()
    values = (D.mu + 1.0 / D.mu).astype(complex)
    z = values[outer] - 2.0 * sgn[outer]
    eta = D.lam[outer].copy()
    ratios, prev_step, bad = [], None, 0
    residual = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        vals = values.copy()
        vals[outer] = 2.0 * sgn[outer] + z
        trace = ValueInterpolant(c, vals, vacuum_two_cos, cprime=cp)
        if eta.size:
            eta = _eta_newton(trace, eta, eta_tol)
            step = 2.0 * sgn[outer] - trace(eta)
        else:
            step = np.zeros(0, dtype=complex)
        residual = float(np.max(np.abs(step), initial=0.0))
        if prev_step is not None and prev_step > 0:
            ratio = residual / prev_step
            ratios.append(ratio)
            bad = bad + 1 if ratio >= 1.0 and residual > tol else 0
            if bad >= 3:
                raise ContractionError(f"no contraction for N_fix={N_fix} (ratio {ratio:.3g}); raise N_fix")
        if residual <= tol:
            break
        prev_step = residual
        z = z + step
    else:
        raise ConvergenceError(f"finite-type iteration stalled at residual {residual:.3g}")
    lam = D.lam.copy()
    mu = D.mu.copy()
    lam[outer] = eta
    mu[outer] = sgn[outer]
    Dstar = Divisor(N, lam, mu, D.delta, {"finite_type": True, "N_fix": int(N_fix)})
    return FiniteTypeResult(
        Dstar,
        it,
        residual,
        float(max(ratios, default=0.0)),
        int(N_fix),
        ratios,
        divisor_distance(Dstar, D),
    )


def project_with_doubling(D, N_fix=1, tol=1e-12, max_iter=100):
    """Run :func:`finite_type_project`, doubling ``N_fix`` until it contracts."""
    n = max(1, int(N_fix))
    while True:
        try:
            return finite_type_project(D, min(n, D.N), tol, max_iter)
        except ContractionError:
            if n >= D.N:
                raise
            n *= 2
