"""Small numerical helpers shared by the spectral modules."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConvergenceError
from .vacuum_geometry import dzeta_dlambda

__all__ = [
    "cauchy_derivatives",
    "gauss_legendre_01",
    "local_radius",
    "newton",
]


def local_radius(lam, zeta_radius=0.05):
    """A disc radius around ``lam`` that corresponds to ``zeta_radius`` in zeta.

    Capped at a quarter of ``|lam|`` so that the disc never reaches 0 and
    regular near the critical point ``lam = 1`` where ``d zeta / d lam = 0``.
    """
    lam = np.asarray(lam, dtype=complex)
    dz = np.abs(dzeta_dlambda(lam))
    with np.errstate(divide="ignore"):
        r = zeta_radius / dz
    return np.minimum(r, 0.25 * np.abs(lam))


def cauchy_derivatives(func, lam, order, radius=None, npts=16, center=True):
    """Taylor derivatives of a holomorphic evaluator by the Cauchy formula.

    Parameters
    ----------
    func : callable
        Vectorised evaluator; ``func(z)`` for ``z`` of shape ``(m,)`` returns
        shape ``(m, ...)``.
    lam : array_like
        Points of shape ``(n,)``.
    order : int
        Highest derivative returned.
    radius : array_like, optional
        Circle radii; defaults to :func:`local_radius`.
    npts : int
        Trapezoid nodes on each circle.
    center : bool
        Evaluate the value at the centre directly; when False it is the
        circle mean, for functions with a removable singularity there.

    Returns
    -------
    ndarray
        Shape ``(order + 1, n, ...)``: value, first derivative, ...
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if radius is None:
        radius = local_radius(lam)
    radius = np.broadcast_to(np.asarray(radius, dtype=float), lam.shape)
    if center:
        f0 = np.asarray(func(lam))
        if order == 0:
            return f0[None]
    theta = 2.0 * np.pi * np.arange(npts) / npts
    e = np.exp(1j * theta)
    pts = lam[:, None] + radius[:, None] * e[None, :]
    vals = np.asarray(func(pts.ravel()))
    tail = vals.shape[1:]
    vals = vals.reshape((lam.size, npts) + tail)
    out = [f0 if center else np.mean(vals, axis=1)]
    for m in range(1, order + 1):
        w = np.exp(-1j * m * theta).reshape((1, npts) + (1,) * len(tail))
        coef = np.mean(vals * w, axis=1)
        scale = (math.factorial(m) / radius**m).reshape((-1,) + (1,) * len(tail))
        out.append(coef * scale)
    return np.stack(out)


def newton(fun, x0, rtol=1e-13, atol=0.0, maxiter=50, name="Newton"):
    """Vectorised Newton iteration for complex roots.

    ``fun(x)`` returns ``(f, fprime)`` for an array ``x``. Iteration stops
    per component once ``|step| <= rtol |x| + atol``.

    Returns
    -------
    x : ndarray
    iterations : int
    """
    x = np.array(x0, dtype=complex, copy=True)
    active = np.ones(x.shape, dtype=bool)
    for it in range(1, maxiter + 1):
        idx = np.nonzero(active)
        f, fp = fun(x[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / fp
        if not np.all(np.isfinite(step)):
            raise ConvergenceError(f"{name}: derivative vanished near {x[idx][~np.isfinite(step)]}")
        x[idx] = x[idx] - step
        done = np.abs(step) <= rtol * np.abs(x[idx]) + atol
        sub = active[idx]
        sub[done] = False
        active[idx] = sub
        if not np.any(active):
            return x, it
    raise ConvergenceError(f"{name}: no convergence after {maxiter} steps at {x[active]}")


def gauss_legendre_01(n):
    """Gauss-Legendre nodes and weights on ``[0, 1]``."""
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w
