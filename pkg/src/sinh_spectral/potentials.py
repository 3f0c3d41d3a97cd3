"""Periodic Cauchy data ``(u, u_y)`` stored as trigonometric polynomials.

A potential is a pair of coefficient windows ``u_hat[j]`` and ``uy_hat[j]``
for ``j = -J..J`` with ``u(x) = sum_j u_hat[j] exp(2 pi i j x)``. Evaluation
of ``u`` and its derivatives is exact, and so is the norm (by Parseval).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "PotentialModel",
    "eval_alpha_x",
    "eval_alpha_y",
    "make_constant_potential",
    "pot_norm",
]


def _as_window(coeffs, name):
    arr = np.asarray(coeffs, dtype=complex)
    if arr.ndim != 1 or arr.size % 2 != 1:
        raise ValidationError(f"{name} must be a window of odd length 2J+1")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def _pad(arr, J):
    cur = arr.size // 2
    if cur == J:
        return arr
    out = np.zeros(2 * J + 1, dtype=complex)
    out[J - cur : J + cur + 1] = arr
    return out


@dataclass(frozen=True, eq=False)
class PotentialModel:
    """Cauchy data ``(u, u_y)`` on the period ``[0, 1]``.

    Parameters
    ----------
    u_hat, uy_hat : array_like
        Fourier windows ordered ``j = -J..J``. Windows of different length
        are zero padded to the larger one.
    """

    u_hat: np.ndarray
    uy_hat: np.ndarray

    def __init__(self, u_hat, uy_hat=None):
        u = _as_window(u_hat, "u")
        uy = _as_window(np.zeros(1) if uy_hat is None else uy_hat, "uy")
        J = max(u.size, uy.size) // 2
        u, uy = _pad(u, J), _pad(uy, J)
        u.setflags(write=False)
        uy.setflags(write=False)
        object.__setattr__(self, "u_hat", u)
        object.__setattr__(self, "uy_hat", uy)

    # -- constructors -------------------------------------------------

    @classmethod
    def vacuum(cls):
        return cls([0.0], [0.0])

    @classmethod
    def constant(cls, tau):
        return make_constant_potential(tau)

    @classmethod
    def cosine(cls, eps, mode=1, uy_eps=0.0, phase=0.0):
        """``u = eps cos(2 pi mode x + phase)``, ``u_y = uy_eps cos(...)``."""
        J = int(mode)
        u = np.zeros(2 * J + 1, dtype=complex)
        uy = np.zeros(2 * J + 1, dtype=complex)
        e = np.exp(1j * phase)
        u[J + J] += 0.5 * eps * e
        u[J - J] += 0.5 * eps / e
        uy[J + J] += 0.5 * uy_eps * e
        uy[J - J] += 0.5 * uy_eps / e
        return cls(u, uy)

    # -- basic properties ---------------------------------------------

    @property
    def J(self):
        return self.u_hat.size // 2

    @property
    def modes(self):
        return np.arange(-self.J, self.J + 1)

    def _series(self, coeffs, x, order=0):
        x = np.asarray(x, dtype=float)
        w = (2j * np.pi * self.modes) ** order * coeffs
        phase = np.exp(2j * np.pi * np.multiply.outer(x, self.modes))
        return phase @ w

    def u(self, x):
        return self._series(self.u_hat, x)

    def u_x(self, x):
        return self._series(self.u_hat, x, 1)

    def u_xx(self, x):
        return self._series(self.u_hat, x, 2)

    def uy(self, x):
        return self._series(self.uy_hat, x)

    def uy_x(self, x):
        return self._series(self.uy_hat, x, 1)

    def u_z(self, x):
        """``u_z = (u_x - i u_y) / 2``."""
        return 0.5 * (self.u_x(x) - 1j * self.uy(x))

    def u_zbar(self, x):
        """``u_zbar = (u_x + i u_y) / 2``."""
        return 0.5 * (self.u_x(x) + 1j * self.uy(x))

    def boundary_tau(self):
        """``tau = exp(-(u(0) + u(1)) / 4)``."""
        return complex(np.exp(-(self.u(0.0) + self.u(1.0)) / 4.0))

    def boundary_upsilon(self):
        """``upsilon = exp((u(1) - u(0)) / 4)``; equal to 1 for periodic data."""
        return complex(np.exp((self.u(1.0) - self.u(0.0)) / 4.0))

    def is_vacuum(self):
        return not (np.any(self.u_hat) or np.any(self.uy_hat))

    def constant_value(self):
        """Return the constant value of ``u`` if the data are constant, else None."""
        J = self.J
        rest = np.delete(self.u_hat, J)
        if np.any(rest) or np.any(self.uy_hat):
            return None
        return complex(self.u_hat[J])

    # -- Fourier data of u_z ------------------------------------------

    def _uz_hat(self):
        return 0.5 * (2j * np.pi * self.modes * self.u_hat - 1j * self.uy_hat)

    def _uzbar_hat(self):
        return 0.5 * (2j * np.pi * self.modes * self.u_hat + 1j * self.uy_hat)

    def _cos_sin(self, g, k):
        J = self.J
        gp = g[J + k] if k <= J else 0.0
        gm = g[J - k] if k <= J else 0.0
        return 0.5 * (gp + gm), (gm - gp) / 2j

    def uz_fourier(self, k):
        """Cosine and sine coefficients ``(a_k, b_k)`` of ``u_z`` on ``[0, 1]``."""
        return self._cos_sin(self._uz_hat(), abs(int(k)))

    def minus_uzbar_fourier(self, k):
        """Cosine and sine coefficients of ``-u_zbar``."""
        a, b = self._cos_sin(self._uzbar_hat(), abs(int(k)))
        return -a, -b

    # -- transformations ----------------------------------------------

    def shifted(self, t):
        """The translated data ``x -> (u, u_y)(x + t)``."""
        ph = np.exp(2j * np.pi * self.modes * t)
        return PotentialModel(self.u_hat * ph, self.uy_hat * ph)

    def scaled(self, s):
        return PotentialModel(s * self.u_hat, s * self.uy_hat)

    def reflected(self):
        """Cauchy data of ``-u(conj z)``: ``(-u, u_y)`` on the real line."""
        return PotentialModel(-self.u_hat, self.uy_hat)

    def conjugated(self):
        """Cauchy data of ``conj(u(z))``."""
        return PotentialModel(np.conj(self.u_hat[::-1]), np.conj(self.uy_hat[::-1]))

    # -- serialisation ------------------------------------------------

    def to_dict(self):
        return {
            "J": int(self.J),
            "u": [[float(c.real), float(c.imag)] for c in self.u_hat],
            "uy": [[float(c.real), float(c.imag)] for c in self.uy_hat],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            J = int(data["J"])
            u = [complex(float(re), float(im)) for re, im in data["u"]]
            uy = [complex(float(re), float(im)) for re, im in data["uy"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed potential: {exc}") from exc
        if len(u) != 2 * J + 1 or len(uy) != 2 * J + 1:
            raise ValidationError("potential windows must have length 2J+1")
        return cls(u, uy)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON: {exc}") from exc
        return cls.from_dict(data)

    def digest(self):
        """Short hash of the coefficients, used as evaluator metadata."""
        h = hashlib.sha256(self.u_hat.tobytes() + self.uy_hat.tobytes())
        return h.hexdigest()[:16]


def make_constant_potential(tau):
    """Constant data ``u = -2 log(tau)``, ``u_y = 0`` (principal logarithm).

    Examples
    --------
    >>> make_constant_potential(1.0).is_vacuum()
    True
    """
    tau = complex(tau)
    if tau == 0:
        raise ValidationError("tau must be nonzero")
    return PotentialModel([-2.0 * np.log(tau)], [0.0])


def pot_norm(p):
    """Norm ``(||u||_{W^{1,2}}^2 + ||u_y||_{L^2}^2)^{1/2}`` via Parseval."""
    j = p.modes
    w = 1.0 + (2.0 * np.pi * j) ** 2
    total = np.sum(w * np.abs(p.u_hat) ** 2) + np.sum(np.abs(p.uy_hat) ** 2)
    return float(np.sqrt(total))


def _alpha(p, x, lam, part):
    lam = np.asarray(lam, dtype=complex)
    if np.any(lam == 0):
        raise ValidationError("spectral parameter must be nonzero")
    u = complex(p.u(float(x)))
    ep, em = np.exp(u / 2.0), np.exp(-u / 2.0)
    out = np.empty(lam.shape + (2, 2), dtype=complex)
    if part == "x":
        d = 1j * complex(p.uy(float(x)))
        out[..., 0, 0] = d
        out[..., 0, 1] = -ep - em / lam
        out[..., 1, 0] = ep + lam * em
        out[..., 1, 1] = -d
        return 0.25 * out
    d = -complex(p.u_x(float(x)))
    out[..., 0, 0] = d
    out[..., 0, 1] = ep - em / lam
    out[..., 1, 0] = ep - lam * em
    out[..., 1, 1] = -d
    return 0.25j * out


def eval_alpha_x(p, x, lam):
    """The ``dx`` part of the connection form at position ``x``.

    ``alpha = 1/4 [[i u_y, -e^{u/2} - lam^{-1} e^{-u/2}],
    [e^{u/2} + lam e^{-u/2}, -i u_y]]``.
    """
    return _alpha(p, x, lam, "x")


def eval_alpha_y(p, x, lam):
    """The ``dy`` part of the connection form at position ``x``.

    ``i/4 [[-u_x, e^{u/2} - lam^{-1} e^{-u/2}], [e^{u/2} - lam e^{-u/2}, u_x]]``.
    """
    return _alpha(p, x, lam, "y")
