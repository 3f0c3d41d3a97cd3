"""Spectral data of a monodromy: divisor, branch points and diagnostics.

The divisor consists of the zeros ``lam_k`` of the lower-left entry ``c``
together with ``mu_k = a(lam_k)``. Branch points are the zeros of
``Delta^2 - 4``; within each excluded domain there are two of them, located
around the zero ``eta_k`` of ``Delta'``. Every located zero is validated by
an argument-principle count on the boundary of its excluded domain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ContourTooCloseError,
    ConvergenceError,
    CountMismatchError,
    ValidationError,
)
from .numerics import local_radius, newton
from .vacuum_geometry import (
    DEFAULT_DELTA,
    contour_excluded_domain,
    in_annulus,
    in_excluded_domain,
    lambda_from_zeta,
    seq_norm,
    vacuum_lattice,
    weight_w,
    zeta,
)

__all__ = [
    "Divisor",
    "SpectralCurveModel",
    "WeightedWindow",
    "asymptotic_report",
    "count_zeros_contour",
    "divisor_distance",
    "divisor_window_norms",
    "find_branch_points",
    "find_divisor",
    "fourier_remainder",
    "is_tame",
    "vacuum_divisor",
]


def _pair(z):
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _unpair(v, what):
    try:
        re, im = v
        return complex(float(re), float(im))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed complex value for {what}: {v!r}") from exc


# -- data types -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Divisor:
    """Divisor points ``(lam_k, mu_k)`` for ``|k| <= N`` with vacuum tail.

    Beyond the window the points are ``(lambda_{k,0}, (-1)^k)``.
    """

    N: int
    lam: np.ndarray
    mu: np.ndarray
    delta: float = DEFAULT_DELTA
    info: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=complex).copy()
        mu = np.asarray(self.mu, dtype=complex).copy()
        if lam.shape != (2 * self.N + 1,) or mu.shape != lam.shape:
            raise ValidationError("divisor arrays must have length 2N+1")
        if np.any(lam == 0) or np.any(mu == 0):
            raise ValidationError("divisor points must have nonzero lambda and mu")
        lam.setflags(write=False)
        mu.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    @property
    def ks(self):
        return np.arange(-self.N, self.N + 1)

    def index(self, k):
        if abs(k) > self.N:
            raise IndexError(k)
        return int(k) + self.N

    def point(self, k):
        """``(lam_k, mu_k)``, including the vacuum tail for ``|k| > N``."""
        if abs(k) > self.N:
            return complex(vacuum_lattice(k)), complex((-1) ** abs(k))
        i = self.index(k)
        return complex(self.lam[i]), complex(self.mu[i])

    def with_points(self, lam=None, mu=None, **info):
        return replace(
            self,
            lam=self.lam if lam is None else lam,
            mu=self.mu if mu is None else mu,
            info={**self.info, **info},
        )

    def extended(self, N):
        """The same divisor written on a larger window (tail made explicit)."""
        if N < self.N:
            raise ValidationError("cannot shrink a divisor window")
        ks = np.arange(-N, N + 1)
        lam = vacuum_lattice(ks).astype(complex)
        mu = np.where(ks % 2 == 0, 1.0, -1.0).astype(complex)
        lam[N - self.N : N + self.N + 1] = self.lam
        mu[N - self.N : N + self.N + 1] = self.mu
        return Divisor(N, lam, mu, self.delta, dict(self.info))

    def involution(self):
        """Image under the hyperelliptic involution ``mu -> 1/mu``."""
        return self.with_points(mu=1.0 / self.mu)

    def to_dict(self):
        return {
            "N": int(self.N),
            "delta": float(self.delta),
            "points": [
                {"k": int(k), "lambda": _pair(l), "mu": _pair(m)}
                for k, l, m in zip(self.ks, self.lam, self.mu)
            ],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            N = int(data["N"])
            delta = float(data.get("delta", DEFAULT_DELTA))
            pts = {int(p["k"]): p for p in data["points"]}
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed divisor: {exc}") from exc
        if sorted(pts) != list(range(-N, N + 1)):
            raise ValidationError("divisor must list every k in -N..N exactly once")
        lam = [_unpair(pts[k]["lambda"], f"lambda_{k}") for k in range(-N, N + 1)]
        mu = [_unpair(pts[k]["mu"], f"mu_{k}") for k in range(-N, N + 1)]
        return cls(N, np.array(lam), np.array(mu), delta)


def vacuum_divisor(N, delta=DEFAULT_DELTA):
    ks = np.arange(-N, N + 1)
    mu = np.where(ks % 2 == 0, 1.0, -1.0)
    return Divisor(N, vacuum_lattice(ks), mu, delta)


@dataclass(frozen=True, eq=False)
class SpectralCurveModel:
    """Branch points ``kappa_{k,1}, kappa_{k,2}`` of ``Delta^2 - 4`` for ``|k| <= N``.

    ``gap_raw`` holds the measured ``|kappa_{k,1} - kappa_{k,2}|`` before
    closed gaps are collapsed to a double point; ``closed`` flags them.
    """

    N: int
    kappa1: np.ndarray
    kappa2: np.ndarray
    delta: float = DEFAULT_DELTA
    eta: np.ndarray | None = None
    closed: np.ndarray | None = None
    gap_raw: np.ndarray | None = None
    trace: object = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("kappa1", "kappa2"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.shape != (2 * self.N + 1,):
                raise ValidationError("curve arrays must have length 2N+1")
            object.__setattr__(self, name, arr)
        if self.closed is None:
            object.__setattr__(self, "closed", self.kappa1 == self.kappa2)
        if self.gap_raw is None:
            object.__setattr__(self, "gap_raw", np.abs(self.kappa1 - self.kappa2))

    @property
    def ks(self):
        return np.arange(-self.N, self.N + 1)

    @property
    def kappa_mid(self):
        return 0.5 * (self.kappa1 + self.kappa2)

    @property
    def gaps(self):
        return np.abs(self.kappa1 - self.kappa2)

    def open_indices(self):
        return [int(k) for k, c in zip(self.ks, self.closed) if not c]

    def branch(self, k):
        i = int(k) + self.N
        return complex(self.kappa1[i]), complex(self.kappa2[i])

    def to_dict(self):
        return {
            "N": int(self.N),
            "delta": float(self.delta),
            "points": [
                {"k": int(k), "kappa1": _pair(a), "kappa2": _pair(b), "closed": bool(c)}
                for k, a, b, c in zip(self.ks, self.kappa1, self.kappa2, self.closed)
            ],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            N = int(data["N"])
            delta = float(data.get("delta", DEFAULT_DELTA))
            pts = {int(p["k"]): p for p in data["points"]}
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed curve: {exc}") from exc
        if sorted(pts) != list(range(-N, N + 1)):
            raise ValidationError("curve must list every k in -N..N exactly once")
        k1 = np.array([_unpair(pts[k]["kappa1"], "kappa1") for k in range(-N, N + 1)])
        k2 = np.array([_unpair(pts[k]["kappa2"], "kappa2") for k in range(-N, N + 1)])
        closed = np.array([bool(pts[k].get("closed", k1[i] == k2[i])) for i, k in enumerate(range(-N, N + 1))])
        return cls(N, k1, k2, delta, closed=closed)


@dataclass(frozen=True)
class WeightedWindow:
    """A window ``a_k`` (``k = -N..N``) together with its weighted norm."""

    values: np.ndarray
    n: int
    m: int

    @property
    def norm(self):
        return seq_norm(self.values, self.n, self.m)


# -- contour counting --------------------------------------------------------


def _winding(f, fp, dlam, threshold):
    af = np.abs(f)
    scale = np.max(af)
    if not np.all(np.isfinite(f)) or scale == 0 or np.min(af) < threshold * scale:
        raise ContourTooCloseError("function nearly vanishes on the contour")
    if fp is not None:
        val = np.mean(fp / f * dlam) / 1j
    else:
        # discrete argument principle: sum of principal argument increments
        ratio = np.roll(f, -1) / f
        val = np.sum(np.angle(ratio)) / (2.0 * np.pi)
    return val


def count_zeros_contour(f, contour, quad_n=64, fprime=None, threshold=1e-12, max_n=1024):
    """Number of zeros of ``f`` inside a closed contour.

    Parameters
    ----------
    f : callable
        Holomorphic evaluator, vectorised over ``lam``.
    contour : callable
        ``contour(n) -> (lam, dlam_dtheta)`` at ``n`` equispaced parameters
        of a counterclockwise closed curve parametrised over ``[0, 2 pi)``.
    quad_n : int
        Initial number of trapezoid nodes; doubled until the quadrature
        value is within 0.1 of an integer.
    fprime : callable, optional
        Derivative of ``f``. Without it the winding of ``f`` is summed from
        argument increments between consecutive samples.

    Returns
    -------
    int
    """
    n = int(quad_n)
    while True:
        lam, dlam = contour(n)
        fv = np.asarray(f(lam))
        fpv = None if fprime is None else np.asarray(fprime(lam))
        val = _winding(fv, fpv, dlam, threshold)
        k = int(round(float(np.real(val))))
        if abs(val - k) < 0.1:
            return k
        n *= 2
        if n > max_n:
            raise ConvergenceError(f"contour quadrature did not settle (value {val})")


def _domain_contour(k, delta):
    return lambda n: contour_excluded_domain(k, delta, n)


def _contour_counts(M, ks, delta, quad_n=64):
    """Counts of zeros of ``c`` and of ``Delta^2 - 4`` in each ``U_{k,delta}``."""
    lams, dlams = zip(*(contour_excluded_domain(int(k), delta, quad_n) for k in ks))
    lam = np.concatenate(lams)
    dlam = np.concatenate(dlams)
    D = M.evaluate(lam, 1)
    a, b, c, d = D[..., 0, 0], D[..., 0, 1], D[..., 1, 0], D[..., 1, 1]
    q = (a[0] - d[0]) ** 2 + 4.0 * b[0] * c[0]
    tr = a + d
    qp = 2.0 * tr[0] * tr[1]
    cc, qc = {}, {}
    for i, k in enumerate(ks):
        sl = slice(i * quad_n, (i + 1) * quad_n)
        vc = _winding(c[0][sl], c[1][sl], dlam[sl], 1e-13)
        vq = _winding(q[sl], qp[sl], dlam[sl], 1e-13)
        cc[int(k)] = int(round(float(vc.real)))
        qc[int(k)] = int(round(float(vq.real)))
        if abs(vc - cc[int(k)]) > 0.1 or abs(vq - qc[int(k)]) > 0.1:
            raise ConvergenceError(f"contour quadrature unresolved for k={k}")
    return cc, qc


def contour_counts(M, N, delta=DEFAULT_DELTA, quad_n=64):
    """Zero counts of ``c`` and ``Delta^2 - 4`` per excluded domain, ``|k| <= N``."""
    return _contour_counts(M, np.arange(-N, N + 1), delta, quad_n)


# -- divisor extraction ------------------------------------------------------


def _annulus_seeds(k, nr=4, nt=24):
    ak = abs(k)
    rmin = max(ak - 0.5, 0.05) * np.pi if ak else 0.1
    rmax = (ak + 0.5) * np.pi
    r = np.linspace(rmin, rmax, nr + 2)[1:-1]
    t = np.pi * (np.arange(nt) + 0.5) / nt
    z = (r[:, None] * np.exp(1j * t[None, :])).ravel()
    if k == 0:
        return np.concatenate([lambda_from_zeta(z, True), lambda_from_zeta(z, False)])
    return lambda_from_zeta(z, outer=k > 0)


def _compact_search(M, k, entry, rtol):
    """Global search for zeros of an entry inside the annulus ``S_k``."""

    def fun(x):
        D = M.evaluate(x, 1)
        return D[0][..., entry[0], entry[1]], D[1][..., entry[0], entry[1]]

    found = []
    for seed in _annulus_seeds(k):
        try:
            root, _ = newton(fun, np.array([seed]), rtol=rtol, maxiter=40)
        except ConvergenceError:
            continue
        r = complex(root[0])
        if r == 0 or not in_annulus(r, k):
            continue
        if all(abs(r - f) > 1e-8 * max(1.0, abs(r)) for f in found):
            found.append(r)
    return found


def find_divisor(M, N, delta=DEFAULT_DELTA, tol=1e-13, quad_n=64, compact_fallback=True):
    """Divisor of a monodromy on the window ``|k| <= N``.

    Each ``lam_k`` is found by Newton's method on ``c`` seeded at
    ``lambda_{k,0}`` and validated by a zero count of ``c`` on the boundary
    of ``U_{k,delta}``; then ``mu_k = a(lam_k)``.

    Parameters
    ----------
    M : MonodromyFunction
    N : int
    delta : float
        Excluded-domain radius.
    tol : float
        Relative Newton step tolerance.
    quad_n : int
        Contour nodes per excluded domain.
    compact_fallback : bool
        When a zero is not found in its excluded domain, search the annulus
        ``S_k`` instead; raise if that does not produce exactly one zero.

    Raises
    ------
    CountMismatchError
        If a zero escaped its excluded domain and the fallback failed.
    """
    if N < 0:
        raise ValidationError("N must be nonnegative")
    ks = np.arange(-N, N + 1)

    def fun(x):
        D = M.evaluate(x, 1)
        return D[0][..., 1, 0], D[1][..., 1, 0]

    lam, iters = newton(fun, vacuum_lattice(ks), rtol=tol, maxiter=60, name="divisor Newton")
    counts, _ = _contour_counts(M, ks, delta, quad_n)
    flags = {}
    for i, k in enumerate(ks):
        inside = bool(in_excluded_domain(lam[i], int(k), delta))
        if counts[int(k)] == 1 and inside:
            continue
        if not compact_fallback:
            raise CountMismatchError(f"k={k}: {counts[int(k)]} zeros of c in U_k (Newton inside: {inside})")
        roots = _compact_search(M, int(k), (1, 0), tol)
        if len(roots) != 1:
            raise CountMismatchError(f"k={k}: found {len(roots)} zeros of c in the annulus S_k")
        lam[i] = roots[0]
        flags[int(k)] = "compact"
    D = M.evaluate(lam, 0)[0]
    mu = D[:, 0, 0]
    return Divisor(
        int(N),
        lam,
        mu,
        float(delta),
        {
            "newton_iterations": int(iters),
            "det_defect": float(np.max(np.abs(D[:, 0, 0] * D[:, 1, 1] - 1.0))),
            "eigen_defect": float(np.max(np.abs(D[:, 0, 0] + D[:, 1, 1] - mu - 1.0 / mu))),
            "compact": flags,
        },
    )


# -- branch points -------------------------------------------------------------


def closed_gap_threshold(kappa_mid):
    return np.maximum(1e-9, 1e-6 * np.abs(kappa_mid))


def find_branch_points(M, N, delta=DEFAULT_DELTA, tol=1e-13, quad_n=64, validate=True):
    """Branch points of the spectral curve on the window ``|k| <= N``.

    For each ``k`` the zero ``eta_k`` of ``Delta'`` is located by Newton's
    method; the quadratic model of ``Delta^2 - 4`` around ``eta_k`` gives the
    two branch points, which are refined by Newton's method when the gap is
    large enough for that to be well conditioned. Gaps below
    :func:`closed_gap_threshold` are recorded as double points.

    Raises
    ------
    CountMismatchError
        If an excluded domain does not contain exactly two zeros of
        ``Delta^2 - 4`` (more than two means a zero of order three or more
        is forming).
    """
    ks = np.arange(-N, N + 1)

    def dfun(x):
        t = M.trace(x, 2)
        return t[1], t[2]

    eta, _ = newton(dfun, vacuum_lattice(ks), rtol=tol, maxiter=60, name="critical point Newton")
    Q = M.discriminant(eta, 2)
    q, q2 = Q[0], Q[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        half = np.sqrt(-2.0 * q / q2)
    if not np.all(np.isfinite(half)):
        raise ConvergenceError("degenerate quadratic model at a critical point of Delta")
    k1 = eta - half
    k2 = eta + half
    # Newton refinement where the two roots are well separated
    scale = local_radius(eta, 1.0)
    refine = np.abs(half) > 1e-4 * scale
    if np.any(refine):

        def qfun(x):
            Q = M.discriminant(x, 1)
            return Q[0], Q[1]

        idx = np.nonzero(refine)[0]
        seeds = np.concatenate([k1[idx], k2[idx]])
        roots, _ = newton(qfun, seeds, rtol=tol, maxiter=60, name="branch point Newton")
        k1[idx], k2[idx] = roots[: idx.size], roots[idx.size :]
    gap_raw = np.abs(k1 - k2)
    mid = 0.5 * (k1 + k2)
    closed = gap_raw <= closed_gap_threshold(mid)
    k1 = np.where(closed, eta, k1)
    k2 = np.where(closed, eta, k2)
    # label ordering: real part, then imaginary part
    swap = (k1.real > k2.real) | ((k1.real == k2.real) & (k1.imag > k2.imag))
    k1, k2 = np.where(swap, k2, k1), np.where(swap, k1, k2)
    if validate:
        _, qc = _contour_counts(M, ks, delta, quad_n)
        for i, k in enumerate(ks):
            inside = in_excluded_domain(np.array([k1[i], k2[i]]), int(k), delta)
            if qc[int(k)] != 2 or not np.all(inside):
                raise CountMismatchError(
                    f"k={k}: {qc[int(k)]} zeros of Delta^2-4 in U_k (located inside: {bool(np.all(inside))})"
                )
    return SpectralCurveModel(int(N), k1, k2, float(delta), eta=eta, closed=closed, gap_raw=gap_raw, trace=M)


# -- distances and diagnostics --------------------------------------------------


def _lambda_weights(N):
    ks = np.arange(-N, N + 1).astype(float)
    w = np.ones_like(ks)
    w[ks > 0] = 1.0 / ks[ks > 0]
    w[ks < 0] = np.abs(ks[ks < 0]) ** 3
    return w


def divisor_window_norms(D):
    """``(||lam_k - lambda_{k,0}||_{l2(-1,3)}, ||mu_k - (-1)^k||_{l2(0,0)})``."""
    ks = D.ks
    dl = D.lam - vacuum_lattice(ks)
    dm = D.mu - np.where(ks % 2 == 0, 1.0, -1.0)
    return seq_norm(dl, -1, 3), seq_norm(dm, 0, 0)


def divisor_distance(D1, D2, compact=2):
    """Distance of two divisors on the same window.

    The infimum runs over permutations of the indices ``|k| <= compact``
    (identity elsewhere) of ``||lam1 - lam2||^2_{l2(-1,3)} +
    ||mu1 - mu2||^2_{l2(0,0)}``.
    """
    if D1.N != D2.N:
        N = max(D1.N, D2.N)
        D1, D2 = D1.extended(N), D2.extended(N)
    N = D1.N
    w = _lambda_weights(N)
    base_l = np.abs(w * (D1.lam - D2.lam)) ** 2
    base_m = np.abs(D1.mu - D2.mu) ** 2
    K = min(compact, N)
    idx = np.arange(N - K, N + K + 1)
    rest = np.sum(np.delete(base_l + base_m, idx))
    best = np.inf
    for perm in itertools.permutations(idx):
        perm = np.array(perm)
        val = np.sum(np.abs(w[idx] * (D1.lam[idx] - D2.lam[perm])) ** 2)
        val += np.sum(np.abs(D1.mu[idx] - D2.mu[perm]) ** 2)
        best = min(best, val)
    return float(np.sqrt(rest + best))


def is_tame(D, tol=1e-10):
    """True iff the window points ``lam_k`` are pairwise separated by more than ``tol``."""
    lam = D.lam
    diff = np.abs(lam[:, None] - lam[None, :])
    np.fill_diagonal(diff, np.inf)
    return bool(np.all(diff > tol))


def fourier_remainder(p, k, M=None, tol=1e-12):
    """Second-order remainder of ``(-1)^k M(lambda_{k,0})``.

    Subtracts the diagonal ``diag(upsilon, 1/upsilon)`` (swapped for
    ``k < 0``) and the first-order term built from the cosine and sine
    Fourier coefficients of ``u_z`` (``k > 0``) or ``-u_zbar`` (``k < 0``).
    The returned matrix holds ``r11, r12, r21, r22`` with the
    ``lambda_{k,0}^{+-1/2}`` factors of the off-diagonal entries removed.
    """
    from .monodromy import ODEMonodromy

    k = int(k)
    if k == 0:
        raise ValidationError("the Fourier remainder is defined for |k| >= 1")
    if M is None:
        M = ODEMonodromy(p, tol)
    lk = complex(vacuum_lattice(k))
    sk = np.sqrt(lk)
    tau = p.boundary_tau()
    ups = p.boundary_upsilon()
    Mk = (-1) ** abs(k) * M(lk)
    if k > 0:
        a, b = p.uz_fourier(k)
        base = np.array([[ups, 0], [0, 1 / ups]])
        first = 0.5 * np.array([[-ups * a, b / (sk * tau)], [sk * tau * b, a / ups]])
    else:
        a, b = p.minus_uzbar_fourier(k)
        base = np.array([[1 / ups, 0], [0, ups]])
        first = 0.5 * np.array([[-a / ups, tau * b / sk], [sk * b / tau, ups * a]])
    R = Mk - base - first
    return np.array([[R[0, 0], sk * R[0, 1]], [R[1, 0] / sk, R[1, 1]]])


def _report_samples(k, delta, n=48):
    """Samples of ``S_k`` outside the excluded domain (boundary plus a ring)."""
    ak = abs(k)
    t = np.pi * (np.arange(n) + 0.5) / n
    pts = []
    radii = [(ak + 0.5) * np.pi]
    if ak:
        radii.append((ak - 0.5) * np.pi)
    for r in radii:
        z = r * np.exp(1j * t)
        pts.append(z)
    z = ak * np.pi + (delta + 1e-9) * np.exp(2j * t)
    pts.append(z)
    z = np.concatenate(pts)
    if k == 0:
        lam = np.concatenate([lambda_from_zeta(z, True), lambda_from_zeta(z, False)])
    else:
        lam = lambda_from_zeta(z, outer=k > 0)
    keep = ~in_excluded_domain(lam, k, delta)
    return lam[keep]


def asymptotic_report(f, f0, s, n, m, N, delta=DEFAULT_DELTA, samples=48):
    """Window of ``a_k = sup |f - f0| / w^s`` over sampled ``S_k`` outside ``U_k``.

    By the maximum principle the supremum over ``S_k`` minus the excluded
    domain is attained on its boundary, which is what is sampled.
    """
    ks = np.arange(-N, N + 1)
    pts = [_report_samples(int(k), delta, samples) for k in ks]
    lam = np.concatenate(pts)
    diff = np.abs(np.asarray(f(lam)) - np.asarray(f0(lam))) / weight_w(lam) ** s
    vals = np.empty(ks.size)
    pos = 0
    for i, p in enumerate(pts):
        vals[i] = np.max(diff[pos : pos + p.size])
        pos += p.size
    return WeightedWindow(vals, n, m)


__all__ += ["closed_gap_threshold", "contour_counts"]
