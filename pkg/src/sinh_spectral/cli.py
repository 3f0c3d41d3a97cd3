"""Command-line entry point: configuration, JSON/CSV I/O and reports.

Subcommands
-----------
forward       sample the monodromy of a potential on a lambda grid
extract       spectral divisor and branch points of a potential
reconstruct   sample the monodromy rebuilt from a divisor
roundtrip     forward, extract and reconstruct; print the largest deviation
finite-type   project a divisor to finite type
flow          translate a divisor in x or y and write its trajectory
jacobi        canonical 1-forms and Abel coordinates of a divisor on a curve
report        strip-decay table of the gaps of a potential

Exit status is 0 on success, 1 for invalid input (including usage errors)
and 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import NumericalError, ValidationError
from .finite_type import finite_type_project
from .flows import integrate_flow
from .jacobi import TruncatedCurve, abel_map, canonical_one_forms, flow_slope_check
from .monodromy import ODEMonodromy
from .potentials import PotentialModel
from .reconstruction import reconstruct_monodromy, round_trip_deviation
from .spectral_extract import Divisor, SpectralCurveModel, find_branch_points, find_divisor
from .vacuum_geometry import DEFAULT_DELTA, sample_outside_domains, vacuum_lattice

__all__ = [
    "RunConfig",
    "StripDecayReport",
    "emit_plot_csv",
    "main",
    "parse_lambda_grid",
    "read_plot_csv",
    "run_command",
    "strip_decay_report",
]

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERIC = 2


# -- configuration ----------------------------------------------------------------


@dataclass
class RunConfig:
    """Numerical settings shared by all subcommands.

    Every field can be set in a JSON file passed with ``--config`` and
    overridden by the flag of the same name.
    """

    N: int = 16
    N_fix: int = 4
    delta: float = DEFAULT_DELTA
    ode_tol: float = 1e-12
    root_tol: float = 1e-13
    fixed_point_tol: float = 1e-12
    flow_tol: float = 1e-11
    quad_n: int = 64
    lambda_grid: str = "lattice:4"
    samples: int = 50
    seed: int = 0
    tail: str = "fit"
    out: str | None = None

    def validate(self):
        if not 0.0 < self.delta < math.pi - 0.5:
            raise ValidationError("delta must lie in (0, pi - 1/2)")
        if not self.N >= self.N_fix >= 0:
            raise ValidationError("need N >= N_fix >= 0")
        for name in ("ode_tol", "root_tol", "fixed_point_tol", "flow_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.quad_n < 4 or self.samples < 1:
            raise ValidationError("quad_n must be at least 4 and samples at least 1")
        if self.tail not in ("fit", "vacuum"):
            raise ValidationError("tail must be 'fit' or 'vacuum'")
        return self

    @classmethod
    def from_file(cls, path):
        data = _read_json(path)
        if not isinstance(data, dict):
            raise ValidationError(f"{path}: configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"{path}: unknown configuration keys {unknown}")
        try:
            return replace(cls(), **data)
        except TypeError as exc:
            raise ValidationError(f"{path}: {exc}") from exc


# -- I/O helpers --------------------------------------------------------------------


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc})") from exc


def _write_json(path, data):
    text = json.dumps(data, sort_keys=True, indent=1) + "\n"
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror}") from exc


def _pair(z):
    z = complex(z)
    return [z.real, z.imag]


def _matrix(m):
    return [[_pair(m[i, j]) for j in range(2)] for i in range(2)]


def _load_potential(path):
    data = _read_json(path)
    return PotentialModel.from_dict(data)


def _load_divisor(path):
    return Divisor.from_dict(_read_json(path))


def _load_curve(path):
    return SpectralCurveModel.from_dict(_read_json(path))


def parse_lambda_grid(spec, delta=DEFAULT_DELTA, seed=0):
    """Points described by a grid spec.

    ``lattice:K``      the vacuum double points ``lambda_{k,0}``, ``|k| <= K``
    ``outside:K:n``    ``n`` pseudo-random points of ``V_delta`` up to annulus ``K``
    ``points:z1,z2``   explicit complex numbers in Python syntax, e.g. ``3+1j``
    """
    kind, _, rest = spec.partition(":")
    try:
        if kind == "lattice":
            K = int(rest)
            return vacuum_lattice(np.arange(-K, K + 1)).astype(complex)
        if kind == "outside":
            K, n = (int(v) for v in rest.split(":"))
            return sample_outside_domains(n, K, delta, seed=seed)
        if kind == "points":
            pts = np.array([complex(v.replace(" ", "")) for v in rest.split(",") if v.strip()])
            if pts.size == 0:
                raise ValueError("no points")
            return pts
    except ValueError as exc:
        raise ValidationError(f"bad lambda grid {spec!r}: {exc}") from exc
    raise ValidationError(f"unknown lambda grid kind {kind!r}")


def _split_complex(name, values):
    arr = np.asarray(values)
    if np.iscomplexobj(arr):
        return [(f"{name}_re", arr.real), (f"{name}_im", arr.imag)]
    return [(name, arr)]


def emit_plot_csv(dataset, path):
    """Write columns to a CSV file with a header row.

    Parameters
    ----------
    dataset : mapping
        Column name to sequence; complex columns become ``name_re`` and
        ``name_im``. All columns must have the same length; an empty
        mapping or zero-length columns give a header-only file.
    path : str

    Notes
    -----
    Floats are written with ``repr``, the shortest string that reads back
    to the same double, so :func:`read_plot_csv` recovers them bit-exactly.
    """
    cols = []
    for name, values in dataset.items():
        cols.extend(_split_complex(name, values))
    lengths = {len(v) for _, v in cols}
    if len(lengths) > 1:
        raise ValidationError("all columns must have the same length")
    nrows = lengths.pop() if lengths else 0

    def cell(v):
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return repr(float(v))

    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([name for name, _ in cols])
            for i in range(nrows):
                w.writerow([cell(v[i]) for _, v in cols])
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror}") from exc


def read_plot_csv(path):
    """Read a file written by :func:`emit_plot_csv` into float columns."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return {}
    header = rows[0]
    return {name: np.array([float(r[i]) for r in rows[1:]]) for i, name in enumerate(header)}


# -- strip decay ----------------------------------------------------------------------


@dataclass
class StripDecayReport:
    """Gap sizes and their exponential fit.

    Attributes
    ----------
    ks : ndarray
    gaps : ndarray
        ``|kappa_{k,1} - kappa_{k,2}|`` (exactly 0 at double points).
    divisor_offsets : ndarray
        ``|lambda_k - kappa_{k,*}|``.
    slope : float
        Least-squares slope of ``log(gap)`` against ``|k|`` over the open
        gaps with ``k != 0``; ``nan`` if fewer than two.
    y_eff : float
        ``-slope / (2 pi)``; ``inf`` when every gap with ``k != 0`` is closed.
    y0 : float
        Strip half-height supplied by the caller.
    monotone : bool
        Whether the open gaps decrease with ``|k|`` on each side.
    note : str
    """

    ks: np.ndarray
    gaps: np.ndarray
    divisor_offsets: np.ndarray
    slope: float
    y_eff: float
    y0: float
    monotone: bool
    note: str = ""

    def dataset(self):
        return {"k": self.ks, "gap": self.gaps, "divisor_offset": self.divisor_offsets}

    def summary(self):
        return {
            "slope": self.slope,
            "y_eff": self.y_eff,
            "y0": self.y0,
            "monotone": self.monotone,
            "note": self.note,
        }


def strip_decay_report(p, y0, N, delta=DEFAULT_DELTA, tol=1e-12, curve=None, divisor=None):
    """Fit ``log |kappa_{k,1} - kappa_{k,2}| ~ const - 2 pi |k| y_eff``.

    ``curve`` and ``divisor`` may be supplied to skip the forward run (for
    instance for a finite-type divisor, whose gaps beyond ``N_fix`` are
    closed by construction).
    """
    if not y0 > 0:
        raise ValidationError("y0 must be positive")
    if curve is None or divisor is None:
        M = ODEMonodromy(p, tol=tol)
        if curve is None:
            curve = find_branch_points(M, N, delta)
        if divisor is None:
            divisor = find_divisor(M, N, delta)
    ks = curve.ks
    gaps = np.where(curve.closed, 0.0, curve.gaps)
    offsets = np.abs(divisor.lam - curve.kappa_mid) if divisor.N == curve.N else np.full(ks.size, np.nan)
    use = (ks != 0) & (gaps > 0)
    monotone = True
    for side in (ks > 0, ks < 0):
        g = gaps[side & use]
        order = np.argsort(np.abs(ks[side & use]))
        monotone &= bool(np.all(np.diff(g[order]) < 0))
    if not np.any(use):
        return StripDecayReport(ks, gaps, offsets, float("nan"), math.inf, float(y0), True, "all gaps closed: y_eff = inf")
    if np.count_nonzero(use) < 2:
        return StripDecayReport(ks, gaps, offsets, float("nan"), float("nan"), float(y0), monotone, "one open gap: no fit")
    slope = float(np.polyfit(np.abs(ks[use]), np.log(gaps[use]), 1)[0])
    y_eff = -slope / (2.0 * math.pi)
    note = "decay at least as fast as the strip bound" if y_eff >= y0 else "decay slower than the strip bound"
    return StripDecayReport(ks, gaps, offsets, slope, y_eff, float(y0), monotone, note)


# -- subcommands ----------------------------------------------------------------------


def _sample_json(M, lam, extra):
    mats = M(lam)
    samples = [
        {"lambda": _pair(l), "M": _matrix(m), "det_defect": abs(complex(np.linalg.det(m)) - 1.0)}
        for l, m in zip(lam, mats)
    ]
    return {**extra, "samples": samples}


def _cmd_forward(args, cfg):
    p = _load_potential(args.potential)
    lam = parse_lambda_grid(cfg.lambda_grid, cfg.delta, cfg.seed)
    M = ODEMonodromy(p, tol=cfg.ode_tol)
    out = cfg.out or "monodromy.json"
    _write_json(out, _sample_json(M, lam, {"source": "potential", "digest": p.digest()}))
    print(f"wrote {len(lam)} monodromy samples to {out}")


def _cmd_extract(args, cfg):
    p = _load_potential(args.potential)
    M = ODEMonodromy(p, tol=cfg.ode_tol)
    D = find_divisor(M, cfg.N, cfg.delta, tol=cfg.root_tol, quad_n=cfg.quad_n)
    out = cfg.out or "divisor.json"
    _write_json(out, D.to_dict())
    if args.curve_out:
        curve = find_branch_points(M, cfg.N, cfg.delta, tol=cfg.root_tol, quad_n=cfg.quad_n)
        _write_json(args.curve_out, curve.to_dict())
    if args.csv:
        emit_plot_csv({"k": D.ks, "lambda": D.lam, "mu": D.mu}, args.csv)
    print(f"wrote divisor with {D.lam.size} points to {out}")


def _cmd_reconstruct(args, cfg):
    D = _load_divisor(args.divisor)
    R = reconstruct_monodromy(D, args.sign, cfg.tail)
    lam = parse_lambda_grid(cfg.lambda_grid, D.delta, cfg.seed)
    out = cfg.out or "monodromy.json"
    _write_json(out, _sample_json(R, lam, {"source": "divisor", "tau": _pair(R.tau)}))
    print(f"wrote {len(lam)} monodromy samples to {out}")


def _cmd_roundtrip(args, cfg):
    p = _load_potential(args.potential)
    err = round_trip_deviation(p, cfg.N, cfg.samples, cfg.seed, cfg.ode_tol, cfg.tail)
    print(f"max relative deviation: {err:.6e}")


def _cmd_finite_type(args, cfg):
    D = _load_divisor(args.divisor)
    r = finite_type_project(D, cfg.N_fix, tol=cfg.fixed_point_tol)
    out = cfg.out or "finite_type.json"
    _write_json(out, r.divisor.to_dict())
    print(
        f"iterations {r.iterations}, contraction {r.contraction:.4g}, "
        f"residual {r.residual:.3e}, distance {r.distance:.6e}; wrote {out}"
    )


def _cmd_flow(args, cfg):
    D = _load_divisor(args.divisor)
    st = integrate_flow(D, args.dir, args.t, tol=cfg.flow_tol, tail=cfg.tail)
    nt, W = st.lam_path.shape
    t = np.repeat(st.times, W)
    k = np.tile(D.ks, nt)
    out = cfg.out or "trace.csv"
    emit_plot_csv({"t": t, "k": k, "lambda": st.lam_path.ravel(), "mu": st.mu_path.ravel()}, out)
    print(f"{nt} accepted steps, curve defect {st.on_curve_defect:.3e}; wrote {out}")


def _default_origin(curve, D):
    """Branch point ``kappa_{k,1}`` at every open gap, the double point elsewhere."""
    lam = np.where(curve.closed, curve.kappa_mid, curve.kappa1)[curve.N - D.N : curve.N + D.N + 1]
    mu = curve.trace_at(lam) / 2.0
    return Divisor(D.N, lam, mu, D.delta)


def _cmd_jacobi(args, cfg):
    model = _load_curve(args.curve)
    curve = TruncatedCurve.from_model(model)
    D_in = _load_divisor(args.divisor)
    D = curve.on_curve(D_in)
    shift = float(np.max(np.abs(D.mu - D_in.mu)))
    D0 = curve.on_curve(_load_divisor(args.origin)) if args.origin else _default_origin(curve, D)
    forms = canonical_one_forms(curve, tol=cfg.fixed_point_tol, ns=curve.open_set, quad_n=cfg.quad_n)
    phi = abel_map(curve, forms, D, D0).phi if forms else np.zeros(0, dtype=complex)
    data = {
        "n": np.array([f.n for f in forms], dtype=int),
        "phi": phi.astype(complex),
        "s_nn": np.array([f.scales[f.n] for f in forms], dtype=complex),
    }
    if args.slopes:
        kw = {"tail": "vacuum", "trace": curve.trace_at, "tol": cfg.flow_tol}
        data["slope_x"] = flow_slope_check(curve, forms, D, "x", args.slopes, **kw).astype(complex)
    out = cfg.out or "abel.csv"
    emit_plot_csv(data, out)
    print(f"genus {curve.genus}, divisor moved onto the curve by {shift:.2e}; wrote {out}")


def _cmd_report(args, cfg):
    p = _load_potential(args.potential)
    rep = strip_decay_report(p, args.y0, cfg.N, cfg.delta, cfg.ode_tol)
    out = cfg.out or "strip_decay.csv"
    emit_plot_csv(rep.dataset(), out)
    s = rep.summary()
    print(f"fitted slope {s['slope']:.6g}, y_eff {s['y_eff']:.6g}, monotone {s['monotone']}: {s['note']}; wrote {out}")


COMMANDS = {
    "forward": _cmd_forward,
    "extract": _cmd_extract,
    "reconstruct": _cmd_reconstruct,
    "roundtrip": _cmd_roundtrip,
    "finite-type": _cmd_finite_type,
    "flow": _cmd_flow,
    "jacobi": _cmd_jacobi,
    "report": _cmd_report,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"usage: {message}")


def _build_parser():
    defaults = RunConfig()
    common = _Parser(add_help=False)
    g = common.add_argument_group("configuration (defaults shown; a --config file overrides them, flags override both)")
    g.add_argument("--config", help="JSON file with RunConfig fields")
    g.add_argument("--N", type=int, help=f"window |k| <= N (default {defaults.N})")
    g.add_argument("--nfix", dest="N_fix", type=int, help=f"fixed window of finite-type projection (default {defaults.N_fix})")
    g.add_argument("--delta", type=float, help=f"excluded-domain radius in zeta (default {defaults.delta})")
    g.add_argument("--ode-tol", type=float, help=f"monodromy ODE tolerance (default {defaults.ode_tol})")
    g.add_argument("--tol", dest="fixed_point_tol", type=float, help=f"fixed-point tolerance (default {defaults.fixed_point_tol})")
    g.add_argument("--flow-tol", type=float, help=f"flow integrator tolerance (default {defaults.flow_tol})")
    g.add_argument("--quad-n", type=int, help=f"initial quadrature nodes (default {defaults.quad_n})")
    g.add_argument("--lambda-grid", help=f"lambda grid spec (default {defaults.lambda_grid!r})")
    g.add_argument("--samples", type=int, help=f"round-trip sample count (default {defaults.samples})")
    g.add_argument("--seed", type=int, help=f"random seed (default {defaults.seed})")
    g.add_argument("--tail", choices=("fit", "vacuum"), help=f"divisor tail model (default {defaults.tail})")
    g.add_argument("--out", help="output file")

    parser = _Parser(prog="sinh-spectral", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("forward", parents=[common], help="sample the monodromy of a potential")
    s.add_argument("--potential", required=True)
    s = sub.add_parser("extract", parents=[common], help="spectral divisor and branch points")
    s.add_argument("--potential", required=True)
    s.add_argument("--curve-out", help="also write the branch points")
    s.add_argument("--csv", help="also write the divisor as CSV")
    s = sub.add_parser("reconstruct", parents=[common], help="monodromy rebuilt from a divisor")
    s.add_argument("--divisor", required=True)
    s.add_argument("--sign", type=int, choices=(1, -1), default=1, help="sign of tau")
    s = sub.add_parser("roundtrip", parents=[common], help="forward, extract, reconstruct and compare")
    s.add_argument("--potential", required=True)
    s = sub.add_parser("finite-type", parents=[common], help="finite-type projection of a divisor")
    s.add_argument("--divisor", required=True)
    s = sub.add_parser("flow", parents=[common], help="translation flow of a divisor")
    s.add_argument("--divisor", required=True)
    s.add_argument("--dir", choices=("x", "y"), default="x")
    s.add_argument("--t", type=float, required=True)
    s = sub.add_parser("jacobi", parents=[common], help="Abel coordinates on a truncated curve")
    s.add_argument("--curve", required=True)
    s.add_argument("--divisor", required=True)
    s.add_argument("--origin", help="reference divisor (default: branch points and double points)")
    s.add_argument("--slopes", type=float, metavar="H", help="also report x-flow slopes with step H")
    s = sub.add_parser("report", parents=[common], help="strip-decay table of the gaps")
    s.add_argument("--potential", required=True)
    s.add_argument("--y0", type=float, default=1.0, help="strip half-height for comparison (default 1.0)")
    return parser


def _config(args):
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    names = {f.name for f in fields(RunConfig)}
    over = {k: v for k, v in vars(args).items() if k in names and v is not None}
    return replace(cfg, **over).validate()


def run_command(argv):
    """Run one subcommand and return the exit status."""
    try:
        args = _build_parser().parse_args(argv)
        cfg = _config(args)
        COMMANDS[args.command](args, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def main(argv=None):
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":  # pragma: no cover
    main()

