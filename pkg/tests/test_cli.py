import json

import numpy as np
import pytest

from sinh_spectral.cli import RunConfig, emit_plot_csv, parse_lambda_grid, read_plot_csv, run_command, strip_decay_report
from sinh_spectral.errors import ValidationError
from sinh_spectral.potentials import PotentialModel, make_constant_potential
from sinh_spectral.reconstruction import reconstruct_monodromy
from sinh_spectral.spectral_extract import find_branch_points, vacuum_divisor
from sinh_spectral.vacuum_geometry import vacuum_lattice


def write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture()
def vacuum_file(tmp_path):
    return write(tmp_path / "vacuum.json", PotentialModel.vacuum().to_json())


@pytest.fixture()
def cos_file(tmp_path):
    return write(tmp_path / "cos.json", PotentialModel.cosine(0.3).to_json())


def matrix(entry):
    return np.array([[complex(*z) for z in row] for row in entry])


def test_forward_on_the_lattice(tmp_path, vacuum_file):
    out = str(tmp_path / "m.json")
    assert run_command(["forward", "--potential", vacuum_file, "--lambda-grid", "lattice:3", "--out", out]) == 0
    data = json.loads(open(out).read())
    for k, s in zip(range(-3, 4), data["samples"]):
        assert complex(*s["lambda"]) == pytest.approx(vacuum_lattice(k))
        assert np.allclose(matrix(s["M"]), (-1) ** k * np.eye(2), atol=1e-9)


def test_outputs_are_deterministic(tmp_path, cos_file):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.json"
        csv = tmp_path / f"{name}.csv"
        assert run_command(["extract", "--potential", cos_file, "--N", "4", "--out", str(out), "--csv", str(csv)]) == 0
        outs.append((out.read_bytes(), csv.read_bytes()))
    assert outs[0] == outs[1]


def test_extract_reconstruct_and_finite_type(tmp_path, cos_file):
    div = str(tmp_path / "d.json")
    curve = str(tmp_path / "c.json")
    assert run_command(["extract", "--potential", cos_file, "--N", "8", "--out", div, "--curve-out", curve]) == 0
    rec = str(tmp_path / "r.json")
    assert run_command(["reconstruct", "--divisor", div, "--out", rec, "--lambda-grid", "points:3+1j,40-2j"]) == 0
    samples = json.loads(open(rec).read())["samples"]
    assert len(samples) == 2
    assert all(s["det_defect"] < 1e-8 for s in samples)
    ft = str(tmp_path / "ft.json")
    assert run_command(["finite-type", "--divisor", div, "--N", "8", "--nfix", "3", "--out", ft]) == 0
    assert json.loads(open(ft).read())["N"] == 8


def test_roundtrip_reports_small_deviation(cos_file, capsys):
    assert run_command(["roundtrip", "--potential", cos_file, "--N", "16", "--samples", "10"]) == 0
    err = float(capsys.readouterr().out.split(":")[1])
    assert err <= 1e-4


def test_flow_and_jacobi_write_csv(tmp_path):
    D = vacuum_divisor(3)
    div = write(tmp_path / "d.json", json.dumps(D.to_dict()))
    out = str(tmp_path / "f.csv")
    assert run_command(["flow", "--divisor", div, "--t", "0.1", "--out", out]) == 0
    cols = read_plot_csv(out)
    assert np.array_equal(cols["lambda_re"], D.lam.real)
    curve = write(tmp_path / "c.json", json.dumps(find_branch_points(reconstruct_monodromy(D), 3).to_dict()))
    abel = str(tmp_path / "a.csv")
    assert run_command(["jacobi", "--curve", curve, "--divisor", div, "--out", abel]) == 0
    # the vacuum curve has genus zero: a header-only table
    cols = read_plot_csv(abel)
    assert "phi_re" in cols
    assert all(v.size == 0 for v in cols.values())


def test_exit_codes(tmp_path, vacuum_file):
    assert run_command([]) == 1
    assert run_command(["forward"]) == 1
    assert run_command(["forward", "--potential", str(tmp_path / "missing.json")]) == 1
    bad = write(tmp_path / "bad.json", "{not json")
    assert run_command(["forward", "--potential", bad]) == 1
    assert run_command(["forward", "--potential", vacuum_file, "--delta", "5"]) == 1
    assert run_command(["forward", "--potential", vacuum_file, "--lambda-grid", "grid:3"]) == 1
    cfg = write(tmp_path / "cfg.json", json.dumps({"colour": 1}))
    assert run_command(["forward", "--potential", vacuum_file, "--config", cfg]) == 1
    # a repeated divisor point is a numerical failure of the reconstruction
    D = vacuum_divisor(2)
    lam = D.lam.copy()
    lam[D.index(1)] = lam[D.index(2)]
    div = write(tmp_path / "d.json", json.dumps(D.with_points(lam=lam).to_dict()))
    assert run_command(["reconstruct", "--divisor", div, "--out", str(tmp_path / "r.json")]) == 2


def test_config_file_and_flags(tmp_path):
    cfg = write(tmp_path / "cfg.json", json.dumps({"N": 6, "seed": 3}))
    base = RunConfig.from_file(cfg)
    assert (base.N, base.seed, base.N_fix) == (6, 3, 4)
    with pytest.raises(ValidationError):
        RunConfig(N=2, N_fix=3).validate()


def test_lambda_grids():
    assert np.allclose(parse_lambda_grid("lattice:1"), vacuum_lattice(np.arange(-1, 2)))
    assert parse_lambda_grid("outside:3:7").size == 7
    assert np.array_equal(parse_lambda_grid("points:1+2j, -3"), np.array([1 + 2j, -3]))
    with pytest.raises(ValidationError):
        parse_lambda_grid("points:")


def test_csv_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    z = rng.standard_normal(20) * 10.0 ** rng.integers(-300, 300, 20) + 1j * rng.standard_normal(20)
    path = str(tmp_path / "x.csv")
    emit_plot_csv({"k": np.arange(20), "z": z}, path)
    cols = read_plot_csv(path)
    assert list(cols) == ["k", "z_re", "z_im"]
    assert np.array_equal(cols["z_re"], z.real)
    assert np.array_equal(cols["z_im"], z.imag)
    assert np.array_equal(cols["k"], np.arange(20))


def test_empty_csv_is_header_only(tmp_path):
    path = tmp_path / "e.csv"
    emit_plot_csv({"k": [], "gap": []}, str(path))
    assert path.read_text() == "k,gap\n"
    with pytest.raises(ValidationError):
        emit_plot_csv({"a": [1], "b": [1, 2]}, str(path))


def test_strip_decay_of_constant_data(constant_curve8, constant_divisor8):
    rep = strip_decay_report(make_constant_potential(np.exp(-0.1)), 1.0, 8, curve=constant_curve8, divisor=constant_divisor8)
    assert np.all(rep.gaps[rep.ks != 0] == 0)
    assert rep.gaps[rep.ks == 0][0] > 0
    assert rep.y_eff == np.inf


def test_strip_decay_of_cosine(cos_potential, cos_curve16, cos_divisor16):
    rep = strip_decay_report(cos_potential, 1.0, 16, curve=cos_curve16, divisor=cos_divisor16)
    assert rep.slope < 0
    assert rep.monotone
    with pytest.raises(ValidationError):
        strip_decay_report(cos_potential, 0.0, 16, curve=cos_curve16, divisor=cos_divisor16)


def test_strip_decay_of_finite_type(finite_type_setup):
    curve, _, D0 = finite_type_setup
    from sinh_spectral.spectral_extract import SpectralCurveModel

    model = SpectralCurveModel(curve.N, curve.kappa1, curve.kappa2)
    rep = strip_decay_report(None, 1.0, curve.N, curve=model, divisor=D0)
    assert np.all(rep.gaps[np.abs(rep.ks) > 4] == 0)
