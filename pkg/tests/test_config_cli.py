import subprocess
import sys
import textwrap

import numpy as np
import pytest

from airyspline.cases import build_case
from airyspline.cli import main
from airyspline.config import case_from_mapping, load_config
from airyspline.errors import ConfigurationError
from airyspline.export import HEADER, FieldSampleGrid, sample_and_export, sample_rows
from airyspline.solver import solve

PLATE = textwrap.dedent("""
    [case]
    name = "plate"

    [splines]
    degrees = [3, 3]
    net = [5, 5]

    [material.steel]
    kind = "isotropic-plane-stress"
    E = 1.0
    nu = 0.25

    [patches.plate]
    mapping = "rectangle"
    params = { x0 = 0.0, y0 = 0.0, width = 2.0, height = 1.0 }
    material = "steel"

    [bcs.top]
    patch = "plate"
    side = "eta=1"
    kind = "traction-pointwise"
    target = [0.0, 1.0]

    [bcs.bottom]
    patch = "plate"
    side = "eta=0"
    kind = "traction-pointwise"
    target = [0.0, -1.0]

    [bcs.left]
    patch = "plate"
    side = "xi=0"
    kind = "traction-pointwise"
    target = [0.0, 0.0]

    [bcs.right]
    patch = "plate"
    side = "xi=1"
    kind = "traction-pointwise"
    target = [0.0, 0.0]

    [solver]
    mode = "two-stage"
""")


@pytest.fixture
def plate_file(tmp_path):
    path = tmp_path / "plate.toml"
    path.write_text(PLATE)
    return path


@pytest.fixture(scope="module")
def beam():
    case = build_case("beam-uniform-load")
    return case, solve(case.problem())


def read_report(path):
    return dict(line.split(" = ", 1) for line in path.read_text().splitlines())


class TestConfig:
    def test_uniaxial_plate(self, plate_file):
        case, opts = load_config(plate_file)
        assert case.name == "plate" and opts.mode == "two-stage"
        sol = solve(case.problem(), opts)
        sig = sol.stresses("plate", np.array([0.2, 0.5, 0.9]), np.array([0.3, 0.5, 0.7]))
        np.testing.assert_allclose(sig, [[0, 1, 0]] * 3, atol=1e-9)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            load_config(tmp_path / "missing.cfg")

    def test_bad_toml(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("[case\nname=")
        with pytest.raises(ConfigurationError):
            load_config(p)

    @pytest.mark.parametrize("edit", [
        ("[solver]", "[solver]\nfoo = 1"),
        ("nu = 0.25", "nu = 0.25\nG = 3.0"),
        ('kind = "traction-pointwise"\ntarget = [0.0, 1.0]', 'kind = "glue"\ntarget = [0.0, 1.0]'),
        ('material = "steel"', 'material = "wood"'),
        ('mapping = "rectangle"', 'mapping = "torus"'),
    ])
    def test_rejections(self, tmp_path, edit):
        p = tmp_path / "c.toml"
        assert edit[0] in PLATE
        p.write_text(PLATE.replace(edit[0], edit[1], 1))
        with pytest.raises(ConfigurationError):
            load_config(p)

    def test_no_patches(self):
        with pytest.raises(ConfigurationError):
            case_from_mapping({"case": {"name": "x"}})


class TestExport:
    def test_grid_row_count(self, beam, tmp_path):
        case, sol = beam
        paths = sample_and_export(sol, case, tmp_path, FieldSampleGrid(2, 2))
        lines = paths["stress"].read_text().splitlines()
        assert lines[0] == HEADER and len(lines) == 5

    def test_deterministic(self, beam, tmp_path):
        case, sol = beam
        a = sample_and_export(sol, case, tmp_path / "a")
        b = sample_and_export(sol, case, tmp_path / "b")
        for key in a:
            assert a[key].read_bytes() == b[key].read_bytes()

    def test_round_trip(self, beam, tmp_path):
        case, sol = beam
        paths = sample_and_export(sol, case, tmp_path, FieldSampleGrid(7, 5))
        raw = paths["stress"].read_bytes()
        assert b"\r" not in raw
        data = np.loadtxt(paths["stress"], delimiter=",", skiprows=1, usecols=range(1, 8))
        again = sol.stresses("beam", data[:, 0], data[:, 1])
        np.testing.assert_allclose(data[:, 4:], again, rtol=1e-12, atol=1e-12 * np.abs(again).max())
        assert data.shape[0] == len(sample_rows(sol, case, FieldSampleGrid(7, 5)))

    def test_positional_decimal(self, beam, tmp_path):
        case, sol = beam
        paths = sample_and_export(sol, case, tmp_path, FieldSampleGrid(3, 3))
        assert "e" not in paths["stress"].read_text().split("\n", 1)[1].replace("beam", "")

    def test_report_keys(self, beam, tmp_path):
        case, sol = beam
        rep = read_report(sample_and_export(sol, case, tmp_path)["report"])
        assert rep["case"] == "beam-uniform-load" and rep["dofs"] == "18" and rep["free_dofs"] == "2"
        assert {"energy", "l2_error.sigma_xx", "solver.mode"} <= set(rep)
        assert rep["quadrature.beam"] == "3x6 Gauss per span" and rep["bc_weight.loaded"] == "1"

    def test_unwritable(self, beam, tmp_path):
        case, sol = beam
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(OSError):
            sample_and_export(sol, case, blocker / "sub")


class TestCli:
    def test_happy_path(self, tmp_path, capsys):
        assert main(["solve", "--case", "beam-uniform-load", "--output", str(tmp_path)]) == 0
        assert {"stress.csv", "report.txt", "profiles.csv"} <= {p.name for p in tmp_path.iterdir()}
        assert "l2_error.sigma_yy" in capsys.readouterr().out

    def test_aspect_24_beats_12(self, tmp_path):
        reps = {}
        for aspect in ("12", "24"):
            out = tmp_path / aspect
            assert main(["solve", "--case", "beam-uniform-load", "--aspect", aspect, "--output", str(out)]) == 0
            reps[aspect] = read_report(out / "report.txt")
        for comp in ("sigma_xx", "sigma_yy", "sigma_xy"):
            key = f"l2_error.{comp}"
            assert float(reps["24"][key]) < float(reps["12"][key])

    def test_missing_config(self, tmp_path, capsys):
        assert main(["solve", "--config", str(tmp_path / "missing.cfg")]) == 1
        assert "not found" in capsys.readouterr().err

    def test_config_run(self, plate_file, tmp_path):
        assert main(["solve", "--config", str(plate_file), "--output", str(tmp_path)]) == 0
        rep = read_report(tmp_path / "report.txt")
        assert rep["l2_error.sigma_xx"] == "unavailable"

    @pytest.mark.parametrize("argv", [
        ["solve"],
        ["solve", "--case", "nope"],
        ["solve", "--case", "beam-uniform-load", "--degrees", "2"],
        ["solve", "--case", "beam-uniform-load", "--bc-weight", "-1"],
        ["solve", "--case", "bar-self-weight", "--aspect", "24"],
        ["solve", "--case", "beam-uniform-load", "--config", "x.toml"],
        ["solve", "--all", "--aspect", "24"],
        ["frobnicate"],
    ])
    def test_usage_errors(self, argv):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2

    def test_solver_error_exit_1(self, tmp_path, capsys):
        # degree 9 needs at least 10 control values per direction
        assert main(["solve", "--case", "beam-uniform-load", "--degrees", "9,9", "--net", "3,3"]) == 1
        assert "error" in capsys.readouterr().err

    def test_all_parallel(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "airyspline", "solve", "--all", "--jobs", "2",
                               "--samples", "3,3", "--output", str(tmp_path)],
                              capture_output=True, text=True, timeout=300)
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout.count("case = ") == 4
        assert len(list(tmp_path.glob("*/stress.csv"))) == 4
