"""Run configuration, command routing and output files"""

import csv
import json

import numpy as np
import pytest

from cli.export import DIAG_HEADER, ENERGY_HEADER, _cell
from cli.schemas import EnergyStudy, RunConfig, load_config
from cli.service import check_energy, cmd_converge, cmd_energy, initial_data, run_command
from main import main
from scheme.schemas import SchemeParams
from scheme.service import SchemeSolver
from shared.exceptions import ConfigError, PicardConvergenceError
from verify.schemas import ErrorReport

pytestmark = pytest.mark.integration


def read_rows(path):
    with path.open(newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


# -- configuration -------------------------------------------------------------------


def test_load_config_with_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"lambda": 2.0, "n": 6, "coefficients": "constant:0.5"}))
    config = load_config(path, {"n": 12, "dt": None})
    assert config.lam == 2.0
    assert config.n == 12
    assert config.dt is None
    assert [law.value for law in config.laws()] == [0.5, 0.5, 0.5]


@pytest.mark.parametrize("selector", ["paper-exp", "exp"])
def test_exponential_laws_load_from_file(tmp_path, selector):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"coefficients": selector}))
    config = load_config(path)
    assert config.coefficients == selector
    assert [law.kind for law in config.laws()] == ["exp_pos", "exp_neg", "exp_pos"]


def test_exponential_laws_are_the_default():
    assert RunConfig().coefficients == "paper-exp"
    assert [law.kind for law in RunConfig().laws()] == ["exp_pos", "exp_neg", "exp_pos"]


@pytest.mark.parametrize(
    "content",
    ["{not json", "[1, 2]", '{"unknown": 1}', '{"coefficients": "constant:-1"}'],
)
def test_bad_config_files_rejected(tmp_path, content):
    path = tmp_path / "run.json"
    path.write_text(content)
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.json")


@pytest.mark.parametrize("coefficients", ["constant:abc", "linear:1", "constant:inf"])
def test_coefficient_spec_validated(coefficients):
    with pytest.raises(ConfigError):
        load_config(overrides={"coefficients": coefficients})


def test_default_laws():
    kinds = [law.kind for law in RunConfig().laws()]
    assert kinds == ["exp_pos", "exp_neg", "exp_pos"]


@pytest.mark.parametrize(
    "settings, h, expected",
    [
        ({}, 0.25, (0.00625, 80)),
        ({"dt": 0.3, "t_final": 1.0}, 0.5, (0.25, 4)),
        ({"dt": 0.1, "steps": 7}, 0.5, (0.1, 7)),
        ({"t_final": 0.0}, 0.5, (0.025, 0)),
        ({"dt": 2.0, "t_final": 0.5}, 0.5, (0.5, 1)),
    ],
)
def test_time_grid(settings, h, expected):
    dt, steps = RunConfig(**settings).time_grid(h)
    assert dt == pytest.approx(expected[0])
    assert steps == expected[1]


def test_scheme_params_follow_config():
    config = RunConfig(eps=0.1, coefficients="constant:2", picard_max=7)
    params = config.scheme_params(0.01)
    assert isinstance(params, SchemeParams)
    assert params.eps == 0.1 and params.dt == 0.01 and params.picard_max == 7
    assert params.nu.value == 2.0


def test_check_energy():
    study = check_energy(1.0, [0.9, 0.9 + 5e-9, 1.0])
    assert study.violations == [3]
    assert not study.passed
    assert check_energy(0.0, [0.0, 1e-15]).passed


# -- initial data --------------------------------------------------------------------


def test_random_initial_data_is_seeded_and_bounded(rng):
    params = SchemeParams()
    first, second = initial_data("random", params, 5), initial_data("random", params, 5)
    x, y = rng.random(500), rng.random(500)
    np.testing.assert_array_equal(first.phi(x, y), second.phi(x, y))
    assert np.max(np.abs(first.phi(x, y))) <= 0.8 + 1e-12
    edge = np.zeros_like(x)
    np.testing.assert_allclose(first.u(edge, y), 0.0, atol=1e-15)
    np.testing.assert_allclose(first.B(edge, y)[0], 0.0, atol=1e-15)
    assert not np.array_equal(initial_data("random", params, 6).phi(x, y), first.phi(x, y))


def test_unknown_initial_data():
    with pytest.raises(ConfigError):
        initial_data("spiral", SchemeParams())


# -- command routing -----------------------------------------------------------------


@pytest.mark.parametrize(
    "argv",
    [
        ["converge", "--levels", "4"],
        ["converge", "--levels", "4,6"],
        ["converge", "--levels", "four"],
        ["bogus"],
        ["energy", "--initial", "mms"],
        [],
    ],
)
def test_usage_errors_exit_with_config_status(argv, tmp_path):
    assert main([*argv, "--output-dir", str(tmp_path)]) == 4


def test_flags_reach_the_command(mocker, tmp_path):
    run = mocker.patch("cli.commands.run_command")
    assert main(["simulate", "--n", "3", "--t-final", "0.2", "--output-dir", str(tmp_path)]) == 0
    name, config = run.call_args.args
    assert name == "simulate"
    assert config.mode == "simulate"
    assert config.n == 3 and config.t_final == 0.2
    assert config.output_dir == str(tmp_path)


def test_unknown_command_name():
    with pytest.raises(ConfigError):
        run_command("plot", RunConfig())


# -- converge ------------------------------------------------------------------------


def test_converge_writes_tables(mocker, tmp_path):
    def fake_level(config, n):
        return ErrorReport(n=n, h=1.0 / n, dt=0.1 / n**2, errors={"u": {"H1": 1.0 / n**2}})

    mocker.patch("cli.service.run_level", side_effect=fake_level)
    table = cmd_converge(RunConfig(mode="converge", levels=[4, 8, 16], output_dir=str(tmp_path)))
    assert table.rates("u", "H1") == pytest.approx([2.0, 2.0])
    errors = read_rows(tmp_path / "errors.csv")
    assert errors[0] == ["n", "h", "dt", "field", "norm", "error"]
    assert errors[1] == ["4", "0.25", "0.0062500000000000003", "u", "H1", "0.0625"]
    rates = read_rows(tmp_path / "rates.csv")
    assert len(rates) == 3
    assert float(rates[1][-1]) == pytest.approx(2.0)


# -- energy --------------------------------------------------------------------------


def _energy_argv(tmp_path, *extra):
    return [
        "energy",
        "--n",
        "2",
        "--dt",
        "0.01",
        "--steps",
        "3",
        "--output-dir",
        str(tmp_path),
        *extra,
    ]


def test_energy_run_passes_and_writes_trace(tmp_path):
    assert main(_energy_argv(tmp_path)) == 0
    rows = read_rows(tmp_path / "energy.csv")
    assert tuple(rows[0]) == ENERGY_HEADER
    assert [row[0] for row in rows[1:]] == ["0", "1", "2", "3"]
    energies = [float(row[2]) for row in rows[1:]]
    assert all(b <= a * (1 + 1e-8) + 1e-14 for a, b in zip(energies, energies[1:]))


def test_pure_phase_has_no_energy(tmp_path):
    study = cmd_energy(
        RunConfig(mode="energy", n=2, dt=0.5, steps=2, initial="pure", output_dir=str(tmp_path))
    )
    assert study.passed
    assert abs(study.initial_energy) <= 1e-20
    assert all(abs(e) <= 1e-20 for e in study.energies)


def test_energy_rejects_manufactured_data(tmp_path):
    with pytest.raises(ConfigError):
        cmd_energy(RunConfig(mode="energy", initial="mms", output_dir=str(tmp_path)))


def test_energy_failure_exit_status(mocker, tmp_path):
    mocker.patch(
        "cli.service.check_energy",
        return_value=EnergyStudy(initial_energy=1.0, energies=[2.0], slack=0.0, violations=[1]),
    )
    assert main(_energy_argv(tmp_path)) == 3
    assert (tmp_path / "energy.csv").exists()


def test_picard_failure_exit_status(mocker, tmp_path):
    mocker.patch.object(
        SchemeSolver, "step", side_effect=PicardConvergenceError("stuck", increment=1.0, step=1)
    )
    assert main(_energy_argv(tmp_path)) == 2


def test_energy_trace_is_deterministic(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        assert main(_energy_argv(out, "--initial", "random", "--seed", "3")) == 0
    assert (first / "energy.csv").read_bytes() == (second / "energy.csv").read_bytes()


# -- simulate ------------------------------------------------------------------------


def test_simulate_to_time_zero(tmp_path):
    argv = ["simulate", "--n", "2", "--t-final", "0", "--snapshot-every", "1"]
    assert main(argv + ["--output-dir", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "diag.csv")
    assert tuple(rows[0]) == DIAG_HEADER
    assert len(rows) == 2
    assert rows[1][:3] == ["0", "0", "0"]
    assert sorted(p.name for p in tmp_path.glob("*.vtk")) == ["snap_0000.vtk"]


def test_simulate_writes_diagnostics_and_snapshots(tmp_path):
    argv = ["simulate", "--n", "2", "--t-final", "0.05", "--snapshot-every", "1"]
    assert main(argv + ["--output-dir", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "diag.csv")
    # dt = 0.1 h^2 = 0.025, two steps plus the initial row
    assert [row[0] for row in rows[1:]] == ["0", "1", "2"]
    assert all(row[4] == "1" for row in rows[1:])
    snapshots = sorted(p.name for p in tmp_path.glob("*.vtk"))
    assert snapshots == ["snap_0000.vtk", "snap_0001.vtk", "snap_0002.vtk"]
    assert (tmp_path / "snap_0002.vtk").read_text().startswith("# vtk DataFile")


def test_simulate_without_snapshots(tmp_path):
    argv = ["simulate", "--n", "2", "--t-final", "0", "--output-dir", str(tmp_path)]
    assert main(argv) == 0
    assert not list(tmp_path.glob("*.vtk"))


# -- formatting ----------------------------------------------------------------------


@pytest.mark.parametrize(
    "value, text",
    [(0.1, "0.10000000000000001"), (True, "1"), (False, "0"), (3, "3"), (np.float64(2.5), "2.5")],
)
def test_cell_format(value, text):
    assert _cell(value) == text
