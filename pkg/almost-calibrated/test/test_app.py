import math

import pytest

from app import main
from hspace.reports import read_summary

SHIFT_SPEED = 2 ** 0.25 * 2 * math.pi


def shift_endpoints(c=0.4):
    return {"phi0": {"kind": "constant", "value": 0.0}, "phi1": {"kind": "constant", "value": c},
            "phi2": {"kind": "constant", "value": c / 2}}


def test_phase(config_file, tmp_path):
    assert main(["phase", "--config", config_file()]) == 0
    summary = read_summary(tmp_path / "out" / "phase_summary.txt")
    assert float(summary["theta_hat"]) == pytest.approx(math.pi / 4)
    assert summary["hypercritical"] == "true"
    assert summary["complex_dim"] == "1" and summary["points_per_axis"] == "16"


@pytest.mark.parametrize("argv", [
    ["nonsense"],
    [],
    ["phase", "--threads", "many"],
])
def test_usage_errors(argv):
    assert main(argv) == 2


def test_configuration_errors(config_file, tmp_path):
    assert main(["phase", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["phase", "--config", config_file(), "--epsilon", "0.2", "0.4"]) == 2
    assert main(["phase", "--config", config_file(), "--threads", "0"]) == 2
    assert main(["phase", "--config", config_file(), "--seed", "-3"]) == 2


def test_out_overrides_output_dir(config_file, tmp_path):
    assert main(["phase", "--config", config_file(), "--out", str(tmp_path / "elsewhere")]) == 0
    assert (tmp_path / "elsewhere" / "phase_summary.txt").is_file()


def test_member(config_file, tmp_path):
    assert main(["member", "--config", config_file()]) == 0
    out = tmp_path / "out"
    assert read_summary(out / "member_summary.txt") == {"all_members": "true", "endpoints": "3"}
    lines = (out / "member.csv").read_text().splitlines()
    assert lines[0] == "endpoint,member,margin,worst_point"
    assert [line.split(",")[0] for line in lines[1:]] == ["phi0", "phi1", "phi2"]
    assert all((out / f"member_margin_{name}.npz").is_file() for name in ("phi0", "phi1", "phi2"))


def test_non_member_endpoint_is_a_numerical_failure(config_file):
    endpoints = {"phi1": {"kind": "sine", "amplitude": 12.0, "modes": [1, 0]}}
    assert main(["geodesic", "--config", config_file(endpoints=endpoints)]) == 1


def test_jfun_loop_closes(config_file, tmp_path):
    assert main(["jfun", "--config", config_file()]) == 0
    summary = read_summary(tmp_path / "out" / "jfun_summary.txt")
    assert abs(float(summary["loop_closure"])) <= 1e-10
    lines = (tmp_path / "out" / "jfun.csv").read_text().splitlines()
    assert lines[0] == "t,j_functional" and len(lines) == 10


def test_geodesic_files(config_file, tmp_path):
    assert main(["geodesic", "--config", config_file(endpoints=shift_endpoints())]) == 0
    out = tmp_path / "out"
    assert (out / "geodesic_path.npz").is_file()
    assert len((out / "geodesic_energy.csv").read_text().splitlines()) == 10
    stages = (out / "geodesic_stages.csv").read_text().splitlines()
    assert stages[0] == "epsilon,newton_steps,final_residual,min_phi_ddot,max_energy_drift,sup_spatial_hessian,length"
    assert [line.split(",")[0] for line in stages[1:]] == ["0.80000000000000004", "0.40000000000000002"]
    summary = read_summary(out / "geodesic_summary.txt")
    assert summary["converged"] == "true"
    assert float(summary["length"]) == pytest.approx(0.4 * SHIFT_SPEED, rel=1e-10)


def test_distance_of_constant_shift(config_file, tmp_path):
    assert main(["distance", "--config", config_file(endpoints=shift_endpoints())]) == 0
    summary = read_summary(tmp_path / "out" / "distance_summary.txt")
    assert float(summary["distance"]) == pytest.approx(0.4 * SHIFT_SPEED, abs=1e-8)
    assert float(summary["lower_bound"]) == pytest.approx(0.4 * SHIFT_SPEED, abs=1e-8)
    assert len((tmp_path / "out" / "distance.csv").read_text().splitlines()) == 3


def test_curvature_is_reproducible(config_file, tmp_path):
    config = config_file(suite={"planes": 3})
    assert main(["curvature", "--config", config, "--out", str(tmp_path / "first")]) == 0
    assert main(["curvature", "--config", config, "--out", str(tmp_path / "second")]) == 0
    first = (tmp_path / "first" / "curvature.csv").read_bytes()
    assert first == (tmp_path / "second" / "curvature.csv").read_bytes()
    assert read_summary(tmp_path / "first" / "curvature_summary.txt")["nonpositive"] == "true"
    assert main(["curvature", "--config", config, "--out", str(tmp_path / "third"), "--seed", "5"]) == 0
    assert (tmp_path / "third" / "curvature.csv").read_bytes() != first


def test_cat0_on_constants(config_file, tmp_path):
    config = config_file(endpoints=shift_endpoints(), suite={"cat0_lambdas": [0.25, 0.5, 0.75]})
    assert main(["cat0", "--config", config, "--threads", "2"]) == 0
    summary = read_summary(tmp_path / "out" / "cat0_summary.txt")
    assert summary["holds"] == "true" and summary["triangle_holds"] == "true"
    assert len((tmp_path / "out" / "cat0.csv").read_text().splitlines()) == 4


def test_suite_subset_is_reproducible(config_file, tmp_path):
    config = config_file(suite={"checks": ["oracle_equivalence", "determinism"], "pencils": 20})
    assert main(["suite", "--config", config, "--out", str(tmp_path / "first")]) == 0
    assert main(["suite", "--config", config, "--out", str(tmp_path / "second")]) == 0
    for name in ("suite_checks.csv", "suite_summary.txt"):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()
    assert read_summary(tmp_path / "first" / "suite_summary.txt") == {"tests_performed": "2",
                                                                       "tests_successful": "2"}


def test_unknown_suite_check_is_a_configuration_error(config_file):
    assert main(["suite", "--config", config_file(suite={"checks": ["no_such_check"]})]) == 2
