import math
from types import SimpleNamespace

import pytest

from hspace.acceptance_suite import (CHECKS, SuiteContext, SuiteTester, check_energy_lower_bound,
                                     check_time_convexity, random_member, run_suite, selected_checks)
from hspace.calibrated_space import is_member
from hspace.config import load_config
from hspace.errors import ConfigError, NotInSpaceError, NumericError


def check_boom(ctx):
    raise NumericError("eigen-decomposition failed")


def test_check_selection():
    assert selected_checks("all") == CHECKS
    assert len(CHECKS) == 15
    assert [check.__name__ for check in selected_checks("determinism")] == ["check_determinism"]
    with pytest.raises(ConfigError):
        selected_checks(["determinism", "no_such_check"])


def test_random_member_is_a_member(torus_bg, rng):
    for amplitude in (0.1, 50.0):
        assert is_member(torus_bg, random_member(torus_bg, rng, amplitude)).member


def test_tester_counts_failures(config_file):
    config = load_config(config_file())
    ctx = SuiteContext(config=config, bg=config.build_background(), settings=config.settings(),
                       schedule=config.epsilon_schedule)
    tester = SuiteTester(ctx)
    result = tester.sample_test(check_boom)
    assert not result.passed and math.isnan(result.value)
    assert result.check == "boom" and "NumericError" in result.detail
    assert tester.report() == {"tests_performed": 1, "tests_successful": 0}


def test_affine_exactness_check_passes(config_file):
    tester = run_suite(load_config(config_file(suite={"checks": ["affine_exactness"], "torus_points": 16})))
    assert tester.report() == {"tests_performed": 1, "tests_successful": 1}
    assert tester.results[0].row()["check"] == "affine_exactness"


def test_checks_draw_independent_streams(config_file):
    config = load_config(config_file(suite={"checks": ["oracle_equivalence"], "pencils": 10}))
    alone = run_suite(config).results[0]
    with_others = run_suite(load_config(config_file(suite={"checks": ["determinism", "oracle_equivalence"],
                                                           "pencils": 10}))).results[1]
    assert alone.passed and alone.value == with_others.value


def test_random_member_gives_up(torus_bg, rng, monkeypatch):
    monkeypatch.setattr("hspace.acceptance_suite.is_member", lambda bg, phi: SimpleNamespace(member=False))
    with pytest.raises(NotInSpaceError):
        random_member(torus_bg, rng, 0.1)


def context_with_pairs(config_file, *results):
    config = load_config(config_file(suite={"backgrounds": [], "pairs": len(results)}))
    ctx = SuiteContext(config=config, bg=config.build_background(), settings=config.settings(),
                       schedule=config.epsilon_schedule)
    ctx.pairs[0] = [(None, None, result) for result in results]
    return ctx


def solved(min_phi_ddot=(0.0, 0.0, 0.0), energy_bound_slacks=(0.0, 0.0, 0.0)):
    return SimpleNamespace(epsilons=[0.8, 0.4, 0.2], energy_bound_slacks=list(energy_bound_slacks),
                           reports=[SimpleNamespace(min_phi_ddot=value) for value in min_phi_ddot])


def test_convexity_needs_pairs(config_file):
    result = check_time_convexity(context_with_pairs(config_file))
    assert not result.passed and not math.isnan(result.value)
    assert "not exercised" in result.detail


@pytest.mark.parametrize("mins, passed", [
    ((0.0, 0.0, 0.0), True),
    ((-0.64, -0.16, -0.04), True),
    ((-0.64, -0.16, 0.01), True),
    ((-0.8, -0.4, -0.2), False),
    ((0.0, -0.1, 0.0), False),
])
def test_convexity_deficit_scales_quadratically(config_file, mins, passed):
    result = check_time_convexity(context_with_pairs(config_file, solved(min_phi_ddot=mins)))
    assert result.passed is passed and math.isfinite(result.value)


@pytest.mark.parametrize("slacks, passed", [
    ((0.0, 0.0, 0.0), True),
    ((-0.64, -0.16, -0.04), True),
    ((-0.1, 0.0, 0.0), True),
    ((-0.8, -0.4, -0.2), False),
    ((0.0, 0.0, -0.1), False),
])
def test_energy_lower_bound_deficit_scales_quadratically(config_file, slacks, passed):
    result = check_energy_lower_bound(context_with_pairs(config_file, solved(energy_bound_slacks=slacks)))
    assert result.passed is passed
