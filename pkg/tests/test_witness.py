import dataclasses
import math

import numpy as np
import pytest

from opspace import corpus, criteria, spaces, witness


@pytest.fixture(scope="module")
def m2():
    return corpus.build_full_matrix(2).space


def norm_objective(space):
    def f(coeffs):
        return spaces.norm_stack(space, coeffs)
    return f


def test_norm_objective_maximized_on_sphere(m2):
    cfg = witness.SearchConfig(restarts=16)
    res = witness.maximize_violation(norm_objective(m2), m2, 1, cfg, radius=1.0)
    assert res.best_value == pytest.approx(1.0, abs=1e-4)
    assert res.best_point is not None
    assert spaces.norm(m2, res.best_point) <= 1.0 + 1e-9


def test_four_rotation_search_finds_known_witness():
    entry = corpus.build_linf(3, "e1")
    space = entry.space
    obj = criteria._four_rotation_objective(space, space.unit, 1)
    cfg = witness.SearchConfig(restarts=16)
    res = witness.maximize_violation(obj, space, 1, cfg, radius=1.0, stream_key=(99,))
    assert res.best_value >= math.sqrt(2) - 1 - 1e-3


def test_determinism_and_thread_independence(m2):
    obj = norm_objective(m2)
    results = []
    for threads in (1, 8):
        cfg = witness.SearchConfig(restarts=8, threads=threads)
        results.append(witness.maximize_violation(obj, m2, 1, cfg, radius=0.5, stream_key=(3,)))
    a, b = results
    assert a.best_value == b.best_value
    assert np.array_equal(a.best_point.coeffs, b.best_point.coeffs)
    assert a.restart_bests == b.restart_bests
    assert a.evaluations == b.evaluations


def test_zero_restarts_yield_no_evidence(m2):
    cfg = witness.SearchConfig(restarts=0)
    res = witness.maximize_violation(norm_objective(m2), m2, 1, cfg)
    assert res.evaluations == 0
    assert res.best_point is None


def test_ball_feasibility_of_all_restart_results(m2):
    obj = norm_objective(m2)
    cfg = witness.SearchConfig(restarts=12)
    for radius in (0.25, 1.0):
        res = witness.maximize_violation(obj, m2, 2, cfg, radius=radius, stream_key=(4,))
        assert spaces.norm(m2, res.best_point) <= radius + 1e-9


def test_best_value_matches_objective_at_best_point(m2):
    obj = norm_objective(m2)
    cfg = witness.SearchConfig(restarts=8)
    res = witness.maximize_violation(obj, m2, 1, cfg, radius=0.7, stream_key=(5,))
    again = float(obj(res.best_point.coeffs[None])[0])
    assert res.best_value == pytest.approx(again, abs=1e-9)


def test_refine_never_decreases(m2):
    entry = corpus.build_linf(3, "e1")
    space = entry.space
    obj = criteria._four_rotation_objective(space, space.unit, 1)
    cfg = witness.SearchConfig()
    # the exact witness is a maximizer along its ray; refinement must hold the value
    e2 = spaces.LevelElement(1, np.array([[[0, 1.0, 0]]], dtype=complex))
    start = float(obj(e2.coeffs[None])[0])
    res = witness.refine_witness(obj, space, e2, cfg, radius=1.0)
    assert res.best_value >= start - 1e-12
    assert res.best_value >= math.sqrt(2) - 1 - 1e-9


def test_refine_keeps_zero_fixed_under_nonpositive_objective(m2):
    def neg_norm(coeffs):
        return -spaces.norm_stack(m2, coeffs)

    z = spaces.zero_element(m2)
    res = witness.refine_witness(neg_norm, m2, z, witness.SearchConfig(), radius=1.0)
    assert res.best_value == pytest.approx(0.0, abs=1e-12)


def test_sphere_mode_stays_on_sphere(m2):
    def dev(coeffs):
        return np.abs(spaces.norm_stack(m2, coeffs) - 1.0)

    cfg = witness.SearchConfig(restarts=6)
    res = witness.maximize_violation(dev, m2, 1, cfg, radius=1.0,
                                     mode=witness.SPHERE, stream_key=(6,))
    assert res.best_value <= 1e-9


def test_non_finite_objective_aborts_restart_and_continues(m2):
    def sometimes_nan(coeffs):
        vals = spaces.norm_stack(m2, coeffs)
        return np.where(np.real(coeffs[..., 0, 0, 0]) > 0, np.nan, vals)

    cfg = witness.SearchConfig(restarts=12)
    res = witness.maximize_violation(sometimes_nan, m2, 1, cfg, radius=1.0, stream_key=(7,))
    assert np.isfinite(res.best_value)


def test_config_validation():
    with pytest.raises(Exception):
        witness.SearchConfig(tolerance=-1).validate()
    with pytest.raises(Exception):
        witness.SearchConfig(max_level=0).validate()
    cfg = witness.SearchConfig()
    big = corpus.build_l1_2_model(64).space
    dataclasses.replace(cfg, max_level=2).guard_ambient(big)
    with pytest.raises(Exception):
        dataclasses.replace(cfg, max_level=10).guard_ambient(big)
