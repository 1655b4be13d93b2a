"""Randomized verification suites for the block-matrix norm identities.

Each suite draws seeded random matrices, evaluates both sides of an identity
and reports the largest deviation observed.  These identities are what the
criteria ultimately lean on, so the suites double as a self-test of the whole
norm layer.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import gadgets, matcore, spaces
from .corpus import build_full_matrix, build_upper_triangular

__all__ = ["SuiteResult", "run_all_suites", "t_norm_closed_form", "BUG_ENV_VAR"]

#: Setting this environment variable flips a sign inside the sum/difference
#: suite; used to confirm the suites actually detect broken identities.
BUG_ENV_VAR = "OPSPACE_INJECT_BUG"


@dataclass
class SuiteResult:
    name: str
    trials: int
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "trials": int(self.trials),
            "max_deviation": float(self.max_deviation),
            "tolerance": float(self.tolerance),
            "passed": bool(self.passed),
        }


def t_norm_closed_form(s):
    """||[[1, x], [0, 1]]||^2 as a function of s = ||x|| in any unitally embedded space."""
    s = np.asarray(s, dtype=float)
    return 0.5 * (2.0 + s**2 + s * np.sqrt(s**2 + 4.0))


def _sum_diff_suite(trials: int, seed: int, bug: bool) -> SuiteResult:
    """||[[a, b], [b, a]]|| = max(||a + b||, ||a - b||) for random 3x3 pairs."""
    worst = 0.0
    for t in range(trials):
        rng = matcore.stream(seed, 21, t)
        a = matcore.rand_cmat(3, 3, rng)
        b = matcore.rand_cmat(3, 3, rng)
        lhs = matcore.op_norm(matcore.block([[a, b], [b, a]]))
        second = a + b if bug else a - b
        rhs = max(matcore.op_norm(a + b), matcore.op_norm(second))
        worst = max(worst, abs(lhs - rhs))
    return SuiteResult("sum-diff block identity", trials, worst, 1e-9)


def _rotation_suite(trials: int, seed: int) -> SuiteResult:
    """||[[a, -b], [b, a]]|| = max(||a + ib||, ||a - ib||) for random 3x3 pairs."""
    worst = 0.0
    for t in range(trials):
        rng = matcore.stream(seed, 22, t)
        a = matcore.rand_cmat(3, 3, rng)
        b = matcore.rand_cmat(3, 3, rng)
        lhs = matcore.op_norm(matcore.block([[a, -b], [b, a]]))
        rhs = max(matcore.op_norm(a + 1j * b), matcore.op_norm(a - 1j * b))
        worst = max(worst, abs(lhs - rhs))
    return SuiteResult("rotation block identity", trials, worst, 1e-9)


def _unital_test_spaces():
    return [
        ("M2", build_full_matrix(2).space),
        ("M3", build_full_matrix(3).space),
        ("upper-triangular M2", build_upper_triangular(2).space),
    ]


def _selfadjoint_test_spaces():
    return [("M2", build_full_matrix(2).space), ("M3", build_full_matrix(3).space)]


def _doubling_suite(trials: int, seed: int) -> SuiteResult:
    """||t_x||^2 = (2 + ||x||^2 + ||x|| sqrt(||x||^2 + 4)) / 2 with v the ambient identity."""
    worst = 0.0
    count = 0
    for si, (_, space) in enumerate(_unital_test_spaces()):
        for level in (1, 2):
            for t in range(trials):
                rng = matcore.stream(seed, 23, si, level, t)
                x = spaces.random_element(space, level, rng)
                g = gadgets.build_t(space, space.unit, x)
                s = spaces.norm(space, x)
                worst = max(worst, abs(matcore.op_norm(g) ** 2 - float(t_norm_closed_form(s))))
                count += 1
    return SuiteResult("doubling gadget closed form", count, worst, 1e-8)


def _symmetric_suite(trials: int, seed: int) -> SuiteResult:
    """||s_x|| = 1 + ||x|| on selfadjoint unital spaces."""
    worst = 0.0
    count = 0
    for si, (_, space) in enumerate(_selfadjoint_test_spaces()):
        for level in (1, 2):
            for t in range(trials):
                rng = matcore.stream(seed, 24, si, level, t)
                x = spaces.random_element(space, level, rng)
                g = gadgets.build_s(space, space.unit, x)
                worst = max(worst, abs(matcore.op_norm(g) - (1.0 + spaces.norm(space, x))))
                count += 1
    return SuiteResult("symmetric gadget norm", count, worst, 1e-8)


def _skew_suite(trials: int, seed: int) -> SuiteResult:
    """||r_x|| = sqrt(1 + ||x||^2) on selfadjoint unital spaces."""
    worst = 0.0
    count = 0
    for si, (_, space) in enumerate(_selfadjoint_test_spaces()):
        for level in (1, 2):
            for t in range(trials):
                rng = matcore.stream(seed, 25, si, level, t)
                x = spaces.random_element(space, level, rng)
                g = gadgets.build_r(space, space.unit, x)
                want = np.sqrt(1.0 + spaces.norm(space, x) ** 2)
                worst = max(worst, abs(matcore.op_norm(g) - want))
                count += 1
    return SuiteResult("skew gadget norm", count, worst, 1e-8)


def run_all_suites(trials: int = 200, seed: int = 1729, gadget_trials: int = 100) -> list:
    """Run every identity suite; the pair suites use ``trials``, the gadget suites ``gadget_trials``."""
    bug = bool(os.environ.get(BUG_ENV_VAR))
    return [
        _sum_diff_suite(trials, seed, bug),
        _rotation_suite(trials, seed),
        _doubling_suite(gadget_trials, seed),
        _symmetric_suite(gadget_trials, seed),
        _skew_suite(gadget_trials, seed),
    ]
