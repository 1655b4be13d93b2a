"""Violation search: maximize an objective over the unit ball (or sphere) of M_n(X).

The engine runs a configurable number of independent restarts.  Each restart
draws a start point from its own counter-based RNG stream (derived from the
master seed and the restart index), then performs projected ascent driven by
central finite-difference directional estimates over the real coefficient
parameterization, halving the step on non-improvement.  Restarts advance in
vectorized lockstep, so one ascent step costs a single batched norm
evaluation; results are independent of scheduling and thread count because
the merge takes the maximum by value with index tie-break.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import matcore, spaces
from .errors import InvalidInputError

__all__ = ["SearchConfig", "SearchResult", "maximize_violation", "refine_witness"]

log = logging.getLogger(__name__)

DEFAULT_SEED = 1729

#: Restart start radii are spread log-uniformly down to this fraction of the
#: ball radius, because violations of the small-norm criteria concentrate
#: near zero.
MIN_RADIUS_FRACTION = 0.01

BALL = "ball"
SPHERE = "sphere"

_FD_STEP_FRACTION = 1e-5  # central-difference h, relative to the ball radius
_STEP_FLOOR_FRACTION = 3e-5  # a restart stops once its step shrinks below this * radius
_STEP_CAP_FRACTION = 0.3
_STALL_EPS = 1e-10  # improvements smaller than this count as stalls
_LINE_SCALES = np.array([2.0, 1.0, 0.5])  # expansion / hold / contraction per line search
_RADIAL_SCALES = np.array([2.0, 1.0, -1.0, -2.0])  # outward / inward rescale factors


@dataclass
class SearchConfig:
    """Budget and tolerances shared by every criterion run."""

    tolerance: float = 1e-6
    max_level: int = 2
    radius: float = 0.5
    restarts: int = 64
    ascent_steps: int = 200
    step_size: float = 0.05
    circle_samples: int = 720
    t_max: float = 4.0
    b_samples: int = 64
    seed: int = DEFAULT_SEED
    threads: int = 1

    def validate(self):
        for name in ("tolerance", "max_level", "radius", "ascent_steps", "step_size",
                     "circle_samples", "t_max", "b_samples", "threads"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"SearchConfig.{name} must be positive")
        if self.restarts < 0:
            raise InvalidInputError("SearchConfig.restarts must be nonnegative")
        return self

    def guard_ambient(self, space: spaces.SpaceRep):
        if self.max_level * max(space.p, space.q) > 512:
            raise InvalidInputError(
                f"ambient guard: max_level={self.max_level} x max(p,q)={max(space.p, space.q)} exceeds 512"
            )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SearchResult:
    best_value: float
    best_point: spaces.LevelElement | None
    evaluations: int
    restart_bests: list = field(default_factory=list)
    level: int = 1


def _project(space, coeffs, radius, mode):
    """Project a stack of coefficient grids into the ball (or onto the sphere) of the given radius."""
    norms = spaces.norm_stack(space, coeffs)
    if mode == SPHERE:
        scale = np.where(norms > 0, radius / np.where(norms > 0, norms, 1.0), 1.0)
    else:
        scale = np.where(norms > radius, radius / np.where(norms > 0, norms, 1.0), 1.0)
    return coeffs * scale[..., None, None, None], norms


def _draw_starts(space, level, cfg, radius, mode, restarts, stream_key):
    k = space.dim
    starts = np.zeros((restarts, level, level, k), dtype=np.complex128)
    for j in range(restarts):
        rng = matcore.stream(cfg.seed, *stream_key, j)
        if mode == SPHERE:
            r = radius
        else:
            r = radius * np.exp(rng.uniform(np.log(MIN_RADIUS_FRACTION), 0.0))
        elem = spaces.random_element(space, level, rng, target_norm=r)
        starts[j] = elem.coeffs
    return starts


def _probe_directions(level, k):
    """Unit complex perturbation directions: every real and imaginary coordinate."""
    cells = level * level * k
    eye = np.eye(cells, dtype=np.complex128).reshape(cells, level, level, k)
    return np.concatenate([eye, 1j * eye], axis=0)  # (2*cells, n, n, k)


def _ascent(objective, space, level, cfg, points, values, radius, mode, max_steps, step0):
    """Vectorized lockstep ascent; returns (points, values, evaluations).

    Gradients are estimated by central differences over every real coordinate.
    An accepted move grows the step; a stalled move halves it and reuses the
    cached direction, so halving cascades cost no extra gradient batches.
    """
    n_restarts = points.shape[0]
    dirs = _probe_directions(level, space.dim)
    cells = dirs.shape[0] // 2
    h_base = _FD_STEP_FRACTION * radius
    step = np.full(n_restarts, step0)
    step_cap = max(step0, _STEP_CAP_FRACTION * radius)
    direction = np.zeros_like(points)
    needs_grad = np.ones(n_restarts, dtype=bool)
    active = np.ones(n_restarts, dtype=bool)
    dead = ~np.isfinite(values)
    if dead.any():
        log.warning("objective returned non-finite values at %d start(s); aborting those restarts",
                    int(dead.sum()))
        values = np.where(dead, -np.inf, values)
        active &= ~dead
    evaluations = n_restarts
    step_floor = _STEP_FLOOR_FRACTION * radius

    for _ in range(max_steps):
        if not active.any():
            break
        grad_idx = np.nonzero(active & needs_grad)[0]
        if grad_idx.size:
            base = points[grad_idx]  # (A, n, n, k)
            # The difference scale follows the step so that kinks of the
            # max-of-norms objectives are smoothed over at coarse stages and
            # resolved sharply near convergence.
            h = np.maximum(h_base, 0.1 * step[grad_idx])[:, None, None, None, None]
            probes = np.concatenate(
                [base[:, None] + h * dirs[None], base[:, None] - h * dirs[None]], axis=1
            )  # (A, 4*cells, n, n, k)
            f = np.asarray(objective(probes))
            evaluations += f.size
            grad = (f[:, : 2 * cells] - f[:, 2 * cells :]) / (2.0 * h[:, :, 0, 0, 0])
            gc = grad[:, :cells] + 1j * grad[:, cells:]
            gnorm = np.sqrt((np.abs(gc) ** 2).sum(axis=1))
            stuck = ~np.isfinite(gnorm) | (gnorm < 1e-14)
            gc = np.where(stuck[:, None], 0.0, gc / np.where(gnorm > 0, gnorm, 1.0)[:, None])
            direction[grad_idx] = gc.reshape(base.shape)
            needs_grad[grad_idx] = False
            active[grad_idx[stuck]] = False
            if not active.any():
                break

        idx = np.nonzero(active)[0]
        scaled = step[idx, None] * _LINE_SCALES[None, :]
        np.minimum(scaled, step_cap, out=scaled)
        trials = points[idx, None] + scaled[:, :, None, None, None] * direction[idx, None]
        if mode == BALL:
            # Radial rescalings march along the nonsmooth ridges of the
            # max-of-norms objectives (they preserve zero coordinates, so they
            # never cross a phase kink) and home in on interior optima.
            mags = np.minimum(step[idx, None] * np.abs(_RADIAL_SCALES)[None, :], step_cap)
            rad = 1.0 + np.sign(_RADIAL_SCALES)[None, :] * mags / radius
            radial = points[idx, None] * rad[:, :, None, None, None]
            trials = np.concatenate([trials, radial], axis=1)
            scaled = np.concatenate([scaled, mags], axis=1)
        trials, _ = _project(space, trials, radius, mode)
        ftrial = np.asarray(objective(trials))
        evaluations += ftrial.size
        ftrial = np.where(np.isfinite(ftrial), ftrial, -np.inf)

        pick = np.argmax(ftrial, axis=1)
        rows = np.arange(idx.size)
        fbest = ftrial[rows, pick]
        improved = fbest > values[idx] + _STALL_EPS
        take = idx[improved]
        points[take] = trials[rows[improved], pick[improved]]
        values[take] = fbest[improved]
        step[take] = np.minimum(scaled[rows[improved], pick[improved]], step_cap)
        needs_grad[take] = True
        halve = idx[~improved]
        step[halve] *= 0.5
        active[step < step_floor] = False

    return points, values, evaluations


def maximize_violation(
    objective,
    space: spaces.SpaceRep,
    level: int,
    cfg: SearchConfig,
    radius: float | None = None,
    mode: str = BALL,
    restarts: int | None = None,
    stream_key: tuple = (),
) -> SearchResult:
    """Search the ball (or sphere) of M_n(X) for a maximizer of ``objective``.

    ``objective`` must accept a stack of coefficient grids shaped
    (..., level, level, k) and return the matching stack of real values.
    Fixed (seed, stream_key) reproduces the result bit-for-bit.
    """
    cfg.validate()
    radius = cfg.radius if radius is None else float(radius)
    n_restarts = cfg.restarts if restarts is None else int(restarts)
    if n_restarts <= 0:
        return SearchResult(best_value=-np.inf, best_point=None, evaluations=0, level=level)

    points = _draw_starts(space, level, cfg, radius, mode, n_restarts, stream_key)
    values = np.asarray(objective(points), dtype=float)
    points, values, evaluations = _ascent(
        objective, space, level, cfg, points, values, radius, mode,
        max_steps=cfg.ascent_steps, step0=cfg.step_size * radius,
    )
    best = int(np.argmax(values))
    return SearchResult(
        best_value=float(values[best]),
        best_point=spaces.LevelElement(level, points[best]),
        evaluations=evaluations,
        restart_bests=[float(v) for v in values],
        level=level,
    )


def refine_witness(
    objective,
    space: spaces.SpaceRep,
    point: spaces.LevelElement,
    cfg: SearchConfig,
    radius: float | None = None,
    mode: str = BALL,
) -> SearchResult:
    """Polish a single point by local ascent with tighter steps (never decreases the value)."""
    cfg.validate()
    radius = cfg.radius if radius is None else float(radius)
    pts, _ = _project(space, point.coeffs[None].copy(), radius, mode)
    values = np.asarray(objective(pts), dtype=float)
    pts, values, evaluations = _ascent(
        objective, space, point.level, cfg, pts, values, radius, mode,
        max_steps=4 * cfg.ascent_steps, step0=cfg.step_size * radius / 10.0,
    )
    return SearchResult(
        best_value=float(values[0]),
        best_point=spaces.LevelElement(point.level, pts[0]),
        evaluations=evaluations + 1,
        restart_bests=[float(values[0])],
        level=point.level,
    )
