"""Concrete operator spaces: a basis inside M_{p x q}(C) with amplified matrix norms.

A space is the span of ``k`` linearly independent ambient matrices.  Elements
of the level-``n`` amplification M_n(X) are n x n grids of coefficient vectors,
realized as one (np) x (nq) ambient matrix whose cell (i, j) is the basis
combination of the (i, j) coefficient vector.  Norms are inherited from the
ambient operator norm, except for "level1-oracle" spaces whose 1 x 1 norm is
supplied by a named matrix norm (used for trace-norm examples); criteria on
such spaces can only certify the level-1 necessary condition.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .errors import (
    InvalidInputError,
    ShapeError,
    SpaceFormatError,
    UnsupportedLevelError,
)

__all__ = [
    "SpaceRep",
    "LevelElement",
    "make_space",
    "load_space",
    "load_space_file",
    "space_to_json",
    "realize",
    "realize_stack",
    "realize_fibers_stack",
    "norm",
    "norm_stack",
    "realized_norm_stack",
    "membership_residual",
    "coefficients_of",
    "apply_involution",
    "project_to_ball",
    "unit_element",
    "unit_matrix",
    "random_element",
    "zero_element",
]

RANK_TOL = 1e-10
INVOLUTION_TOL = 1e-10
UNIT_NORM_SLACK = 1e-10

EMBEDDED = "embedded"
LEVEL1_ORACLE = "level1-oracle"

#: Norm functions selectable by level1-oracle spaces.
ORACLES = {
    "trace_norm": matcore.trace_norm_stack,
}


@dataclass(eq=False)
class LevelElement:
    """An element of M_n(X): an n x n grid of length-k coefficient vectors."""

    level: int
    coeffs: np.ndarray  # (n, n, k) complex

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        n = int(self.level)
        if n < 1:
            raise InvalidInputError("level must be positive")
        if self.coeffs.shape[:2] != (n, n):
            raise ShapeError(f"coefficient grid {self.coeffs.shape} does not match level {n}")
        if not np.all(np.isfinite(self.coeffs)):
            raise InvalidInputError("coefficients have non-finite entries")


@dataclass(eq=False)
class SpaceRep:
    """A concrete operator space with optional distinguished element and involution."""

    p: int
    q: int
    basis: np.ndarray  # (k, p, q)
    unit: np.ndarray | None = None  # (k,) coefficients of the candidate u/v/e
    involution: np.ndarray | None = None  # (k, k); coeffs(x*) = S @ conj(coeffs(x))
    norm_mode: str = EMBEDDED
    level1_oracle: str | None = None
    fiber: int = field(init=False, default=1)
    _flat: np.ndarray = field(init=False, repr=False)
    _pinv: np.ndarray = field(init=False, repr=False)
    _basis_fibers: np.ndarray | None = field(init=False, repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=np.complex128)
        if self.basis.ndim != 3 or self.basis.shape[1:] != (self.p, self.q):
            raise ShapeError(f"basis stack {self.basis.shape} does not match ambient {self.p}x{self.q}")
        self._flat = self.basis.reshape(self.dim, self.p * self.q)
        self._pinv = np.linalg.pinv(self._flat)
        self.fiber = _detect_fiber(self.basis)
        if self.fiber > 1:
            self._basis_fibers = matcore._fibered_diagonal(self.basis, self.fiber)


def _detect_fiber(basis: np.ndarray) -> int:
    """Largest block size g at which every basis matrix is g-fibered (see matcore)."""
    _, p, q = basis.shape
    g0 = math.gcd(p, q)
    for g in range(g0, 1, -1):
        if g0 % g:
            continue
        grid = basis.reshape(basis.shape[0], p // g, g, q // g, g)
        offdiag = grid - np.einsum("kbrcs,rs->kbrcs", grid, np.eye(g))
        if not offdiag.any():
            return g
    return 1


def make_space(
    basis,
    unit=None,
    involution=None,
    norm_mode: str = EMBEDDED,
    level1_oracle: str | None = None,
    rank_tol: float = RANK_TOL,
) -> SpaceRep:
    """Construct and validate a SpaceRep from raw arrays.

    Checks basis independence, involution consistency (period two on
    coefficients; matching the ambient adjoint in embedded mode) and that the
    distinguished element, if any, sits in the unit ball of the space's norm.
    """
    basis = np.asarray(basis, dtype=np.complex128)
    if basis.ndim != 3:
        raise SpaceFormatError("basis must be a stack of matrices")
    k, p, q = basis.shape
    if not np.all(np.isfinite(basis)):
        raise SpaceFormatError("basis has non-finite entries")
    if k > p * q:
        raise SpaceFormatError(f"basis is rank deficient: {k} elements in a {p * q}-dimensional ambient")
    sv = np.linalg.svd(basis.reshape(k, p * q), compute_uv=False)
    if sv[-1] <= rank_tol * sv[0]:
        raise SpaceFormatError(
            f"basis is rank deficient: smallest/largest singular value = {sv[-1]:.3e}/{sv[0]:.3e}"
        )
    if norm_mode not in (EMBEDDED, LEVEL1_ORACLE):
        raise SpaceFormatError(f"unknown norm_mode {norm_mode!r}")
    if norm_mode == LEVEL1_ORACLE:
        if level1_oracle not in ORACLES:
            raise SpaceFormatError(f"unknown level1_oracle {level1_oracle!r}")
    elif level1_oracle is not None:
        raise SpaceFormatError("level1_oracle is only meaningful in level1-oracle mode")

    S = None
    if involution is not None:
        S = np.asarray(involution, dtype=np.complex128)
        if S.shape != (k, k):
            raise SpaceFormatError(f"involution must be {k}x{k}, got {S.shape}")
        period = S @ np.conj(S)
        if np.abs(period - np.eye(k)).max() > INVOLUTION_TOL:
            raise SpaceFormatError("involution applied twice is not the identity on coefficients")
        if norm_mode == EMBEDDED:
            if p != q:
                raise SpaceFormatError("an involution on an embedded space requires a square ambient")
            # coeffs(B_i^*) = S[:, i]; realize and compare with the ambient adjoint
            for i in range(k):
                want = matcore.dagger(basis[i])
                got = np.tensordot(S[:, i], basis, axes=(0, 0))
                if np.abs(got - want).max() > INVOLUTION_TOL:
                    raise SpaceFormatError(
                        "involution does not realize the ambient adjoint on basis element %d" % i
                    )

    u = None
    if unit is not None:
        u = np.asarray(unit, dtype=np.complex128).reshape(-1)
        if u.shape != (k,):
            raise SpaceFormatError(f"unit coefficient vector must have length {k}")

    space = SpaceRep(
        p=p, q=q, basis=basis, unit=u, involution=S, norm_mode=norm_mode, level1_oracle=level1_oracle
    )
    if u is not None:
        un = norm(space, LevelElement(1, u.reshape(1, 1, k)))
        if un > 1.0 + UNIT_NORM_SLACK:
            raise SpaceFormatError(f"distinguished element has norm {un:.12f} > 1")
    return space


# ---------------------------------------------------------------------------
# space-definition documents

_COMPLEX_PAIR = "a complex scalar encoded as [re, im]"


def _decode_scalar(v):
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise SpaceFormatError(f"expected {_COMPLEX_PAIR}, got {v!r}")
    re, im = v
    if not isinstance(re, (int, float)) or not isinstance(im, (int, float)):
        raise SpaceFormatError(f"expected {_COMPLEX_PAIR}, got {v!r}")
    return complex(re, im)


def _decode_vector(values, length, what):
    if not isinstance(values, list) or len(values) != length:
        raise SpaceFormatError(f"{what} must be a list of {length} complex pairs")
    return np.array([_decode_scalar(v) for v in values], dtype=np.complex128)


def load_space(document: str, rank_tol: float = RANK_TOL) -> SpaceRep:
    """Parse a UTF-8 JSON space definition and return a validated SpaceRep.

    Schema: {"p", "q", "basis": [[[re,im], ...row-major...], ...],
    "unit": [[re,im], ...] (optional), "involution": [[[re,im], ...], ...] (optional),
    "norm_mode": "embedded"|"level1-oracle", "level1_oracle": "trace_norm" (optional)}.
    Unknown fields are rejected.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SpaceFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpaceFormatError("space definition must be a JSON object")
    known = {"p", "q", "basis", "unit", "involution", "norm_mode", "level1_oracle"}
    unknown = set(doc) - known
    if unknown:
        raise SpaceFormatError(f"unknown fields in space definition: {sorted(unknown)}")
    for req in ("p", "q", "basis"):
        if req not in doc:
            raise SpaceFormatError(f"missing required field {req!r}")
    p, q = doc["p"], doc["q"]
    if not isinstance(p, int) or not isinstance(q, int) or p < 1 or q < 1:
        raise SpaceFormatError("p and q must be positive integers")
    raw_basis = doc["basis"]
    if not isinstance(raw_basis, list) or not raw_basis:
        raise SpaceFormatError("basis must be a non-empty list")
    basis = np.stack(
        [_decode_vector(b, p * q, f"basis[{i}]").reshape(p, q) for i, b in enumerate(raw_basis)]
    )
    k = basis.shape[0]
    unit = _decode_vector(doc["unit"], k, "unit") if doc.get("unit") is not None else None
    involution = None
    if doc.get("involution") is not None:
        rows = doc["involution"]
        if not isinstance(rows, list) or len(rows) != k:
            raise SpaceFormatError(f"involution must be a list of {k} rows")
        involution = np.stack([_decode_vector(r, k, f"involution[{i}]") for i, r in enumerate(rows)])
    return make_space(
        basis,
        unit=unit,
        involution=involution,
        norm_mode=doc.get("norm_mode", EMBEDDED),
        level1_oracle=doc.get("level1_oracle"),
        rank_tol=rank_tol,
    )


def load_space_file(path, rank_tol: float = RANK_TOL) -> SpaceRep:
    with open(path, "r", encoding="utf-8") as fh:
        return load_space(fh.read(), rank_tol=rank_tol)


def _encode_scalar(z: complex):
    return [float(np.real(z)), float(np.imag(z))]


def space_to_json(space: SpaceRep) -> str:
    """Serialize a SpaceRep back to the space-definition JSON format."""
    doc = {
        "p": space.p,
        "q": space.q,
        "basis": [[_encode_scalar(z) for z in b.reshape(-1)] for b in space.basis],
        "norm_mode": space.norm_mode,
    }
    if space.unit is not None:
        doc["unit"] = [_encode_scalar(z) for z in space.unit]
    if space.involution is not None:
        doc["involution"] = [[_encode_scalar(z) for z in row] for row in space.involution]
    if space.level1_oracle is not None:
        doc["level1_oracle"] = space.level1_oracle
    return json.dumps(doc, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# realization and norms


def realize_stack(space: SpaceRep, coeffs: np.ndarray) -> np.ndarray:
    """Realize a stack of coefficient grids (..., r, c, k) as ambient matrices (..., rp, cq)."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    r, c = coeffs.shape[-3], coeffs.shape[-2]
    out = np.einsum("...ijl,lpq->...ipjq", coeffs, space.basis)
    return out.reshape(coeffs.shape[:-3] + (r * space.p, c * space.q))


def realize(space: SpaceRep, x: LevelElement) -> np.ndarray:
    """Realize one element of M_n(X) as its ambient (np) x (nq) matrix."""
    return realize_stack(space, x.coeffs)


def realize_fibers_stack(space: SpaceRep, coeffs: np.ndarray) -> np.ndarray:
    """Realize coefficient grids (..., r, c, k) as per-fiber matrices (..., g, r p/g, c q/g).

    Valid only when the space's basis is fibered (space.fiber > 1); the result
    is the same ambient matrix up to a permutation that splits it into a
    direct sum, so operator norms are maxima over the fiber axis.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    r, c = coeffs.shape[-3], coeffs.shape[-2]
    g = space.fiber
    out = np.einsum("...ijl,lgrs->...girjs", coeffs, space._basis_fibers)
    return out.reshape(coeffs.shape[:-3] + (g, r * space.p // g, c * space.q // g))


def realized_norm_stack(space: SpaceRep, mats: np.ndarray) -> np.ndarray:
    """Space-appropriate norms of already-realized matrices (or block gadgets built from them)."""
    if space.norm_mode == LEVEL1_ORACLE:
        return ORACLES[space.level1_oracle](mats, fiber=space.fiber)
    return matcore.op_norm_stack(mats, fiber=space.fiber)


def norm_stack(space: SpaceRep, coeffs: np.ndarray) -> np.ndarray:
    """Norms of a stack of coefficient grids in the space's matrix-norm structure."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    n = coeffs.shape[-3]
    if space.norm_mode == LEVEL1_ORACLE and n != 1:
        raise UnsupportedLevelError(
            f"space norm is only defined at level 1 (level1-oracle mode), got level {n}"
        )
    if space.norm_mode == EMBEDDED and space.fiber > 1:
        return matcore.op_norm_fibers(realize_fibers_stack(space, coeffs))
    return realized_norm_stack(space, realize_stack(space, coeffs))


def norm(space: SpaceRep, x: LevelElement) -> float:
    """Norm of an element of M_n(X)."""
    return float(norm_stack(space, x.coeffs[None])[0])


def coefficients_of(space: SpaceRep, m) -> np.ndarray:
    """Least-squares coefficients of the best approximation to ``m`` in the span of the basis."""
    a = matcore.as_cmat(m)
    if a.shape != (space.p, space.q):
        raise ShapeError(f"expected {space.p}x{space.q}, got {a.shape}")
    return a.reshape(-1) @ space._pinv


def membership_residual(space: SpaceRep, m) -> float:
    """Operator-norm distance from ``m`` to its projection onto the space; 0 iff m lies in it."""
    a = matcore.as_cmat(m)
    if a.shape != (space.p, space.q):
        raise ShapeError(f"expected {space.p}x{space.q}, got {a.shape}")
    c = a.reshape(-1) @ space._pinv
    proj = (c @ space._flat).reshape(space.p, space.q)
    return matcore.op_norm(a - proj)


def apply_involution(space: SpaceRep, x: LevelElement) -> LevelElement:
    """The element x* = [x*_{ji}]: grid transposed, coefficients c -> S conj(c)."""
    if space.involution is None:
        raise InvalidInputError("space has no involution")
    starred = np.einsum("lm,ijm->jil", space.involution, np.conj(x.coeffs))
    return LevelElement(x.level, starred)


def project_to_ball(space: SpaceRep, x: LevelElement, radius: float) -> LevelElement:
    """Rescale into the closed ball of the given radius (no-op inside it)."""
    if radius <= 0:
        raise InvalidInputError("radius must be positive")
    nx = norm(space, x)
    if nx <= radius:
        return x
    return LevelElement(x.level, x.coeffs * (radius / nx))


def unit_element(space: SpaceRep) -> LevelElement:
    if space.unit is None:
        raise InvalidInputError("space has no distinguished element")
    return LevelElement(1, space.unit.reshape(1, 1, -1))


def unit_matrix(space: SpaceRep) -> np.ndarray:
    return realize_stack(space, unit_element(space).coeffs)


def zero_element(space: SpaceRep, level: int = 1) -> LevelElement:
    return LevelElement(level, np.zeros((level, level, space.dim), dtype=np.complex128))


def random_element(
    space: SpaceRep,
    level: int,
    rng: np.random.Generator,
    target_norm: float | None = None,
) -> LevelElement:
    """Random element with Gaussian coefficients, optionally rescaled to a given norm."""
    k = space.dim
    z = rng.normal(size=(level, level, k)) + 1j * rng.normal(size=(level, level, k))
    elem = LevelElement(level, z / np.sqrt(2.0))
    if target_norm is not None:
        nx = norm(space, elem)
        if nx > 0:
            elem = LevelElement(level, elem.coeffs * (target_norm / nx))
    return elem
