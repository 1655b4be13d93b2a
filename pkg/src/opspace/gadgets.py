"""Constructors for the structured block matrices whose norms encode each criterion.

Public constructors return realized ambient matrices for single elements; the
``*_stack`` helpers assemble the same gadgets over a batch of realized
elements and are what the counterexample search evaluates.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from . import matcore, spaces
from .errors import InvalidInputError, NumericalError, ShapeError, UnsupportedLevelError

__all__ = [
    "GadgetKind",
    "build_t",
    "build_s",
    "build_r",
    "build_row",
    "build_column",
    "build_four_rotation",
    "build_Ue",
    "build_M_pm",
    "build_mult_row",
    "build_adjoint_block",
    "psd_sqrt",
    "proof_b",
]

I_POWERS = np.array([1, 1j, -1, -1j], dtype=np.complex128)


class GadgetKind(Enum):
    T_GADGET = "t_gadget"
    S_GADGET = "s_gadget"
    R_GADGET = "r_gadget"
    ROW = "row"
    COLUMN = "column"
    FOUR_ROTATION = "four_rotation"
    UE_SPACE = "ue_space"
    M_PLUS = "m_plus"
    M_MINUS = "m_minus"
    MULT_ROW = "mult_row"
    ADJOINT_BLOCK = "adjoint_block"


def _coeff_vector(space: spaces.SpaceRep, v) -> np.ndarray:
    if isinstance(v, spaces.LevelElement):
        if v.level != 1:
            raise ShapeError("distinguished element must live at level 1")
        return v.coeffs.reshape(-1)
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if v.shape != (space.dim,):
        raise ShapeError(f"coefficient vector must have length {space.dim}")
    return v


def amplified_unit(space: spaces.SpaceRep, v, level: int) -> np.ndarray:
    """Realize v_n = v (x) I_n, the n-fold diagonal amplification of a level-1 element."""
    vm = spaces.realize_stack(space, _coeff_vector(space, v).reshape(1, 1, -1))
    return matcore.scalar_amplify(vm, level)


def _require_embedded(space: spaces.SpaceRep, who: str):
    if space.norm_mode != spaces.EMBEDDED:
        raise UnsupportedLevelError(f"{who} requires an embedded space (it lives above level 1)")


# ---------------------------------------------------------------------------
# stack assemblies (leading batch axes on X)


def two_by_two_stack(A, B, C, D) -> np.ndarray:
    top = np.concatenate(np.broadcast_arrays(A, B), axis=-1)
    bot = np.concatenate(np.broadcast_arrays(C, D), axis=-1)
    return np.concatenate(np.broadcast_arrays(top, bot), axis=-2)


def t_stack(Vn: np.ndarray, X: np.ndarray) -> np.ndarray:
    """[[v_n, x], [0, v_n]] over a stack of realized x."""
    Z = np.zeros_like(X)
    return two_by_two_stack(Vn, X, Z, Vn)


def s_stack(Vn: np.ndarray, X: np.ndarray) -> np.ndarray:
    """[[v_n, x], [x*, v_n]] over a stack of realized x (adjoint taken in the ambient)."""
    return two_by_two_stack(Vn, X, matcore.dagger(X), Vn)


def r_stack(Vn: np.ndarray, X: np.ndarray) -> np.ndarray:
    """[[v_n, x], [-x*, v_n]] over a stack of realized x."""
    return two_by_two_stack(Vn, X, -matcore.dagger(X), Vn)


def four_rotation_stack(Vn: np.ndarray, X: np.ndarray) -> np.ndarray:
    """The four elements v_n + i^k x, stacked on a new axis before the matrix axes."""
    return Vn + I_POWERS[:, None, None] * X[..., None, :, :]


def row_stack(Un: np.ndarray, X: np.ndarray) -> np.ndarray:
    """[u_n  x] over a stack of realized x."""
    return np.concatenate(np.broadcast_arrays(Un, X), axis=-1)


def column_stack(Un: np.ndarray, X: np.ndarray) -> np.ndarray:
    """[u_n ; x] over a stack of realized x."""
    return np.concatenate(np.broadcast_arrays(Un, X), axis=-2)


# ---------------------------------------------------------------------------
# public single-element constructors


def build_t(space: spaces.SpaceRep, v, x: spaces.LevelElement) -> np.ndarray:
    """Upper-triangular doubling gadget [[v_n, x], [0, v_n]], realized in the ambient."""
    _require_embedded(space, "the doubling gadget")
    Vn = amplified_unit(space, v, x.level)
    return t_stack(Vn, spaces.realize(space, x))


def build_s(space: spaces.SpaceRep, v, x: spaces.LevelElement) -> np.ndarray:
    """Symmetric gadget [[v_n, x], [x*, v_n]]; requires the space's involution."""
    _require_embedded(space, "the symmetric gadget")
    if space.involution is None:
        raise InvalidInputError("symmetric gadget requires an involution")
    Vn = amplified_unit(space, v, x.level)
    xs = spaces.realize(space, spaces.apply_involution(space, x))
    return two_by_two_stack(Vn, spaces.realize(space, x), xs, Vn)


def build_r(space: spaces.SpaceRep, v, x: spaces.LevelElement) -> np.ndarray:
    """Skew gadget [[v_n, x], [-x*, v_n]]; requires the space's involution."""
    _require_embedded(space, "the skew gadget")
    if space.involution is None:
        raise InvalidInputError("skew gadget requires an involution")
    Vn = amplified_unit(space, v, x.level)
    xs = spaces.realize(space, spaces.apply_involution(space, x))
    return two_by_two_stack(Vn, spaces.realize(space, x), -xs, Vn)


def _rect_realize(space: spaces.SpaceRep, x) -> tuple[np.ndarray, int]:
    """Realize a square LevelElement or a rectangular (r, c, k) coefficient grid."""
    if isinstance(x, spaces.LevelElement):
        return spaces.realize(space, x), x.level
    grid = np.asarray(x, dtype=np.complex128)
    if grid.ndim != 3 or grid.shape[-1] != space.dim:
        raise ShapeError("expected a LevelElement or an (rows, cols, k) coefficient grid")
    return spaces.realize_stack(space, grid), grid.shape[0]


def build_row(space: spaces.SpaceRep, u, x) -> np.ndarray:
    """Row gadget [u_k  x] with u amplified to match the row count of x's grid."""
    _require_embedded(space, "the row gadget")
    X, rows = _rect_realize(space, x)
    return row_stack(amplified_unit(space, u, rows), X)


def build_column(space: spaces.SpaceRep, u, x) -> np.ndarray:
    """Column gadget [u_k ; x] with u amplified to match the column count of x's grid."""
    _require_embedded(space, "the column gadget")
    X, _ = _rect_realize(space, x)
    cols = X.shape[-1] // space.q
    return column_stack(amplified_unit(space, u, cols), X)


def build_four_rotation(space: spaces.SpaceRep, v, x: spaces.LevelElement, k: int) -> np.ndarray:
    """The element v_n + i^k x, realized in the ambient (measure it with the space's norm)."""
    if not 0 <= k <= 3:
        raise InvalidInputError("rotation index k must be in 0..3")
    if space.norm_mode == spaces.LEVEL1_ORACLE and x.level != 1:
        raise UnsupportedLevelError("level1-oracle spaces only evaluate level-1 elements")
    Vn = amplified_unit(space, v, x.level)
    return Vn + I_POWERS[k] * spaces.realize(space, x)


def build_Ue(space: spaces.SpaceRep, e) -> spaces.SpaceRep:
    """The doubling space of (X, e): span of [[e,0],[0,e]] and [[0,B_i],[0,0]] inside M_{2p x 2q}.

    Its distinguished element is e (x) I_2, the first basis element.
    """
    _require_embedded(space, "the doubling space")
    ev = _coeff_vector(space, e)
    E = spaces.realize_stack(space, ev.reshape(1, 1, -1))
    p, q, k = space.p, space.q, space.dim
    basis = np.zeros((k + 1, 2 * p, 2 * q), dtype=np.complex128)
    basis[0, :p, :q] = E
    basis[0, p:, q:] = E
    basis[1:, :p, q:] = space.basis
    unit = np.zeros(k + 1, dtype=np.complex128)
    unit[0] = 1.0
    return spaces.make_space(basis, unit=unit)


def _square_like(name: str, m, d: int) -> np.ndarray:
    a = matcore.as_cmat(m)
    if a.shape != (d, d):
        raise ShapeError(f"{name} must be {d}x{d}, got {a.shape}")
    return a


def build_M_pm(x, y, z, b, sign: str = "+") -> np.ndarray:
    """Normalized 2x6 block row used to detect multiplicative structure.

    Row one is [y, 0, 1, x, b, z]; row two is [x, b, z, y, 0, 1] for sign "+"
    and [x, b, z, -y, 0, -1] for sign "-".  The result is divided by its
    operator norm, so a well-formed instance has orthonormal block rows.
    """
    x = matcore.as_cmat(x)
    d = x.shape[0]
    if x.shape != (d, d):
        raise ShapeError("entries must be square")
    y, z, b = (_square_like(n, m, d) for n, m in (("y", y), ("z", z), ("b", b)))
    one = np.eye(d, dtype=np.complex128)
    zero = np.zeros_like(one)
    if sign == "+":
        grid = [[y, zero, one, x, b, z], [x, b, z, y, zero, one]]
    elif sign == "-":
        grid = [[y, zero, one, x, b, z], [x, b, z, -y, zero, -one]]
    else:
        raise InvalidInputError("sign must be '+' or '-'")
    m = matcore.block(grid)
    nm = matcore.op_norm(m)
    if nm <= 0:
        raise InvalidInputError("gadget norm is zero; nothing to normalize")
    return m / nm


def build_mult_row(x, y, z, b) -> tuple[np.ndarray, np.ndarray]:
    """The 2x4 block matrix [[0, y, 1, 0], [2, x, z, b]] and the row [2, x, z, b].

    Equality of their norms for every b certifies that x y* + z vanishes.
    """
    x = matcore.as_cmat(x)
    d = x.shape[0]
    if x.shape != (d, d):
        raise ShapeError("entries must be square")
    y, z, b = (_square_like(n, m, d) for n, m in (("y", y), ("z", z), ("b", b)))
    one = np.eye(d, dtype=np.complex128)
    zero = np.zeros_like(one)
    two_by_four = matcore.block([[zero, y, one, zero], [2 * one, x, z, b]])
    row = matcore.block([[2 * one, x, z, b]])
    return two_by_four, row


def build_adjoint_block(x, z, t: float) -> np.ndarray:
    """[[t*1, x], [-z, t*1]] for square x, z of equal size."""
    x = matcore.as_cmat(x)
    z = matcore.as_cmat(z)
    if x.shape != z.shape or x.shape[0] != x.shape[1]:
        raise ShapeError("x and z must be square and of equal size")
    tI = float(t) * np.eye(x.shape[0], dtype=np.complex128)
    return matcore.block([[tI, x], [-z, tI]])


# ---------------------------------------------------------------------------
# ingredients for the multiplicative-structure gadgets


def psd_sqrt(h, tol: float = 1e-10) -> np.ndarray:
    """Positive square root of a Hermitian PSD matrix; rejects eigenvalues below -tol."""
    h = matcore.as_cmat(h)
    w, v = np.linalg.eigh((h + matcore.dagger(h)) / 2.0)
    if w.min() < -tol * max(1.0, abs(w.max())):
        raise NumericalError(f"operand is not positive semidefinite (min eigenvalue {w.min():.3e})")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ matcore.dagger(v)


def proof_b(x, y, z) -> np.ndarray:
    """The filler entry sqrt(||xx* + yy* + zz*|| 1 - xx* - yy* - zz*) (pass y=0 for the 2x4 rows)."""
    x, y, z = (matcore.as_cmat(m) for m in (x, y, z))
    h = x @ matcore.dagger(x) + y @ matcore.dagger(y) + z @ matcore.dagger(z)
    return psd_sqrt(matcore.op_norm(h) * np.eye(h.shape[0]) - h)
