"""Dense complex matrix arithmetic: norms, block assembly, amplification, seeded sampling.

Matrices are plain ``numpy.ndarray`` objects with ``dtype=complex128`` and two
axes.  The "stack" variants accept any number of leading batch axes and are the
workhorses behind the counterexample search, where thousands of small norms are
evaluated per ascent step.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, ShapeError

__all__ = [
    "as_cmat",
    "op_norm",
    "trace_norm",
    "dagger",
    "block",
    "scalar_amplify",
    "stream",
    "rand_cmat",
    "op_norm_stack",
    "trace_norm_stack",
]


def as_cmat(m, check_finite: bool = True) -> np.ndarray:
    """Coerce to a 2-D complex128 array, rejecting NaN/Inf entries."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"matrix dimensions must be positive, got {a.shape}")
    if check_finite and not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    return a


def op_norm(m) -> float:
    """Operator (spectral) norm: the largest singular value."""
    a = as_cmat(m)
    return float(np.linalg.svd(a, compute_uv=False)[0])


def trace_norm(m) -> float:
    """Trace norm: the sum of singular values."""
    a = as_cmat(m)
    return float(np.linalg.svd(a, compute_uv=False).sum())


def dagger(m) -> np.ndarray:
    """Conjugate transpose."""
    return np.conj(np.swapaxes(np.asarray(m, dtype=np.complex128), -1, -2))


def block(blocks) -> np.ndarray:
    """Assemble a grid (list of rows) of matrices into one matrix.

    Raises ShapeError when row heights or column widths are ragged.
    """
    rows = [[as_cmat(b, check_finite=False) for b in row] for row in blocks]
    if not rows or not rows[0]:
        raise ShapeError("block grid must be non-empty")
    ncols = len(rows[0])
    for row in rows:
        if len(row) != ncols:
            raise ShapeError("block grid rows have differing lengths")
        heights = {b.shape[0] for b in row}
        if len(heights) != 1:
            raise ShapeError("blocks within a grid row have differing row counts")
    for j in range(ncols):
        widths = {row[j].shape[1] for row in rows}
        if len(widths) != 1:
            raise ShapeError("blocks within a grid column have differing column counts")
    return np.block([[b for b in row] for row in rows])


def scalar_amplify(m, n: int) -> np.ndarray:
    """Block-diagonal matrix with ``n`` copies of ``m``; leaves the operator norm unchanged."""
    a = as_cmat(m, check_finite=False)
    if n < 1:
        raise InvalidInputError("amplification level must be positive")
    if n == 1:
        return a.copy()
    p, q = a.shape
    out = np.zeros((n * p, n * q), dtype=np.complex128)
    for i in range(n):
        out[i * p : (i + 1) * p, i * q : (i + 1) * q] = a
    return out


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based RNG stream derived from a master seed and an integer key path.

    Distinct key paths yield statistically independent streams; the same
    (seed, key) always reproduces the same sequence, independent of any other
    stream, which is what makes restart-parallel searches bit-reproducible.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def rand_cmat(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Matrix of independent standard complex Gaussian entries drawn from ``rng``."""
    if rows < 1 or cols < 1:
        raise InvalidInputError("matrix dimensions must be positive")
    z = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    return z / np.sqrt(2.0)


def _fibered_diagonal(ms: np.ndarray, fiber: int) -> np.ndarray:
    """Rearrange a stack of g-fibered matrices into per-fiber small matrices.

    A matrix is g-fibered when, viewed as an (r/g) x (c/g) grid of g x g
    blocks, every block is diagonal.  Such matrices are direct sums (up to a
    permutation) of the ``g`` small matrices returned here, so spectral data
    can be computed fiber-by-fiber at a fraction of the dense cost.
    """
    r, c = ms.shape[-2], ms.shape[-1]
    br, bc = r // fiber, c // fiber
    grid = ms.reshape(ms.shape[:-2] + (br, fiber, bc, fiber))
    diag = np.diagonal(grid, axis1=-3, axis2=-1)  # (..., br, bc, fiber)
    return np.moveaxis(diag, -1, -3)  # (..., fiber, br, bc)


def _vector_svals(ms: np.ndarray) -> np.ndarray:
    """Singular values of matrices with a single row or column: one Euclidean norm."""
    return np.sqrt((np.abs(ms) ** 2).sum(axis=(-1, -2)))[..., None]


def _svdvals_stack(ms: np.ndarray, fiber: int | None = None):
    ms = np.asarray(ms, dtype=np.complex128)
    if fiber and fiber > 1 and ms.shape[-2] % fiber == 0 and ms.shape[-1] % fiber == 0:
        small = _fibered_diagonal(ms, fiber)
        if small.shape[-1] == 1 or small.shape[-2] == 1:
            return _vector_svals(small), True
        sv = np.linalg.svd(small, compute_uv=False)  # (..., fiber, min(br,bc))
        return sv, True
    if ms.shape[-1] == 1 or ms.shape[-2] == 1:
        return _vector_svals(ms), False
    return np.linalg.svd(ms, compute_uv=False), False


def op_norm_stack(ms, fiber: int | None = None) -> np.ndarray:
    """Operator norms over the leading axes of a matrix stack.

    ``fiber`` enables the direct-sum fast path for matrices that are diagonal
    at block size ``fiber`` (the values are identical either way).
    """
    sv, fibered = _svdvals_stack(ms, fiber)
    if fibered:
        return np.asarray(sv.max(axis=(-1, -2)))
    return np.asarray(sv[..., 0])


def trace_norm_stack(ms, fiber: int | None = None) -> np.ndarray:
    """Trace norms over the leading axes of a matrix stack."""
    sv, fibered = _svdvals_stack(ms, fiber)
    if fibered:
        return np.asarray(sv.sum(axis=(-1, -2)))
    return np.asarray(sv.sum(axis=-1))


def op_norm_fibers(ms) -> np.ndarray:
    """Operator norms of direct sums given as per-fiber stacks (..., g, a, b) -> (...)."""
    sv, _ = _svdvals_stack(np.asarray(ms, dtype=np.complex128))
    return np.asarray(sv.max(axis=(-1, -2)))


def trace_norm_fibers(ms) -> np.ndarray:
    """Trace norms of direct sums given as per-fiber stacks (..., g, a, b) -> (...)."""
    sv, _ = _svdvals_stack(np.asarray(ms, dtype=np.complex128))
    return np.asarray(sv.sum(axis=(-1, -2)))
