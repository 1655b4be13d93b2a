"""Reference spaces wired to expected verdicts for regression.

Each builder returns a CorpusEntry: a concrete space, the criteria worth
running on it, and the verdicts those criteria must reproduce under the
default search budget with the pinned seed.  Builders also serialize their
space definitions so every entry can be re-run from a file through the CLI.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import criteria, spaces, witness
from .errors import InvalidInputError

__all__ = [
    "CorpusEntry",
    "build_linf",
    "build_trace_class_2",
    "build_lower_triangular_L12",
    "build_l1_2_diag_trace",
    "build_l1_2_model",
    "build_column_H2",
    "build_twisted_selfadjoint",
    "build_upper_triangular",
    "build_full_matrix",
    "build_non_algebra_span",
    "build_left_identity_pair",
    "build_corpus",
    "multiplication_tensor",
    "run_entry",
    "run_corpus",
    "write_space_files",
]

H = criteria.HOLDS_WITHIN_BUDGET
V = criteria.VIOLATED


@dataclass
class CorpusEntry:
    name: str
    space: spaces.SpaceRep
    expected: dict
    notes: str = ""
    tolerance: float | None = None  # entry-local override
    max_level: int | None = None  # entry-local override
    extras: dict = field(default_factory=dict)


def _unit_vector(k: int, i: int) -> np.ndarray:
    u = np.zeros(k, dtype=np.complex128)
    u[i] = 1.0
    return u


def _matrix_units(d: int) -> np.ndarray:
    basis = np.zeros((d * d, d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            basis[i * d + j, i, j] = 1.0
    return basis


def build_linf(N: int = 3, unit: str = "ones") -> CorpusEntry:
    """Diagonal subspace of M_N with sup norm; the all-ones vector is a unitary, e_1 is not."""
    basis = np.zeros((N, N, N), dtype=np.complex128)
    for i in range(N):
        basis[i, i, i] = 1.0
    if unit == "ones":
        u = np.ones(N, dtype=np.complex128)
        expected = {
            "unitary-four-rotation": H,
            "unitary-t-gadget": H,
            "coisometry": H,
            "isometry": H,
            "operator-system": H,
        }
        name = f"linf{N}_ones"
        note = "diagonal sup-norm space with its canonical unit"
    elif unit == "e1":
        u = _unit_vector(N, 0)
        expected = {
            "unitary-four-rotation": V,
            "unitary-t-gadget": V,
            "coisometry": V,
            "isometry": V,
            "operator-system": V,
        }
        name = f"linf{N}_e1"
        note = "diagonal sup-norm space with a coordinate projection as candidate unit"
    else:
        raise InvalidInputError("unit must be 'ones' or 'e1'")
    space = spaces.make_space(basis, unit=u, involution=np.eye(N))
    return CorpusEntry(name, space, expected, note)


def build_trace_class_2(alpha: float = 0.6) -> CorpusEntry:
    """M_2 with the trace norm (level-1 oracle); diag(alpha, 1-alpha) is not a unitary."""
    if not 0 < alpha < 1:
        raise InvalidInputError("alpha must lie in (0, 1)")
    basis = _matrix_units(2)
    u = np.zeros(4, dtype=np.complex128)
    u[0], u[3] = alpha, 1.0 - alpha
    space = spaces.make_space(basis, unit=u, norm_mode=spaces.LEVEL1_ORACLE, level1_oracle="trace_norm")
    return CorpusEntry(
        "trace_class_2",
        space,
        {"unitary-four-rotation": V},
        "2x2 trace-norm space; every trace-one positive diagonal fails the rotation test",
        extras={"alpha": alpha},
    )


def build_lower_triangular_L12() -> CorpusEntry:
    """Lower-triangular 3-dimensional subspace of the 2x2 trace-norm space."""
    basis = np.zeros((3, 2, 2), dtype=np.complex128)
    basis[0, 0, 0] = 1.0
    basis[1, 1, 0] = 1.0
    basis[2, 1, 1] = 1.0
    u = np.array([0.6, 0.0, 0.4], dtype=np.complex128)
    space = spaces.make_space(basis, unit=u, norm_mode=spaces.LEVEL1_ORACLE, level1_oracle="trace_norm")
    return CorpusEntry(
        "lower_triangular_L12",
        space,
        {"unitary-four-rotation": V},
        "lower-triangular trace-norm space; same witness family as the full trace-norm space",
    )


def build_l1_2_diag_trace() -> CorpusEntry:
    """The diagonal of the 2x2 trace-norm space: an isometric copy of two-point l1."""
    basis = np.zeros((2, 2, 2), dtype=np.complex128)
    basis[0, 0, 0] = 1.0
    basis[1, 1, 1] = 1.0
    space = spaces.make_space(basis, unit=np.array([1.0, 0.0]),
                              norm_mode=spaces.LEVEL1_ORACLE, level1_oracle="trace_norm")
    return CorpusEntry(
        "l1_2_diag_trace",
        space,
        {"unitary-four-rotation": H},
        "diagonal trace-norm pair (|a| + |b|); passes the level-1 rotation test",
    )


def build_l1_2_model(M: int = 64) -> CorpusEntry:
    """Embedded model of two-point l1: span{I, diag(w^j)} with w a primitive M-th root of unity.

    The level-1 norm of (a, b) is max_j |a + b w^j|, which converges to
    |a| + |b| at rate O(1/M^2); M = 64 keeps the gap below the entry-local
    tolerance.
    """
    if M < 2:
        raise InvalidInputError("M must be at least 2")
    omega = np.exp(2j * np.pi / M)
    basis = np.zeros((2, M, M), dtype=np.complex128)
    basis[0] = np.eye(M)
    basis[1] = np.diag(omega ** np.arange(M))
    space = spaces.make_space(basis, unit=np.array([1.0, 0.0]))
    return CorpusEntry(
        f"l1_2_model_{M}",
        space,
        {"unitary-four-rotation": H, "unitary-t-gadget": H},
        "root-of-unity diagonal model of two-point l1 (genuinely unital at every level)",
        tolerance=1e-3,
        max_level=1,
        extras={"roots": M},
    )


def build_column_H2() -> CorpusEntry:
    """The first column of M_2 (two-dimensional column Hilbert space)."""
    basis = np.zeros((2, 2, 1), dtype=np.complex128)
    basis[0, 0, 0] = 1.0
    basis[1, 1, 0] = 1.0
    space = spaces.make_space(basis, unit=np.array([1.0, 0.0]))
    return CorpusEntry(
        "column_H2",
        space,
        {
            "isometry": H,
            "coisometry": V,
            "unitary-four-rotation": V,
            "unitary-t-gadget": V,
        },
        "column Hilbert space: e_1 is an isometry but not a coisometry",
    )


def build_twisted_selfadjoint() -> CorpusEntry:
    """{x in M_2 : x_11 = 0, x_12 = x_21} with unit E_12 + E_21: unital but not a system."""
    basis = np.zeros((2, 2, 2), dtype=np.complex128)
    basis[0, 0, 1] = 1.0
    basis[0, 1, 0] = 1.0
    basis[1, 1, 1] = 1.0
    space = spaces.make_space(basis, unit=np.array([1.0, 0.0]), involution=np.eye(2))
    return CorpusEntry(
        "twisted_selfadjoint",
        space,
        {
            "unitary-four-rotation": H,
            "unitary-t-gadget": H,
            "coisometry": H,
            "isometry": H,
            "operator-system": V,
        },
        "selfadjoint space whose selfadjoint unitary is not an operator-system unit",
    )


def _triangular_units(d: int) -> np.ndarray:
    idx = [(i, j) for i in range(d) for j in range(i, d)]
    basis = np.zeros((len(idx), d, d), dtype=np.complex128)
    for s, (i, j) in enumerate(idx):
        basis[s, i, j] = 1.0
    return basis


def build_upper_triangular(d: int = 2) -> CorpusEntry:
    """Upper-triangular matrices: a unital operator algebra."""
    basis = _triangular_units(d)
    unit = np.zeros(basis.shape[0], dtype=np.complex128)
    pos = 0
    for i in range(d):
        for j in range(i, d):
            if i == j:
                unit[pos] = 1.0
            pos += 1
    space = spaces.make_space(basis, unit=unit)
    return CorpusEntry(
        f"upper_triangular_{d}",
        space,
        {
            "unitary-four-rotation": H,
            "unitary-t-gadget": H,
            "coisometry": H,
            "isometry": H,
            "mult-closed": H,
            "algebra-product": H,
        },
        "unital subalgebra of the full matrix algebra",
    )


def _transpose_permutation(d: int) -> np.ndarray:
    S = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            S[j * d + i, i * d + j] = 1.0
    return S


def build_full_matrix(d: int = 2) -> CorpusEntry:
    """The full matrix algebra M_d with its adjoint involution and identity unit."""
    basis = _matrix_units(d)
    unit = np.zeros(d * d, dtype=np.complex128)
    for i in range(d):
        unit[i * d + i] = 1.0
    space = spaces.make_space(basis, unit=unit, involution=_transpose_permutation(d))
    return CorpusEntry(
        f"full_matrix_{d}",
        space,
        {
            "unitary-four-rotation": H,
            "unitary-t-gadget": H,
            "coisometry": H,
            "isometry": H,
            "operator-system": H,
            "mult-closed": H,
            "cstar-among-systems": H,
        },
        "full matrix algebra: every positive criterion holds",
    )


def build_non_algebra_span() -> CorpusEntry:
    """span{E_12, E_21} in M_2: selfadjoint as a set but not closed under multiplication."""
    basis = np.zeros((2, 2, 2), dtype=np.complex128)
    basis[0, 0, 1] = 1.0
    basis[1, 1, 0] = 1.0
    space = spaces.make_space(basis)
    return CorpusEntry(
        "non_algebra_span",
        space,
        {"mult-closed": V},
        "off-diagonal span; products land on the diagonal, outside the space",
    )


def build_left_identity_pair() -> CorpusEntry:
    """span{E_11, E_12} with unit E_11: a left identity is a coisometry but no isometry."""
    basis = np.zeros((2, 2, 2), dtype=np.complex128)
    basis[0, 0, 0] = 1.0
    basis[1, 0, 1] = 1.0
    space = spaces.make_space(basis, unit=np.array([1.0, 0.0]))
    return CorpusEntry(
        "left_identity_pair",
        space,
        {
            "coisometry": H,
            "isometry": V,
            "unitary-four-rotation": V,
            "unitary-t-gadget": V,
        },
        "row operator algebra with a norm-one left identity",
    )


def build_corpus() -> list:
    return [
        build_linf(3, "ones"),
        build_linf(3, "e1"),
        build_trace_class_2(),
        build_lower_triangular_L12(),
        build_l1_2_diag_trace(),
        build_l1_2_model(64),
        build_column_H2(),
        build_twisted_selfadjoint(),
        build_upper_triangular(2),
        build_full_matrix(2),
        build_non_algebra_span(),
        build_left_identity_pair(),
    ]


def multiplication_tensor(space: spaces.SpaceRep, tol: float = 1e-9) -> np.ndarray:
    """Structure tensor of the ambient product restricted to a multiplication-closed space."""
    k = space.dim
    t = np.zeros((k, k, k), dtype=np.complex128)
    for i in range(k):
        for j in range(k):
            prod = space.basis[i] @ space.basis[j]
            if spaces.membership_residual(space, prod) > tol:
                raise InvalidInputError("space is not closed under multiplication")
            t[i, j] = spaces.coefficients_of(space, prod)
    return t


def entry_config(entry: CorpusEntry, cfg: witness.SearchConfig) -> witness.SearchConfig:
    updates = {}
    if entry.tolerance is not None:
        updates["tolerance"] = entry.tolerance
    if entry.max_level is not None:
        updates["max_level"] = entry.max_level
    return dataclasses.replace(cfg, **updates) if updates else cfg


def run_entry(entry: CorpusEntry, cfg: witness.SearchConfig) -> list:
    """Run every expected criterion of one entry; returns (criterion, report) pairs."""
    local = entry_config(entry, cfg)
    out = []
    for crit in entry.expected:
        if crit == "algebra-product":
            tensor = multiplication_tensor(entry.space)
            report = criteria.check_algebra_product(entry.space, entry.space.unit, tensor, local)
        else:
            runner = criteria.CRITERION_RUNNERS[crit]
            report = runner(entry.space, cfg=local)
        out.append((crit, report))
    return out


def run_corpus(cfg: witness.SearchConfig | None = None, only: str | None = None,
               threads: int = 1) -> dict:
    """Run the whole corpus against its expected verdicts.

    Entries are independent, each criterion draws from its own seed-derived
    stream, and results are assembled in entry order, so the outcome does not
    depend on the number of worker threads.
    """
    cfg = cfg or witness.SearchConfig()
    entries = [e for e in build_corpus() if only is None or e.name == only]
    if only is not None and not entries:
        raise InvalidInputError(f"no corpus entry named {only!r}")

    def work(entry):
        return run_entry(entry, cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            all_reports = list(pool.map(work, entries))
    else:
        all_reports = [work(e) for e in entries]

    rows = []
    all_match = True
    for entry, reports in zip(entries, all_reports):
        for crit, report in reports:
            match = report.verdict == entry.expected[crit]
            all_match = all_match and match
            rows.append({
                "entry": entry.name,
                "criterion": crit,
                "expected": entry.expected[crit],
                "verdict": report.verdict,
                "margin": report.margin,
                "match": match,
                "notes": report.notes,
            })
    return {"rows": rows, "all_match": all_match, "entries": [e.name for e in entries]}


def write_space_files(outdir, entries=None) -> list:
    """Emit each entry's space-definition JSON; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for entry in entries or build_corpus():
        path = outdir / f"{entry.name}.json"
        path.write_text(spaces.space_to_json(entry.space), encoding="utf-8")
        paths.append(path)
    return paths
