"""Command-line front end: load spaces, run criteria, verify the norm identities, run the corpus.

Exit codes: 0 = HOLDS_WITHIN_BUDGET (or all suites/entries pass), 1 = VIOLATED
(or a suite/entry mismatch), 2 = INCONCLUSIVE or UNSUPPORTED_LEVEL, 3 = input error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, corpus, criteria, formulas, spaces, witness
from .errors import InvalidInputError, OpspaceError

EXIT_HOLDS = 0
EXIT_VIOLATED = 1
EXIT_INCONCLUSIVE = 2
EXIT_INPUT_ERROR = 3


@dataclass
class RunManifest:
    """What one CLI invocation is about to do: command, inputs, config, output sink."""

    command: str
    inputs: list = field(default_factory=list)
    config: witness.SearchConfig = field(default_factory=witness.SearchConfig)
    output: str | None = None
    format: str = "text"

    def validate(self):
        for path in self.inputs:
            if not os.path.exists(path):
                raise InvalidInputError(f"input file does not exist: {path}")
        if self.output:
            outdir = os.path.dirname(os.path.abspath(self.output))
            if not os.path.isdir(outdir) or not os.access(outdir, os.W_OK):
                raise InvalidInputError(f"output directory is not writable: {outdir}")
        if self.format not in ("json", "text"):
            raise InvalidInputError(f"unknown format {self.format!r}")
        self.config.validate()
        return self


_VERDICT_EXIT = {
    criteria.HOLDS_WITHIN_BUDGET: EXIT_HOLDS,
    criteria.VIOLATED: EXIT_VIOLATED,
    criteria.INCONCLUSIVE: EXIT_INCONCLUSIVE,
    criteria.UNSUPPORTED_LEVEL: EXIT_INCONCLUSIVE,
}


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--tolerance", type=float, default=None, help="decision tolerance (default 1e-6)")
    p.add_argument("--levels", type=int, default=None, help="largest amplification level searched")
    p.add_argument("--radius", type=float, default=None, help="search ball radius")
    p.add_argument("--restarts", type=int, default=None, help="restart budget per criterion")
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (falls back to OPSPACE_SEED, then the built-in default)")
    p.add_argument("--threads", type=int, default=1, help="worker thread cap")
    p.add_argument("--rank-tol", type=float, default=None,
                   help="relative rank tolerance for basis independence (default 1e-10)")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")


def _build_config(args) -> witness.SearchConfig:
    cfg = witness.SearchConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    elif os.environ.get("OPSPACE_SEED"):
        cfg.seed = int(os.environ["OPSPACE_SEED"])
    if getattr(args, "tolerance", None) is not None:
        cfg.tolerance = args.tolerance
    if getattr(args, "levels", None) is not None:
        cfg.max_level = args.levels
    if getattr(args, "radius", None) is not None:
        cfg.radius = args.radius
    if getattr(args, "restarts", None) is not None:
        cfg.restarts = args.restarts
    if getattr(args, "threads", None):
        cfg.threads = args.threads
    return cfg.validate()


def _emit(payload: dict, text: str, args) -> None:
    body = json.dumps(payload, indent=2, sort_keys=True) + "\n" if args.format == "json" else text
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)


def _envelope(payload: dict) -> dict:
    payload = dict(payload)
    payload["tool_version"] = __version__
    payload["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return payload


def _fmt_margin(m: float) -> str:
    return f"{m:+.9f}"


def _inequality_line(report: criteria.CheckReport) -> str | None:
    """Render the violated inequality/equality with its evaluated sides."""
    aux = (report.witness or {}).get("aux", {})
    nx = aux.get("witness_norm")
    v = aux.get("violation")
    if nx is None or v is None:
        return None
    if report.criterion == "unitary-four-rotation":
        rhs = (1.0 + nx) ** 0.5
        return (f"max_k ||u_n + i^k x|| = {rhs - v:.6f}  <  sqrt(1 + ||x||) = {rhs:.6f}"
                f"   (||x|| = {nx:.6f})")
    if report.criterion == "unitary-t-gadget":
        rhs = (1.0 + nx) ** 0.5
        return (f"||[[v_n, x], [0, v_n]]|| = {rhs - v:.6f}  <  sqrt(1 + ||x||) = {rhs:.6f}"
                f"   (||x|| = {nx:.6f})")
    if report.criterion in ("coisometry", "isometry"):
        target = (1.0 + nx**2) ** 0.5
        shape = "[u_n  x]" if report.criterion == "coisometry" else "[u_n ; x]"
        return (f"| ||{shape}|| - sqrt(1 + ||x||^2) | = {v:.6f}   "
                f"(target {target:.6f}, ||x|| = {nx:.6f})")
    if report.criterion == "operator-system":
        target = (1.0 + nx**2) ** 0.5
        return (f"| ||[[v_n, x], [-x*, v_n]]|| - sqrt(1 + ||x||^2) | = {v:.6f}   "
                f"(target {target:.6f}, ||x|| = {nx:.6f})")
    return None


def _report_text(report: criteria.CheckReport) -> str:
    lines = [f"criterion : {report.criterion}",
             f"verdict   : {report.verdict}",
             f"margin    : {_fmt_margin(report.margin)}",
             f"levels    : {report.levels_checked}",
             f"samples   : {report.samples}"]
    for note in report.notes:
        lines.append(f"note      : {note}")
    w = report.witness or {}
    aux = w.get("aux", {})
    if report.verdict == criteria.VIOLATED:
        ineq = _inequality_line(report)
        if ineq:
            lines.append(f"at witness: {ineq}")
        if w.get("coeffs") is not None:
            lines.append(f"witness   : level-{w['level']} element, coefficients below")
            lines.append(json.dumps(w["coeffs"]))
        for key, val in aux.items():
            if key != "witness_norm":
                lines.append(f"aux {key}: {val}")
    return "\n".join(lines) + "\n"


def _load_space(path: str, args) -> spaces.SpaceRep:
    rank_tol = getattr(args, "rank_tol", None)
    try:
        space = spaces.load_space_file(path, rank_tol=rank_tol if rank_tol else spaces.RANK_TOL)
    except OSError as exc:
        raise InvalidInputError(f"cannot load space file {path!r}: {exc}") from exc
    except OpspaceError as exc:
        raise InvalidInputError(f"invalid space file {path!r}: {exc}") from exc
    idx = getattr(args, "unit_index", None)
    if idx is not None:
        if not 0 <= idx < space.dim:
            raise InvalidInputError(f"--unit-index {idx} out of range (basis has {space.dim} elements)")
        unit = np.zeros(space.dim, dtype=np.complex128)
        unit[idx] = 1.0
        space = spaces.make_space(space.basis, unit=unit, involution=space.involution,
                                  norm_mode=space.norm_mode, level1_oracle=space.level1_oracle)
    return space


def _run_criterion(space, criterion_id: str, cfg, args) -> criteria.CheckReport:
    if criterion_id in ("multiplier-left", "multiplier-right", "multiplier-quasi"):
        side = criterion_id.split("-", 1)[1]
        widx = getattr(args, "w_index", None)
        if widx is None:
            raise InvalidInputError("multiplier checks need --w-index (basis element acting as w)")
        if not 0 <= widx < space.dim:
            raise InvalidInputError(f"--w-index {widx} out of range")
        return criteria.check_multiplier(space, space.basis[widx], side, cfg)
    if criterion_id == "positive":
        if space.unit is None:
            raise InvalidInputError(
                "the positivity check tests the space's distinguished element; none is set"
            )
        return criteria.check_positive(space, spaces.unit_element(space), cfg)
    runner = criteria.CRITERION_RUNNERS[criterion_id]
    return runner(space, cfg=cfg)


def _known_criteria() -> list:
    return sorted(list(criteria.CRITERION_RUNNERS) +
                  ["positive", "multiplier-left", "multiplier-right", "multiplier-quasi"])


def cmd_check(args) -> int:
    if args.criterion not in _known_criteria():
        print(f"error: unknown criterion {args.criterion!r}; known: {', '.join(_known_criteria())}",
              file=sys.stderr)
        return EXIT_INPUT_ERROR
    try:
        cfg = _build_config(args)
        RunManifest(command=args.command, inputs=[args.space_file], config=cfg,
                    output=args.out, format=args.format).validate()
        space = _load_space(args.space_file, args)
        report = _run_criterion(space, args.criterion, cfg, args)
    except OpspaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    _emit(_envelope(report.to_dict()), _report_text(report), args)
    return _VERDICT_EXIT[report.verdict]


def cmd_search(args) -> int:
    # identical decision path, wider default budget, and the per-restart trace kept
    if args.restarts is None:
        args.restarts = 256
    return cmd_check(args)


def cmd_verify_formulas(args) -> int:
    try:
        cfg = _build_config(args)
    except OpspaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    suites = formulas.run_all_suites(trials=args.trials, seed=cfg.seed)
    ok = all(s.passed for s in suites)
    payload = _envelope({
        "command": "verify-formulas",
        "trials": args.trials,
        "seed": cfg.seed,
        "suites": [s.to_dict() for s in suites],
        "all_passed": ok,
    })
    lines = []
    for s in suites:
        tag = "PASS" if s.passed else "FAIL"
        lines.append(f"[{tag}] {s.name:<32} trials={s.trials:<5} max deviation = {s.max_deviation:.3e}"
                     f" (tolerance {s.tolerance:.0e})")
    lines.append("all suites passed" if ok else "FAILURES present")
    _emit(payload, "\n".join(lines) + "\n", args)
    return EXIT_HOLDS if ok else EXIT_VIOLATED


def cmd_corpus(args) -> int:
    try:
        cfg = _build_config(args)
        if args.emit_spaces:
            corpus.write_space_files(args.emit_spaces)
        result = corpus.run_corpus(cfg, only=args.only, threads=cfg.threads)
    except OpspaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    payload = _envelope({
        "command": "corpus",
        "config": cfg.to_dict(),
        "rows": result["rows"],
        "all_match": result["all_match"],
    })
    width = max(len(r["entry"]) for r in result["rows"])
    lines = [f"{'entry':<{width}}  {'criterion':<24} {'expected':<20} {'verdict':<20} margin"]
    for r in result["rows"]:
        mark = "" if r["match"] else "   << MISMATCH"
        lines.append(f"{r['entry']:<{width}}  {r['criterion']:<24} {r['expected']:<20} "
                     f"{r['verdict']:<20} {_fmt_margin(r['margin'])}{mark}")
    lines.append("all entries match" if result["all_match"] else "MISMATCHES present")
    _emit(payload, "\n".join(lines) + "\n", args)
    return EXIT_HOLDS if result["all_match"] else EXIT_VIOLATED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="opspace",
                                 description="Decision procedures for concrete operator spaces")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="run one criterion on a space file")
    p_check.add_argument("space_file")
    p_check.add_argument("criterion", help="one of: " + ", ".join(_known_criteria()))
    p_check.add_argument("--unit-index", type=int, default=None,
                         help="use basis element #i as the distinguished element")
    p_check.add_argument("--w-index", type=int, default=None,
                         help="basis element acting as the candidate multiplier w")
    _add_config_flags(p_check)
    p_check.set_defaults(func=cmd_check)

    p_search = sub.add_parser("search", help="like check, with an enlarged budget and search trace")
    p_search.add_argument("space_file")
    p_search.add_argument("criterion")
    p_search.add_argument("--unit-index", type=int, default=None)
    p_search.add_argument("--w-index", type=int, default=None)
    _add_config_flags(p_search)
    p_search.set_defaults(func=cmd_search)

    p_vf = sub.add_parser("verify-formulas", help="run the block-matrix norm identity suites")
    p_vf.add_argument("--trials", type=int, default=200)
    _add_config_flags(p_vf)
    p_vf.set_defaults(func=cmd_verify_formulas)

    p_corpus = sub.add_parser("corpus", help="run every reference space against expected verdicts")
    p_corpus.add_argument("--only", default=None, help="run a single named entry")
    p_corpus.add_argument("--emit-spaces", default=None,
                          help="also write each entry's space-definition JSON into this directory")
    _add_config_flags(p_corpus)
    p_corpus.set_defaults(func=cmd_corpus)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
