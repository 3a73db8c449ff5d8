"""Command-line entry point: parse, compile, solve, report.

Exit codes: 0 success, 1 validation failure, 2 syntax error, 3 internal
invariant breach, 4 oracle disagreement under ``--check``.
"""

from __future__ import annotations

import argparse
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import compiler, oracle, solver
from .model import InfluenceDiagram, ParseError, parse_model, validate

CHECK_TOL = 1e-9


@dataclass
class RunConfig:
    input_path: str
    order: list[str] | None = None  # explicit elimination sequence
    heuristic: str = "min-fill"
    seed: int = 0
    dot: dict[str, str] = field(default_factory=dict)  # target -> output path
    policies: bool = False
    stats: bool = False
    check: bool = False


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _policy_lines(result: solver.SolveResult, diagram: InfluenceDiagram) -> list[str]:
    lines = []
    for pol in result.policies:
        dom = ", ".join(v.name for v in pol.domain)
        lines.append(f"policy {pol.decision.name} (clique C{result.policy_clique[pol.decision.name]},"
                     f" domain: {dom if dom else 'none'})")
        idx_iter = [[]]
        for v in pol.domain:
            idx_iter = [prefix + [s] for prefix in idx_iter for s in range(len(v.states))]
        for idx in idx_iter:
            cfg = " ".join(f"{v.name}={v.states[s]}" for v, s in zip(pol.domain, idx))
            pick = pol.decision.states[int(pol.choice.values[tuple(idx)])]
            lines.append(f"  {cfg + ' ' if cfg else ''}-> {pick}")
    return lines


def run(config: RunConfig) -> tuple[int, str]:
    """Execute the pipeline; returns (exit code, report text)."""
    out = io.StringIO()

    def emit(line: str = ""):
        out.write(line + "\n")

    try:
        text = Path(config.input_path).read_text(encoding="utf-8")
    except OSError as e:
        emit(f"error: cannot read {config.input_path}: {e}")
        return 2, out.getvalue()

    try:
        diagram = parse_model(text)
    except ParseError as e:
        emit(f"syntax error: {e}")
        return 2, out.getvalue()

    problems = validate(diagram)
    if problems:
        emit(f"invalid model ({len(problems)} violation(s)):")
        for p in problems:
            emit(f"  {p}")
        return 1, out.getvalue()

    try:
        given = None
        if config.order is not None:
            by_name = {v.name: v for v in diagram.variables}
            missing = [n for n in config.order if n not in by_name]
            if missing:
                emit(f"error: --order names unknown variables {missing}")
                return 2, out.getvalue()
            given = [by_name[n] for n in config.order]
        tree, order, fills, moral, tri = compiler.compile_diagram(
            diagram, heuristic=config.heuristic, given=given
        )
        result = solver.solve(tree, diagram)
    except (compiler.OrderError,) as e:
        emit(f"error: {e}")
        return 2, out.getvalue()
    except (compiler.CompileError, solver.InvariantError) as e:
        emit(f"internal invariant breach: {e}")
        return 3, out.getvalue()

    emit(f"model: {config.input_path}")
    emit(f"variables: {len(diagram.variables)}  decisions: {diagram.partition.n}  "
         f"seed: {config.seed}")
    emit(f"elimination: {' '.join(v.name for v in order.sequence)}")
    emit(f"cliques: {len(tree.cliques)}")
    for c in tree.cliques:
        link = f" -> C{tree.parent[c.index]}" if c.index in tree.parent else " (root)"
        sep = ""
        if c.index in tree.parent:
            sep = f" [sep: {', '.join(sorted(v.name for v in tree.separator(c.index)))}]"
        emit(f"  C{c.index}: {', '.join(c.names())}{link}{sep}")
    emit(f"MEU {_fmt(result.meu)}")
    for pol in result.policies:
        emit(f"decision {pol.decision.name}: clique C{result.policy_clique[pol.decision.name]}")

    if config.policies:
        for line in _policy_lines(result, diagram):
            emit(line)

    if config.stats:
        emit(f"fill-ins: {len(fills)}")
        for e in sorted(tuple(sorted(v.name for v in f)) for f in fills):
            emit(f"  {e[0]} -- {e[1]}")
        sizes = {c.index: c.weight for c in tree.cliques}
        emit(f"max clique state-space size: {max(sizes.values())}")
        for k in sorted(sizes):
            emit(f"  C{k}: {sizes[k]} cells")
        emit(f"total table cells: {sum(sizes.values())}")

    code = 0
    if config.check:
        try:
            ref = oracle.brute_force(diagram)
            achieved = oracle.rollout(diagram, list(result.policies))
        except oracle.OracleCapError as e:
            emit(f"check skipped: {e}")
        else:
            scale = max(abs(ref.meu), abs(result.meu), 1.0)
            pol_scale = max(abs(ref.meu), abs(achieved), 1.0)
            meu_ok = abs(ref.meu - result.meu) <= CHECK_TOL * scale
            pol_ok = abs(ref.meu - achieved) <= CHECK_TOL * pol_scale
            emit(f"check: oracle MEU {_fmt(ref.meu)}; policies achieve {_fmt(achieved)}")
            if meu_ok and pol_ok:
                emit("check: agreement")
            else:
                emit("check: MISMATCH")
                code = 4

    for target, path in sorted(config.dot.items()):
        if target == "moral":
            content = compiler.moral_to_dot(moral)
        elif target == "tri":
            content = compiler.triangulated_to_dot(tri, fills)
        else:
            content = compiler.tree_to_dot(tree)
        Path(path).write_text(content, encoding="utf-8")
        emit(f"wrote {target} dot: {path}")

    return code, out.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="idjt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="compile and solve a model file")
    s.add_argument("file")
    group = s.add_mutually_exclusive_group()
    group.add_argument("--order", help="comma-separated elimination sequence")
    group.add_argument(
        "--heuristic", choices=["min-fill", "min-weight"], default="min-fill"
    )
    s.add_argument("--seed", type=int, default=0)
    s.add_argument(
        "--dot",
        action="append",
        default=[],
        metavar="TARGET=PATH",
        help="write DOT output; TARGET is moral, tri, or tree (repeatable)",
    )
    s.add_argument("--policies", action="store_true", help="print full policy tables")
    s.add_argument("--stats", action="store_true", help="print compilation statistics")
    s.add_argument("--check", action="store_true", help="compare against the brute-force oracle")
    return parser


def config_from_args(args) -> RunConfig:
    dot = {}
    for spec in args.dot:
        target, _, path = spec.partition("=")
        if target not in ("moral", "tri", "tree") or not path:
            raise SystemExit(f"error: bad --dot argument {spec!r} (want moral|tri|tree=PATH)")
        dot[target] = path
    return RunConfig(
        input_path=args.file,
        order=args.order.split(",") if args.order else None,
        heuristic=args.heuristic,
        seed=args.seed,
        dot=dot,
        policies=args.policies,
        stats=args.stats,
        check=args.check,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    code, report = run(config_from_args(args))
    sys.stdout.write(report)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
