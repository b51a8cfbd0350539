"""Command-line front end.

Exit codes: 0 ok, 1 usage, 2 parse error, 3 validation or unknown symbol,
4 assertion failure, 5 rewrite budget exhausted.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .corpus import builtin_benchmark, file_benchmark, run_benchmark
from .dtree import HEURISTICS, to_dot, tree_stats, tree_text, trees_of_ruleset
from .engine import DivergenceError, EvalContext, Steps, convertible, normalize
from .patterns import RuleSetError
from .syntax import (
    Assert,
    Compute,
    ParseError,
    ScopeError,
    parse_file,
    print_term,
)

OK, USAGE, PARSE, VALIDATION, ASSERTION, DIVERGENCE = 0, 1, 2, 3, 4, 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rwtree", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="parse, validate and compile a file")
    c.add_argument("file")

    r = sub.add_parser("run", help="execute compute/assert directives")
    r.add_argument("file")
    r.add_argument("--strategy", choices=["whnf", "snf"], default="snf")
    r.add_argument("--engine", choices=["tree", "naive"], default="tree")
    r.add_argument("--max-steps", type=int, default=10**8)

    t = sub.add_parser("tree", help="print the decision tree for a symbol")
    t.add_argument("file")
    t.add_argument("symbol")
    t.add_argument("--arity", type=int, default=None)
    t.add_argument("--dot", action="store_true")
    t.add_argument(
        "--heuristic", choices=sorted(HEURISTICS), default="max-constructors"
    )

    b = sub.add_parser("bench", help="benchmark tree vs naive matching")
    b.add_argument("target", help=".rw file or builtin like fib(18)")
    b.add_argument("--engine", choices=["tree", "naive", "both"], default="both")
    b.add_argument("--repeat", type=int, default=3)
    b.add_argument("--max-steps", type=int, default=10**8)
    b.add_argument("--json", dest="json_path", default=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return USAGE
    try:
        if args.command == "check":
            return cmd_check(args.file)
        if args.command == "run":
            return cmd_run(args.file, args.strategy, args.engine, args.max_steps)
        if args.command == "tree":
            return cmd_tree(args.file, args.symbol, args.arity, args.dot, args.heuristic)
        if args.command == "bench":
            return cmd_bench(
                args.target, args.engine, args.repeat, args.max_steps, args.json_path
            )
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return USAGE
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return PARSE
    except ScopeError as e:
        print(f"scope error: {e}", file=sys.stderr)
        return VALIDATION
    except RuleSetError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return VALIDATION
    except DivergenceError as e:
        print(f"divergence: {e}", file=sys.stderr)
        return DIVERGENCE
    raise AssertionError("unreachable")


def _read(path: str) -> str:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"no such file: {path}")
    return p.read_text(encoding="utf-8")


def cmd_check(path: str) -> int:
    source = parse_file(_read(path))
    trees = trees_of_ruleset(source.rules)
    print(f"{path}: ok, {len(source.rules)} rules, {len(trees)} trees")
    for (head, arity), tree in sorted(trees.items()):
        stats = tree_stats(tree)
        counts = " ".join(f"{k}={v}" for k, v in sorted(stats["counts"].items()))
        print(
            f"  {head}/{arity}: depth={stats['depth']} "
            f"store={stats['store_size']} {counts}"
        )
    return OK


def cmd_run(path: str, strategy: str, engine: str, max_steps: int) -> int:
    if max_steps < 1:
        raise UsageError("--max-steps must be positive")
    source = parse_file(_read(path))
    ctx = EvalContext.from_rules(
        source.rules, engine=engine, strategy=strategy, max_steps=max_steps
    )
    for item in source.items:
        if isinstance(item, Compute):
            result = normalize(ctx, item.term, Steps(max_steps))
            print(print_term(result))
        elif isinstance(item, Assert):
            if not convertible(ctx, item.lhs, item.rhs, Steps(max_steps)):
                print(
                    f"assertion failed at line {item.line}: "
                    f"{print_term(item.lhs)} != {print_term(item.rhs)}",
                    file=sys.stderr,
                )
                return ASSERTION
    return OK


def cmd_tree(path: str, symbol: str, arity, dot: bool, heuristic: str) -> int:
    source = parse_file(_read(path))
    trees = trees_of_ruleset(source.rules, heuristic=heuristic)
    keys = [
        key
        for key in sorted(trees)
        if key[0] == symbol and (arity is None or key[1] == arity)
    ]
    if not keys:
        wanted = symbol if arity is None else f"{symbol}/{arity}"
        print(f"no rules for {wanted}", file=sys.stderr)
        return VALIDATION
    for key in keys:
        if dot:
            print(to_dot(trees[key], print_rhs=print_term))
        else:
            print(f"{key[0]}/{key[1]}:")
            print(tree_text(trees[key], print_rhs=print_term))
    return OK


def cmd_bench(
    target: str, engine: str, repeat: int, max_steps: int, json_path
) -> int:
    if repeat < 1:
        raise UsageError("--repeat must be at least 1")
    bench = builtin_benchmark(target)
    if bench is None:
        bench = file_benchmark(target, _read(target))
    engines = ["tree", "naive"] if engine == "both" else [engine]
    lines = []
    for eng in engines:
        report = run_benchmark(bench, eng, repeat, max_steps)
        lines.append(report.to_json())
        print(lines[-1])
    if json_path:
        Path(json_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return OK


if __name__ == "__main__":
    sys.exit(main())
