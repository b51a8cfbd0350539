"""Tree evaluation, beta-reduction, normalization and convertibility.

The same normalization driver serves two interchangeable matching back ends:
the compiled decision trees and the rule-by-rule declarative matcher.  Terms
are matched modulo reduction: the stack top is head-normalized just before a
Switch inspects it, and in convertibility mode the constraint checks compare
or inspect fully normalized terms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from . import dtree as dt
from .dtree import DTree, trees_of_ruleset
from .patterns import (
    Closure,
    Rule,
    RuleSetError,
    apply_subst,
    naive_rewrite_head,
    validate_rule,
)
from .terms import (
    Abst,
    App,
    MetaApp,
    Prod,
    Sort,
    Symb,
    Term,
    TermError,
    Var,
    alpha_eq,
    build_app,
    free_vars,
    fresh_var,
    spine,
    subst,
)

WHNF = "whnf"
SNF = "snf"
CONVERTIBLE = "convertible"
ALPHA = "alpha"
TREE = "tree"
NAIVE = "naive"


class DivergenceError(Exception):
    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"rewrite budget of {budget} steps exhausted")


class Steps:
    """Per-evaluation rewrite-step budget; counts beta and rule steps."""

    __slots__ = ("remaining", "used", "budget")

    def __init__(self, budget: int):
        self.budget = budget
        self.remaining = budget
        self.used = 0

    def tick(self):
        self.remaining -= 1
        self.used += 1
        if self.remaining < 0:
            raise DivergenceError(self.budget)


@dataclass(slots=True)
class EvalContext:
    """Immutable evaluation setup: compiled trees, rules, strategy, budget."""

    trees: dict[tuple[str, int], DTree]
    rules_by_head: dict[str, list[Rule]]
    tree_arities: dict[str, tuple[int, ...]]  # descending
    strategy: str = SNF
    max_steps: int = 10**8
    equality: str = CONVERTIBLE
    engine: str = TREE
    heuristic: str = "max-constructors"

    @classmethod
    def from_rules(
        cls,
        rules: Sequence[Rule],
        *,
        engine: str = TREE,
        strategy: str = SNF,
        max_steps: int = 10**8,
        equality: str = CONVERTIBLE,
        heuristic: str = "max-constructors",
    ) -> "EvalContext":
        bad: dict[str, list[str]] = {}
        for i, r in enumerate(rules):
            violations = validate_rule(r)
            if violations:
                bad[r.label or f"rule {i + 1}"] = violations
        if bad:
            raise RuleSetError(bad)
        by_head: dict[str, list[Rule]] = {}
        for r in rules:
            by_head.setdefault(r.head, []).append(r)
        trees = trees_of_ruleset(rules, heuristic=heuristic)
        arities: dict[str, list[int]] = {}
        for head, arity in trees:
            arities.setdefault(head, []).append(arity)
        return cls(
            trees=trees,
            rules_by_head=by_head,
            tree_arities={
                h: tuple(sorted(a, reverse=True)) for h, a in arities.items()
            },
            strategy=strategy,
            max_steps=max_steps,
            equality=equality,
            engine=engine,
            heuristic=heuristic,
        )


# ---------------------------------------------------------------------------
# Normalization


def whnf(ctx: EvalContext, t: Term, steps: Optional[Steps] = None) -> Term:
    """Weak-head normal form: beta-reduce and rewrite at the head until
    neither applies."""
    if steps is None:
        steps = Steps(ctx.max_steps)
    while True:
        head, args = spine(t)
        th = type(head)
        if th is Abst and args:
            steps.tick()
            body = subst(head.body, {head.var.vid: args[0]})
            t = build_app(body, args[1:])
            continue
        if th is Symb:
            reduced = rewrite_head(ctx, head.name, args, steps)
            if reduced is not None:
                steps.tick()
                t = reduced
                continue
        return t


def snf(ctx: EvalContext, t: Term, steps: Optional[Steps] = None) -> Term:
    """Strong normal form: weak-head normalize, then recurse into spine
    arguments, abstraction bodies and domains.  Iterative, so arbitrarily
    deep results (unary numerals, long lists) are fine."""
    if steps is None:
        steps = Steps(ctx.max_steps)
    EXPAND, BUILD_APP, BUILD_ABST, BUILD_PROD = 0, 1, 2, 3
    work: list[tuple[int, object]] = [(EXPAND, t)]
    out: list[Term] = []
    while work:
        tag, x = work.pop()
        if tag == EXPAND:
            x = whnf(ctx, x, steps)
            tx = type(x)
            if tx is App:
                head, args = spine(x)
                work.append((BUILD_APP, len(args) + 1))
                for a in reversed(args):
                    work.append((EXPAND, a))
                work.append((EXPAND, head))
            elif tx is Abst:
                work.append((BUILD_ABST, (x.var, x.domain is not None)))
                work.append((EXPAND, x.body))
                if x.domain is not None:
                    work.append((EXPAND, x.domain))
            elif tx is Prod:
                work.append((BUILD_PROD, x.var))
                work.append((EXPAND, x.codomain))
                work.append((EXPAND, x.domain))
            elif tx is MetaApp:
                raise TermError("rhs-only construct reached the evaluator")
            else:
                out.append(x)
        elif tag == BUILD_APP:
            n = x
            parts = out[-n:]
            del out[-n:]
            out.append(build_app(parts[0], parts[1:]))
        elif tag == BUILD_ABST:
            var, has_domain = x
            body = out.pop()
            domain = out.pop() if has_domain else None
            out.append(Abst(var, domain, body))
        else:  # BUILD_PROD
            codomain = out.pop()
            domain = out.pop()
            out.append(Prod(x, domain, codomain))
    return out[0]


def normalize(ctx: EvalContext, t: Term, steps: Optional[Steps] = None) -> Term:
    return snf(ctx, t, steps) if ctx.strategy == SNF else whnf(ctx, t, steps)


def convertible(
    ctx: EvalContext, t: Term, u: Term, steps: Optional[Steps] = None
) -> bool:
    """Equality modulo beta and the rule set: compare strong normal forms."""
    if steps is None:
        steps = Steps(ctx.max_steps)
    return alpha_eq(snf(ctx, t, steps), snf(ctx, u, steps))


def equal_terms(ctx: EvalContext, t: Term, u: Term, steps: Steps) -> bool:
    if ctx.equality == CONVERTIBLE:
        return convertible(ctx, t, u, steps)
    return alpha_eq(t, u)


# ---------------------------------------------------------------------------
# Tree evaluation


def instantiate(
    leaf: dt.Leaf, store: Sequence[tuple[Term, tuple[Var, ...]]]
) -> Term:
    """Build the right-hand side of a matched rule from the stored subterms.

    Each pattern variable becomes a closure whose formals are the selected
    snapshot binders of its store entry.
    """
    sub: dict[str, Closure] = {}
    for name, (slot, selector) in leaf.env.items():
        term, snapshot = store[slot]
        sub[name] = Closure(tuple(snapshot[k] for k in selector), term)
    return apply_subst(sub, leaf.rhs)


def eval_tree(
    ctx: EvalContext,
    tree: DTree,
    args: Sequence[Term],
    steps: Steps,
    trace: Optional[list] = None,
) -> Optional[Term]:
    """Run a decision tree on an argument vector.

    Returns the instantiated right-hand side, or None when matching fails.
    The stack top is weak-head normalized before every Switch; Store saves
    the top without popping, together with the binders opened so far.
    """
    stack: list[Term] = list(args)
    stack.reverse()  # stack[-1] is the first column
    store: list[tuple[Term, tuple[Var, ...]]] = []
    binders: list[Var] = []
    node = tree
    while True:
        tn = type(node)
        if tn is dt.Switch:
            top = whnf(ctx, stack[-1], steps)
            stack[-1] = top
            head, hargs = spine(top)
            if type(head) is Symb:
                child = node.sym_cases.get((head.name, len(hargs)))
                if child is not None:
                    if trace is not None:
                        trace.append(("switch", (head.name, len(hargs))))
                    stack.pop()
                    stack.extend(reversed(hargs))
                    node = child
                    continue
            elif type(top) is Abst and node.lam_case is not None:
                v2 = fresh_var(top.var.name)
                body = subst(top.body, {top.var.vid: v2})
                if trace is not None:
                    trace.append(("switch", "lambda"))
                stack.pop()
                stack.append(body)
                binders.append(v2)
                node = node.lam_case
                continue
            if node.default_case is not None:
                if trace is not None:
                    trace.append(("switch", "*"))
                stack.pop()
                node = node.default_case
                continue
            if trace is not None:
                trace.append(("no-case",))
            return None
        if tn is dt.Store:
            if trace is not None:
                trace.append(("store", len(store)))
            store.append((stack[-1], tuple(binders)))
            node = node.child
            continue
        if tn is dt.Swap:
            i = node.index
            stack[-1], stack[-i] = stack[-i], stack[-1]
            if trace is not None:
                trace.append(("swap", i))
            node = node.child
            continue
        if tn is dt.Leaf:
            if trace is not None:
                trace.append(("leaf", len(store)))
            return instantiate(node, store)
        if tn is dt.BinNl:
            i, j = node.slots
            ok = equal_terms(ctx, store[i][0], store[j][0], steps)
            if trace is not None:
                trace.append(("nl", (i, j), ok))
            node = node.succ if ok else node.fail
            continue
        if tn is dt.BinCl:
            term, snapshot = store[node.slot]
            if ctx.equality == CONVERTIBLE:
                term = snf(ctx, term, steps)
            fv = free_vars(term)
            snap_ids = [v.vid for v in snapshot]
            allowed = {snap_ids[k] for k in node.allowed}
            ok = (fv & set(snap_ids)) <= allowed
            if trace is not None:
                trace.append(("cl", node.slot, ok))
            node = node.succ if ok else node.fail
            continue
        if tn is dt.Fail:
            if trace is not None:
                trace.append(("fail",))
            return None
        raise TermError(f"malformed tree node {tn!r}")


def rewrite_head(
    ctx: EvalContext, head: str, args: Sequence[Term], steps: Steps
) -> Optional[Term]:
    """One rewrite attempt at a symbol head: largest consumable arity first,
    leftover arguments reattached to the instantiated right-hand side."""
    if ctx.engine == TREE:
        arities = ctx.tree_arities.get(head)
        if arities is None:
            return None
        n = len(args)
        for arity in arities:
            if arity > n:
                continue
            result = eval_tree(ctx, ctx.trees[(head, arity)], args[:arity], steps)
            if result is not None:
                return build_app(result, args[arity:])
        return None
    rules = ctx.rules_by_head.get(head)
    if not rules:
        return None
    found = naive_rewrite_head(
        rules,
        head,
        args,
        whnf=lambda u: whnf(ctx, u, steps),
        equal=lambda a, b: equal_terms(ctx, a, b, steps),
        fv_normalize=(
            (lambda u: snf(ctx, u, steps)) if ctx.equality == CONVERTIBLE else None
        ),
    )
    if found is None:
        return None
    return found[1]
