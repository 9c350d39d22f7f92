"""Embedded equivalence suite: enumeration vs brute force on small forests.

Generates random forests with unconstrained structure (not just trainable
ones), explains a random instance, and cross-checks the MCS family against
the brute-force minimal flip sets and the dualized MUS family against the
brute-force sufficient sets.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .core import Instance
from .encoding import build_problem, encode_forest
from .enumeration import (
    TargetUnreachableError,
    brute_force_explanations,
    check_mus_directly,
    enumerate_mcs,
    enumerate_mus_by_dualization,
)
from .forest import DecisionTree, Leaf, Node, RandomForest, predict_forest


def random_tree(rng: random.Random, n_features: int, max_depth: int) -> DecisionTree:
    def grow(depth: int, available: list[int]):
        if depth == 0 or not available or rng.random() < 0.3:
            return Leaf(rng.randint(0, 1))
        f = rng.choice(available)
        rest = [g for g in available if g != f]
        return Node(f, grow(depth - 1, rest), grow(depth - 1, rest))

    root = grow(max_depth, list(range(n_features)))
    if isinstance(root, Leaf) and rng.random() < 0.5:
        f = rng.randrange(n_features)
        root = Node(f, Leaf(rng.randint(0, 1)), Leaf(rng.randint(0, 1)))
    return DecisionTree(root, n_features)


def random_problem(
    rng: random.Random,
    max_features: int = 12,
    max_trees: int = 5,
    max_depth: int = 4,
) -> tuple[RandomForest, Instance]:
    n = rng.randint(2, max_features)
    m = rng.randint(1, max_trees)
    trees = tuple(random_tree(rng, n, rng.randint(1, max_depth)) for _ in range(m))
    t = rng.randint(1, m)
    forest = RandomForest(trees, t, n)
    x = Instance(tuple(rng.randint(0, 1) for _ in range(n)))
    return forest, x


@dataclass
class CheckOutcome:
    n_features: int
    n_trees: int
    locally_constant: bool
    n_cf: int
    n_sr: int


def check_equivalence(
    forest: RandomForest,
    x: Instance,
    use_one_paths: bool = False,
    verify_mus: bool = True,
) -> CheckOutcome:
    """Raises AssertionError on any mismatch between routes."""
    fx = predict_forest(forest, x)
    target = 1 - fx
    cf_expected, sr_expected = brute_force_explanations(forest, x, target)
    enc = encode_forest(forest, use_one_paths=use_one_paths)
    problem = build_problem(enc, x, target)
    try:
        mcs = enumerate_mcs(problem)
    except TargetUnreachableError:
        assert cf_expected == [], (
            f"enumerator says locally constant but brute force found {cf_expected}"
        )
        assert sr_expected == [frozenset()]
        return CheckOutcome(x.n, len(forest.trees), True, 0, 1)
    assert mcs.complete
    got_cf = set(mcs.mcs_sets)
    assert got_cf == set(cf_expected), (
        f"MCS family mismatch: got {sorted(map(sorted, got_cf))}, "
        f"expected {sorted(map(sorted, cf_expected))}"
    )
    mus = enumerate_mus_by_dualization(mcs)
    assert mus.complete
    got_sr = set(mus.mus_sets)
    assert got_sr == set(sr_expected), (
        f"MUS family mismatch: got {sorted(map(sorted, got_sr))}, "
        f"expected {sorted(map(sorted, sr_expected))}"
    )
    if verify_mus:
        for m in mus.mus_sets:
            check_mus_directly(problem, m)
    return CheckOutcome(x.n, len(forest.trees), False, len(got_cf), len(got_sr))


def _and_or_gadgets() -> list[str]:
    """The two hand-checkable cases: conjunction and disjunction surrogates."""
    from .core import Clause, CnfFormula, ExplanationProblem

    failures = []
    # hard: (x1)(x2) with target asserted; soft: instance (0,0)
    and_hard = CnfFormula(
        (Clause.from_ints([1]), Clause.from_ints([2])), 2
    )
    or_hard = CnfFormula((Clause.from_ints([1, 2]),), 2)
    soft = [Clause.from_ints([-1]), Clause.from_ints([-2])]
    for name, hard, expect_mcs, expect_mus in (
        ("and", and_hard, {frozenset({0, 1})}, {frozenset({0}), frozenset({1})}),
        ("or", or_hard, {frozenset({0}), frozenset({1})}, {frozenset({0, 1})}),
    ):
        problem = ExplanationProblem(hard, list(soft), {0: 3, 1: 4}, 1)
        mcs = enumerate_mcs(problem)
        if not (mcs.complete and set(mcs.mcs_sets) == expect_mcs):
            failures.append(f"{name}: MCS {mcs.mcs_sets} != {expect_mcs}")
            continue
        mus = enumerate_mus_by_dualization(mcs)
        if not (mus.complete and set(mus.mus_sets) == expect_mus):
            failures.append(f"{name}: MUS {mus.mus_sets} != {expect_mus}")
    return failures


def run_selftest(problems: int = 40, seed: int = 7) -> tuple[bool, list[str]]:
    lines = []
    ok = True
    failures = _and_or_gadgets()
    for f in failures:
        ok = False
        lines.append(f"FAIL gadget {f}")
    if not failures:
        lines.append("PASS gadget and/or cases")
    rng = random.Random(seed)
    fails = 0
    constant = 0
    for i in range(problems):
        forest, x = random_problem(rng)
        try:
            outcome = check_equivalence(forest, x, use_one_paths=bool(i % 2))
            if outcome.locally_constant:
                constant += 1
        except AssertionError as e:
            ok = False
            fails += 1
            lines.append(f"FAIL problem {i}: {e}")
    lines.append(
        f"{'PASS' if fails == 0 else 'FAIL'} equivalence on {problems} random problems "
        f"({constant} locally constant)"
    )
    return ok, lines
