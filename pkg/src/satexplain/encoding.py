"""Forest-to-CNF compilation and explanation-problem construction.

Each tree gets an output variable defined through bidirectional Tseitin
clauses over its 0-leaf paths (so the output is functionally determined, not
just implied); the majority vote is a sequential-counter cardinality circuit
whose top cell is the forest output. Hard clauses = circuit + asserted output;
soft clauses = one unit literal per feature of the instance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .core import (
    Clause,
    CnfFormula,
    ExplanationProblem,
    Instance,
    Label,
    Literal,
    VarMap,
    check_label,
)
from .forest import DecisionTree, RandomForest


class AlreadyClassifiedError(ValueError):
    """The instance already gets the target class; nothing to explain toward."""


@dataclass(frozen=True)
class EncodingStats:
    var_count: int
    feature_var_count: int
    clause_count: int
    encode_time: float


@dataclass(frozen=True)
class ForestEncoding:
    cnf: CnfFormula
    varmap: VarMap
    stats: EncodingStats


def _pos(var: int) -> Literal:
    return Literal(var, True)


def _neg(var: int) -> Literal:
    return Literal(var, False)


def encode_tree(
    tree: DecisionTree, varmap: VarMap, use_one_paths: bool = False
) -> tuple[list[Clause], Literal]:
    """Clauses defining a fresh output literal for one tree.

    Default formulation: an auxiliary per 0-leaf path equivalent to the path
    conjunction, and the output equivalent to "no 0-path taken". The one-path
    formulation (output = some 1-path taken) is the differential-testing twin.
    """
    paths = tree.paths()
    zero_paths = [p for p, label in paths if label == 0]
    one_paths = [p for p, label in paths if label == 1]
    y = varmap.fresh_aux()
    if not zero_paths:
        return [Clause(frozenset([_pos(y)]))], _pos(y)
    if not one_paths:
        return [Clause(frozenset([_neg(y)]))], _pos(y)

    clauses: list[Clause] = []

    def path_aux(path: list[tuple[int, int]]) -> int:
        lits = [
            Literal(varmap.feature_to_var[f], bool(v)) for f, v in path
        ]
        a = varmap.fresh_aux()
        for lit in lits:
            clauses.append(Clause(frozenset([_neg(a), lit])))
        clauses.append(Clause(frozenset([_pos(a), *(-lit for lit in lits)])))
        return a

    if use_one_paths:
        auxes = [path_aux(p) for p in one_paths]
        for a in auxes:
            clauses.append(Clause(frozenset([_neg(a), _pos(y)])))
        clauses.append(Clause(frozenset([_neg(y), *(_pos(a) for a in auxes)])))
    else:
        auxes = [path_aux(p) for p in zero_paths]
        for a in auxes:
            clauses.append(Clause(frozenset([_neg(y), _neg(a)])))
        clauses.append(Clause(frozenset([_pos(y), *(_pos(a) for a in auxes)])))
    return clauses, _pos(y)


def encode_cardinality(
    vote_vars: list[int], t: int, varmap: VarMap
) -> tuple[list[Clause], Literal]:
    """Sequential-counter circuit defining y <-> (at least t of the votes).

    Cells s[i][j] hold "at least j of the first i votes"; every cell is a
    fresh auxiliary constrained in both directions, so a complete vote
    assignment forces y by unit propagation alone. O(m*t) cells and clauses.
    """
    m = len(vote_vars)
    if not 1 <= t <= m:
        raise ValueError(f"threshold t={t} outside 1..{m}")
    clauses: list[Clause] = []
    prev: dict[int, int] = {}  # j -> cell variable for row i-1
    for i in range(1, m + 1):
        v = vote_vars[i - 1]
        cur: dict[int, int] = {}
        for j in range(1, min(i, t) + 1):
            s = varmap.fresh_aux()
            cur[j] = s
            a = prev.get(j)  # "at least j among first i-1"; None means false
            b = prev.get(j - 1) if j > 1 else True  # j-1 == 0 is trivially true
            if a is None and b is True:
                # s <-> v
                clauses.append(Clause(frozenset([_neg(s), _pos(v)])))
                clauses.append(Clause(frozenset([_pos(s), _neg(v)])))
            elif a is None:
                # s <-> b and v
                clauses.append(Clause(frozenset([_neg(s), _pos(b)])))
                clauses.append(Clause(frozenset([_neg(s), _pos(v)])))
                clauses.append(Clause(frozenset([_pos(s), _neg(b), _neg(v)])))
            elif b is True:
                # s <-> a or v
                clauses.append(Clause(frozenset([_neg(s), _pos(a), _pos(v)])))
                clauses.append(Clause(frozenset([_pos(s), _neg(a)])))
                clauses.append(Clause(frozenset([_pos(s), _neg(v)])))
            else:
                # s <-> a or (b and v)
                clauses.append(Clause(frozenset([_neg(s), _pos(a), _pos(b)])))
                clauses.append(Clause(frozenset([_neg(s), _pos(a), _pos(v)])))
                clauses.append(Clause(frozenset([_pos(s), _neg(a)])))
                clauses.append(Clause(frozenset([_pos(s), _neg(b), _neg(v)])))
        prev = cur
    return clauses, _pos(prev[t])


def encode_forest(forest: RandomForest, use_one_paths: bool = False) -> ForestEncoding:
    """Conjoin the per-tree encodings with the majority-vote circuit."""
    start = time.perf_counter()
    varmap = VarMap.for_features(forest.n_features)
    clauses: list[Clause] = []
    vote_vars: list[int] = []
    for tree in forest.trees:
        tree_clauses, y_i = encode_tree(tree, varmap, use_one_paths=use_one_paths)
        clauses.extend(tree_clauses)
        vote_vars.append(y_i.variable)
    card_clauses, y = encode_cardinality(vote_vars, forest.threshold, varmap)
    clauses.extend(card_clauses)
    varmap.set_output(y.variable)
    varmap.validate()
    var_count = max(
        max(varmap.feature_to_var.values()),
        max(varmap.aux_vars, default=0),
        varmap.output_var,
    )
    cnf = CnfFormula(tuple(clauses), var_count)
    elapsed = time.perf_counter() - start
    stats = EncodingStats(
        var_count=var_count,
        feature_var_count=forest.n_features,
        clause_count=len(clauses),
        encode_time=elapsed,
    )
    return ForestEncoding(cnf, varmap, stats)


def instance_literals(varmap: VarMap, x: Instance) -> list[Literal]:
    return [
        Literal(varmap.feature_to_var[i], bool(v)) for i, v in enumerate(x.values)
    ]


def evaluate_encoding(enc: ForestEncoding, x: Instance) -> Label:
    """Output value forced by unit-propagating the instance literals.

    The circuit totally determines its auxiliaries, so plain fixpoint
    propagation must force the output; anything else is an encoding bug.
    """
    assign: dict[int, bool] = {
        lit.variable: lit.positive for lit in instance_literals(enc.varmap, x)
    }
    int_clauses = [c.to_ints() for c in enc.cnf.clauses]
    changed = True
    while changed:
        changed = False
        for lits in int_clauses:
            unassigned = None
            satisfied = False
            count = 0
            for l in lits:
                val = assign.get(abs(l))
                if val is None:
                    unassigned = l
                    count += 1
                elif val == (l > 0):
                    satisfied = True
                    break
            if satisfied:
                continue
            if count == 0:
                raise RuntimeError("encoding conflict under a complete instance")
            if count == 1:
                assign[abs(unassigned)] = unassigned > 0
                changed = True
    if enc.varmap.output_var not in assign:
        raise RuntimeError("output variable not forced by the encoding")
    return 1 if assign[enc.varmap.output_var] else 0


def build_problem(
    enc: ForestEncoding, x: Instance, target_class: Label
) -> ExplanationProblem:
    """Partial Max-SAT instance: hard circuit + asserted target, soft instance."""
    check_label(target_class)
    if x.n != enc.varmap.n_features:
        raise ValueError("instance feature count does not match the encoding")
    if evaluate_encoding(enc, x) == target_class:
        raise AlreadyClassifiedError(
            f"instance already classified as {target_class}; nothing to explain"
        )
    out_lit = Literal(enc.varmap.output_var, bool(target_class))
    hard_clauses = (*enc.cnf.clauses, Clause(frozenset([out_lit])))
    hard = CnfFormula(hard_clauses, enc.cnf.var_count)
    soft = [Clause(frozenset([lit])) for lit in instance_literals(enc.varmap, x)]
    selectors = {i: enc.cnf.var_count + 1 + i for i in range(x.n)}
    return ExplanationProblem(
        hard=hard,
        soft=soft,
        selectors=selectors,
        target_class=target_class,
        instance=x,
        varmap=enc.varmap,
    )
