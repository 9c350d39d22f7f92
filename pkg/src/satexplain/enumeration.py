"""Counterfactual and sufficient-reason enumeration.

Counterfactuals are the Minimal Correction Subsets of the soft (instance)
clauses: the blocking-loop enumerator repeatedly finds a model of the hard
clauses, grows its satisfied soft set to a maximal satisfiable subset, emits
the complement, and blocks it. Sufficient reasons are the Minimal
Unsatisfiable Subsets, derived as minimal hitting sets of the complete MCS
family. Brute-force twins over the forest's truth table back every result in
tests.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import combinations

from .core import ExplanationProblem, Instance, Label
from .forest import RandomForest, predict_forest
from .solver import SolverBudgetExceeded, SolverSession, model_true


class TargetUnreachableError(RuntimeError):
    """The hard clauses alone are unsatisfiable: the surrogate never reaches
    the target class locally, so no counterfactual exists."""


class IncompleteMcsError(ValueError):
    """Dualization requires the complete MCS family."""


@dataclass
class McsResult:
    mcs_sets: list[frozenset[int]]
    complete: bool
    elapsed: float = 0.0


@dataclass
class MusResult:
    mus_sets: list[frozenset[int]]
    complete: bool
    elapsed: float = 0.0


class _Deadline:
    def __init__(self, budget: float | None):
        self.t0 = time.monotonic()
        self.limit = None if budget is None else self.t0 + budget

    def remaining(self) -> float | None:
        if self.limit is None:
            return None
        return self.limit - time.monotonic()

    def exhausted(self) -> bool:
        return self.limit is not None and time.monotonic() >= self.limit

    def elapsed(self) -> float:
        return time.monotonic() - self.t0


def _mcs_session(problem: ExplanationProblem) -> tuple[SolverSession, list[int]]:
    session = SolverSession()
    top = max(
        problem.hard.var_count,
        max((problem.soft_literal(i).variable for i in range(problem.n_soft)), default=0),
        max(problem.selectors.values(), default=0),
    )
    session.ensure_var(top)
    for clause in problem.hard.clauses:
        session.add_clause(clause)
    soft_lits = []
    for i in range(problem.n_soft):
        lit = problem.soft_literal(i).to_int()
        soft_lits.append(lit)
        session.add_clause([-problem.selectors[i], lit])
        # bias models toward agreeing with the instance: smaller correction sets
        session.set_phase(abs(lit), lit > 0)
    return session, soft_lits


def enumerate_mcs(
    problem: ExplanationProblem,
    max_count: int | None = None,
    budget: float | None = None,
) -> McsResult:
    """All MCSes of the soft clauses, or a flagged prefix under limits."""
    deadline = _Deadline(budget)
    session, soft_lits = _mcs_session(problem)
    n = problem.n_soft
    all_indices = frozenset(range(n))

    def solve(assumptions=()):
        return session.solve(assumptions, budget_seconds=deadline.remaining())

    try:
        res = solve()
    except SolverBudgetExceeded:
        return McsResult([], complete=False, elapsed=deadline.elapsed())
    if not res.is_sat:
        raise TargetUnreachableError(
            "hard clauses are unsatisfiable: no counterfactual exists locally"
        )
    found: list[frozenset[int]] = []
    complete = True
    try:
        check = solve([problem.selectors[i] for i in range(n)])
        if check.is_sat:
            return McsResult([], complete=True, elapsed=deadline.elapsed())
        while True:
            if deadline.exhausted():
                complete = False
                break
            satisfied = {i for i in range(n) if model_true(res.model, soft_lits[i])}
            for c in range(n):
                if c in satisfied:
                    continue
                assumptions = [problem.selectors[i] for i in sorted(satisfied)]
                assumptions.append(problem.selectors[c])
                attempt = solve(assumptions)
                if attempt.is_sat:
                    satisfied = {
                        i for i in range(n) if model_true(attempt.model, soft_lits[i])
                    }
            mcs = all_indices - satisfied
            if not mcs:
                raise RuntimeError("grew past an UNSAT-certified full soft set")
            found.append(mcs)
            session.add_clause([soft_lits[i] for i in sorted(mcs)])
            if max_count is not None and len(found) >= max_count:
                final = solve()
                complete = not final.is_sat
                break
            res = solve()
            if not res.is_sat:
                break
    except SolverBudgetExceeded:
        complete = False
    found.sort(key=lambda s: (len(s), sorted(s)))
    return McsResult(found, complete=complete, elapsed=deadline.elapsed())


def minimal_hitting_sets(
    family: list[frozenset[int]],
    max_count: int | None = None,
    budget: float | None = None,
) -> tuple[list[frozenset[int]], bool]:
    """All inclusion-minimal hitting sets of a family of non-empty sets."""
    deadline = _Deadline(budget)
    canon = sorted((frozenset(s) for s in family), key=lambda s: (len(s), sorted(s)))
    if any(not s for s in canon):
        raise ValueError("cannot hit an empty set")
    results: list[frozenset[int]] = []
    seen: set[frozenset[int]] = set()
    stopped = False

    def is_minimal(h: frozenset[int]) -> bool:
        return all(any(s & h == {e} for s in canon) for e in h)

    def dfs(h: frozenset[int], unhit: list[frozenset[int]]) -> bool:
        nonlocal stopped
        if deadline.exhausted() or (max_count is not None and len(results) >= max_count):
            stopped = True
            return True
        if any(m <= h for m in results):
            return False
        if not unhit:
            if h not in seen and is_minimal(h):
                seen.add(h)
                results.append(h)
            return False
        pick = min(unhit, key=lambda s: (len(s), sorted(s)))
        for e in sorted(pick):
            if dfs(h | {e}, [s for s in unhit if e not in s]):
                return True
        return False

    dfs(frozenset(), canon)
    results.sort(key=lambda s: (len(s), sorted(s)))
    return results, not stopped


def enumerate_mus_by_dualization(
    mcs: McsResult,
    max_count: int | None = None,
    budget: float | None = None,
    problem: ExplanationProblem | None = None,
    verify: bool = False,
) -> MusResult:
    """MUSes as the minimal hitting sets of the complete MCS family.

    With ``verify`` and the source problem, each MUS additionally passes one
    direct UNSAT check plus per-element removal SAT checks.
    """
    if not mcs.complete:
        raise IncompleteMcsError(
            "MUS dualization needs a complete MCS enumeration; got a truncated one"
        )
    start = time.monotonic()
    if not mcs.mcs_sets:
        return MusResult([], complete=True, elapsed=0.0)
    sets, complete = minimal_hitting_sets(mcs.mcs_sets, max_count, budget)
    if verify:
        if problem is None:
            raise ValueError("verification requires the source problem")
        for mus in sets:
            check_mus_directly(problem, mus)
    return MusResult(sets, complete=complete, elapsed=time.monotonic() - start)


def hard_session(problem: ExplanationProblem) -> SolverSession:
    session = SolverSession()
    session.ensure_var(problem.hard.var_count)
    for clause in problem.hard.clauses:
        session.add_clause(clause)
    return session


def soft_subset_satisfiable(
    problem: ExplanationProblem,
    indices,
    session: SolverSession | None = None,
) -> bool:
    """Is hard + the given soft clauses satisfiable? (assumption-based)"""
    if session is None:
        session = hard_session(problem)
    assumptions = [problem.soft_literal(i).to_int() for i in sorted(indices)]
    return session.solve(assumptions).is_sat


def check_mus_directly(problem: ExplanationProblem, mus: frozenset[int]) -> None:
    """Direct UNSAT + single-removal minimality checks; raises on failure."""
    session = hard_session(problem)
    if soft_subset_satisfiable(problem, mus, session):
        raise RuntimeError(f"claimed MUS {sorted(mus)} is satisfiable with hard")
    for e in sorted(mus):
        if not soft_subset_satisfiable(problem, mus - {e}, session):
            raise RuntimeError(f"claimed MUS {sorted(mus)} is not minimal at {e}")


def verify_counterfactual(
    forest: RandomForest, x: Instance, features, target: Label
) -> bool:
    """Does flipping exactly these features make the forest predict target?"""
    return predict_forest(forest, x.flip(features)) == target


def verify_sufficient_reason(
    forest: RandomForest,
    x: Instance,
    features,
    problem: ExplanationProblem | None = None,
    session: SolverSession | None = None,
    exhaustive_limit: int = 20,
) -> bool:
    """Do the fixed features force the current prediction for any completion?

    Checked by exhaustive completion sweep (feasible for n <= 20) and/or by a
    single UNSAT test of hard + the selected soft clauses; when both routes
    run they must agree.
    """
    features = frozenset(features)
    fx = predict_forest(forest, x)
    sweep = None
    if x.n <= exhaustive_limit:
        free = [i for i in range(x.n) if i not in features]
        sweep = True
        for bits in range(1 << len(free)):
            z = x.flip([f for k, f in enumerate(free) if ((bits >> k) & 1) != x.values[f]])
            if predict_forest(forest, z) != fx:
                sweep = False
                break
    sat_route = None
    if problem is not None or session is not None:
        if problem is None:
            raise ValueError("a session without its problem cannot map soft indices")
        sat_route = not soft_subset_satisfiable(problem, features, session)
    if sweep is None and sat_route is None:
        raise ValueError(
            f"n={x.n} exceeds the exhaustive limit and no problem was supplied"
        )
    if sweep is not None and sat_route is not None and sweep != sat_route:
        raise RuntimeError(
            f"sufficiency disagreement for {sorted(features)}: sweep={sweep} sat={sat_route}"
        )
    return sweep if sweep is not None else sat_route


def brute_force_explanations(
    forest: RandomForest, x: Instance, target: Label
) -> tuple[list[frozenset[int]], list[frozenset[int]]]:
    """Subset-minimal flip sets and sufficient sets by direct truth-table sweep.

    Independent of all SAT machinery: only ``predict_forest`` and bit masks.
    """
    n = x.n
    if n > 15:
        raise ValueError(f"brute force refuses n={n} > 15")
    fx = predict_forest(forest, x)
    if fx == target:
        raise ValueError("instance already classified as the target")
    diffs: list[int] = []  # flip masks reaching the target
    for mask in range(1 << n):
        z = x.flip([i for i in range(n) if (mask >> i) & 1])
        if predict_forest(forest, z) == target:
            diffs.append(mask)
    order = sorted(diffs, key=lambda m: (bin(m).count("1"), m))
    cf_masks: list[int] = []
    for d in order:
        if not any(m & d == m for m in cf_masks):
            cf_masks.append(d)
    sr_masks: list[int] = []
    for size in range(n + 1):
        for combo in combinations(range(n), size):
            s = 0
            for i in combo:
                s |= 1 << i
            if any(m & s == m for m in sr_masks):
                continue
            if all(d & s for d in diffs):
                sr_masks.append(s)
    to_set = lambda mask: frozenset(i for i in range(n) if (mask >> i) & 1)
    cf = sorted((to_set(m) for m in cf_masks), key=lambda s: (len(s), sorted(s)))
    sr = sorted((to_set(m) for m in sr_masks), key=lambda s: (len(s), sorted(s)))
    return cf, sr
