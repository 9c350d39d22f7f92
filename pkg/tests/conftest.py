"""Shared test oracles, deliberately independent of the solver/encoder paths."""

from __future__ import annotations

import random

import pytest

from satexplain.core import CnfFormula, Clause


def naive_sat(clauses: list[list[int]], nvars: int) -> bool:
    """Truth-table satisfiability via bit-parallel masks (nvars <= 16)."""
    assert nvars <= 16
    width = 1 << nvars
    full = (1 << width) - 1
    var_mask = []
    for v in range(nvars + 1):
        var_mask.append(0)
    for v in range(1, nvars + 1):
        # assignment index bit v-1 gives var v's value
        m = 0
        for idx in range(width):
            if (idx >> (v - 1)) & 1:
                m |= 1 << idx
        var_mask[v] = m
    formula = full
    for clause in clauses:
        cm = 0
        for lit in clause:
            cm |= var_mask[abs(lit)] if lit > 0 else (~var_mask[abs(lit)] & full)
        formula &= cm
        if formula == 0:
            return False
    return formula != 0


def model_satisfies(clauses: list[list[int]], model) -> bool:
    """Independent model checker: every clause has a true literal."""
    for clause in clauses:
        if not any(
            (model[abs(l)] == 1) == (l > 0) for l in clause if abs(l) < len(model)
        ):
            return False
    return True


def unit_propagate(clauses: list[list[int]], units: dict[int, bool]):
    """Naive fixpoint propagation. Returns assignment dict or None on conflict."""
    assign = dict(units)
    changed = True
    while changed:
        changed = False
        for clause in clauses:
            unassigned = []
            satisfied = False
            for l in clause:
                val = assign.get(abs(l))
                if val is None:
                    unassigned.append(l)
                elif val == (l > 0):
                    satisfied = True
                    break
            if satisfied:
                continue
            if not unassigned:
                return None
            if len(unassigned) == 1:
                l = unassigned[0]
                assign[abs(l)] = l > 0
                changed = True
    return assign


def random_int_cnf(rng: random.Random, max_vars=10, max_clauses=18, max_len=4):
    nvars = rng.randint(1, max_vars)
    n_clauses = rng.randint(1, max_clauses)
    clauses = []
    for _ in range(n_clauses):
        width = rng.randint(1, min(max_len, nvars))
        variables = rng.sample(range(1, nvars + 1), width)
        clauses.append([v if rng.random() < 0.5 else -v for v in variables])
    return clauses, nvars


def random_formula(rng: random.Random, max_vars=8, max_clauses=12) -> CnfFormula:
    clauses, nvars = random_int_cnf(rng, max_vars, max_clauses)
    return CnfFormula(tuple(Clause.from_ints(c) for c in clauses), nvars)


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    rows = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" in nodeid and "::" in nodeid:
                word = "PASS" if status == "passed" else "FAIL"
                rows.append(f"ACCEPTANCE {word}: {nodeid.split('::')[-1]}")
    if rows:
        terminalreporter.write_sep("=", "acceptance criteria")
        for row in sorted(set(rows)):
            terminalreporter.write_line(row)
