"""Assumption-based CDCL SAT solver.

Clauses are lists of signed DIMACS integers. The engine uses two-literal
watching, first-UIP conflict learning, VSIDS decisions, phase saving and Luby
restarts. Sessions are monotone-incremental: clauses may be added between
solves, never removed, so learned clauses stay sound across calls.
"""

from __future__ import annotations

import heapq
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import Clause, CnfFormula, emit_dimacs

_UNSET = -1


class SolverBudgetExceeded(Exception):
    """Raised when a solve call exhausts its wall-clock or conflict budget."""


class ExternalSolverError(RuntimeError):
    pass


@dataclass
class SolveResult:
    status: str  # "sat" | "unsat"
    model: tuple[int, ...] | None = None  # indexed by variable, entry 0 unused
    core: tuple[int, ...] | None = None  # subset of the assumption literals

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"


@dataclass
class SolverStats:
    conflicts: int = 0
    decisions: int = 0
    propagations: int = 0


class SolverSession:
    """One incremental solving session over a growing clause set."""

    def __init__(self):
        self.nvars = 0
        self.clauses: list[list[int]] = []  # internal-literal lists
        self.watches: list[list[list[int]]] = [[], []]  # indexed by internal lit
        self.assign: list[int] = [_UNSET]  # per var: -1 unset, 0 false, 1 true
        self.level: list[int] = [0]
        self.reason: list[list[int] | None] = [None]
        self.phase: list[int] = [0]  # saved polarity per var
        self.activity: list[float] = [0.0]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.order: list[tuple[float, int]] = []  # lazy max-activity heap
        self.var_inc = 1.0
        self.unsat = False
        self.stats = SolverStats()

    # -- variables ---------------------------------------------------------

    def ensure_var(self, var: int) -> None:
        while self.nvars < var:
            self.nvars += 1
            self.assign.append(_UNSET)
            self.level.append(0)
            self.reason.append(None)
            self.phase.append(0)
            self.activity.append(0.0)
            self.watches.append([])
            self.watches.append([])
            heapq.heappush(self.order, (0.0, self.nvars))

    def set_phase(self, var: int, value: bool) -> None:
        """Seed the saved polarity used when the variable is next decided."""
        self.ensure_var(var)
        self.phase[var] = 1 if value else 0

    # -- clause management ---------------------------------------------------

    def add_clause(self, clause: Clause | Iterable[int]) -> None:
        if isinstance(clause, Clause):
            lits = clause.to_ints()
        else:
            lits = list(clause)
        assert not self.trail_lim, "clauses may only be added at decision level 0"
        seen = set()
        internal: list[int] = []
        satisfied = False
        for l in lits:
            v = abs(l)
            self.ensure_var(v)
            il = 2 * v + (1 if l < 0 else 0)
            if il ^ 1 in seen:
                return  # tautology: always satisfied, nothing to store
            if il in seen:
                continue
            seen.add(il)
            a = self.assign[v]
            if a != _UNSET:
                val = a ^ (il & 1)
                if val == 1:
                    satisfied = True  # true at level 0
                continue  # false at level 0: drop the literal
            internal.append(il)
        if satisfied:
            return
        if not internal:
            self.unsat = True
            return
        if len(internal) == 1:
            if not self._enqueue(internal[0], None):
                self.unsat = True
            return
        self.clauses.append(internal)
        self.watches[internal[0]].append(internal)
        self.watches[internal[1]].append(internal)

    # -- core mechanics ------------------------------------------------------

    def _value(self, il: int) -> int:
        a = self.assign[il >> 1]
        return a if a == _UNSET else a ^ (il & 1)

    def _enqueue(self, il: int, reason: list[int] | None) -> bool:
        v = il >> 1
        a = self.assign[v]
        if a != _UNSET:
            return a ^ (il & 1) == 1
        self.assign[v] = (il & 1) ^ 1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(il)
        return True

    def _propagate(self) -> list[int] | None:
        trail = self.trail
        assign = self.assign
        watches = self.watches
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            self.stats.propagations += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                a = assign[first >> 1]
                if a != _UNSET and a ^ (first & 1) == 1:
                    ws[j] = c
                    j += 1
                    continue
                moved = False
                for k in range(2, len(c)):
                    lk = c[k]
                    ak = assign[lk >> 1]
                    if ak == _UNSET or ak ^ (lk & 1) == 1:
                        c[1] = lk
                        c[k] = false_lit
                        watches[lk].append(c)
                        moved = True
                        break
                if moved:
                    continue
                ws[j] = c
                j += 1
                if a != _UNSET:  # first is false: conflict
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    self.qhead = len(trail)
                    return c
                self._enqueue(first, c)
            del ws[j:]
        return None

    def _bump(self, var: int) -> None:
        act = self.activity[var] + self.var_inc
        self.activity[var] = act
        if act > 1e100:
            for v in range(1, self.nvars + 1):
                self.activity[v] *= 1e-100
            self.var_inc *= 1e-100
            act = self.activity[var]
        heapq.heappush(self.order, (-act, var))

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        """First-UIP learning. Returns (learned clause, backjump level)."""
        learnt = [0]
        seen = bytearray(self.nvars + 1)
        counter = 0
        p = -1
        index = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        c = confl
        while True:
            for q in c:
                if q == p:
                    continue
                v = q >> 1
                if not seen[v] and self.level[v] > 0:
                    seen[v] = 1
                    self._bump(v)
                    if self.level[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[self.trail[index] >> 1]:
                index -= 1
            p = self.trail[index]
            index -= 1
            v = p >> 1
            seen[v] = 0
            counter -= 1
            if counter == 0:
                break
            c = self.reason[v]
        learnt[0] = p ^ 1
        if len(learnt) == 1:
            return learnt, 0
        max_i = 1
        for k in range(2, len(learnt)):
            if self.level[learnt[k] >> 1] > self.level[learnt[max_i] >> 1]:
                max_i = k
        learnt[1], learnt[max_i] = learnt[max_i], learnt[1]
        return learnt, self.level[learnt[1] >> 1]

    def _analyze_final(self, p: int) -> list[int]:
        """Conflicting assumptions for failed literal p (internal, true on trail).

        Returns the core as external assumption literals."""
        out = [p]
        if self.trail_lim:
            seen = bytearray(self.nvars + 1)
            seen[p >> 1] = 1
            for i in range(len(self.trail) - 1, self.trail_lim[0] - 1, -1):
                lit = self.trail[i]
                x = lit >> 1
                if not seen[x]:
                    continue
                r = self.reason[x]
                if r is None:
                    out.append(lit ^ 1)
                else:
                    for q in r:
                        if q >> 1 != x and self.level[q >> 1] > 0:
                            seen[q >> 1] = 1
                seen[x] = 0
        # out holds negations of the culpable assumptions
        core = []
        for il in out:
            a = il ^ 1
            v = a >> 1
            core.append(v if a & 1 == 0 else -v)
        return core

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        bound = self.trail_lim[lvl]
        for i in range(len(self.trail) - 1, bound - 1, -1):
            il = self.trail[i]
            v = il >> 1
            self.phase[v] = self.assign[v]
            self.assign[v] = _UNSET
            self.reason[v] = None
            heapq.heappush(self.order, (-self.activity[v], v))
        del self.trail[bound:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _pick_branch(self) -> int:
        order = self.order
        while order:
            _, v = heapq.heappop(order)
            if self.assign[v] == _UNSET:
                return v
        return 0

    def _attach_learnt(self, learnt: list[int]) -> None:
        if len(learnt) == 1:
            self._enqueue(learnt[0], None)
            return
        self.clauses.append(learnt)
        self.watches[learnt[0]].append(learnt)
        self.watches[learnt[1]].append(learnt)
        self._enqueue(learnt[0], learnt)

    # -- solving ---------------------------------------------------------------

    def solve(
        self,
        assumptions: Sequence[int] = (),
        budget_seconds: float | None = None,
        conflict_limit: int | None = None,
    ) -> SolveResult:
        """Decide satisfiability under the given assumption literals.

        Raises :class:`SolverBudgetExceeded` when a budget runs out; that is a
        distinct outcome, not SAT or UNSAT.
        """
        if self.unsat:
            return SolveResult("unsat", core=())
        for a in assumptions:
            self.ensure_var(abs(a))
        assume = [2 * abs(a) + (1 if a < 0 else 0) for a in assumptions]
        deadline = None if budget_seconds is None else time.monotonic() + budget_seconds
        conflict_cap = None if conflict_limit is None else self.stats.conflicts + conflict_limit
        self._cancel_until(0)
        restart_round = 0
        conflicts_since_restart = 0
        restart_cap = 100 * _luby(restart_round)
        while True:
            confl = self._propagate()
            if confl is not None:
                self.stats.conflicts += 1
                conflicts_since_restart += 1
                if not self.trail_lim:
                    self.unsat = True
                    return SolveResult("unsat", core=())
                learnt, bt = self._analyze(confl)
                self._cancel_until(bt)
                self._attach_learnt(learnt)
                self.var_inc /= 0.95
                if conflict_cap is not None and self.stats.conflicts >= conflict_cap:
                    self._cancel_until(0)
                    raise SolverBudgetExceeded("conflict limit reached")
                if deadline is not None and self.stats.conflicts % 64 == 0:
                    if time.monotonic() > deadline:
                        self._cancel_until(0)
                        raise SolverBudgetExceeded("wall-clock budget exceeded")
                continue
            if conflicts_since_restart >= restart_cap:
                restart_round += 1
                conflicts_since_restart = 0
                restart_cap = 100 * _luby(restart_round)
                self._cancel_until(0)
                continue
            lvl = len(self.trail_lim)
            if lvl < len(assume):
                il = assume[lvl]
                val = self._value(il)
                if val == 1:
                    self.trail_lim.append(len(self.trail))  # placeholder level
                elif val == 0:
                    core = self._analyze_final(il ^ 1)
                    self._cancel_until(0)
                    return SolveResult("unsat", core=tuple(core))
                else:
                    self.trail_lim.append(len(self.trail))
                    self._enqueue(il, None)
            else:
                if deadline is not None and time.monotonic() > deadline:
                    self._cancel_until(0)
                    raise SolverBudgetExceeded("wall-clock budget exceeded")
                v = self._pick_branch()
                if v == 0:
                    model = tuple(
                        0 if a == _UNSET else a for a in self.assign[: self.nvars + 1]
                    )
                    self._cancel_until(0)
                    return SolveResult("sat", model=model)
                self.stats.decisions += 1
                self.trail_lim.append(len(self.trail))
                self._enqueue(2 * v + (self.phase[v] ^ 1), None)


def _luby(i: int) -> int:
    """Luby restart sequence 1,1,2,1,1,2,4,... for i = 0,1,2,..."""
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) // 2
        seq -= 1
        i = i % size
    return 2**seq


def model_true(model: Sequence[int], lit: int) -> bool:
    """Whether a signed literal holds in a model (vars beyond it are false)."""
    v = abs(lit)
    val = model[v] if v < len(model) else 0
    return bool(val) if lit > 0 else not val


def session_from_cnf(cnf: CnfFormula) -> SolverSession:
    session = SolverSession()
    session.ensure_var(cnf.var_count)
    for clause in cnf.clauses:
        session.add_clause(clause)
    return session


def solve_external(
    cnf: CnfFormula, solver_command: str, timeout: float | None = None
) -> SolveResult:
    """Run an off-the-shelf DIMACS solver and parse its s/v output lines."""
    with tempfile.NamedTemporaryFile("w", suffix=".cnf", delete=False) as f:
        f.write(emit_dimacs(cnf))
        path = f.name
    cmd = shlex.split(solver_command) + [path]
    try:
        proc = subprocess.run(
            cmd, capture_output=True, text=True, timeout=timeout, check=False
        )
    except FileNotFoundError as e:
        raise ExternalSolverError(f"cannot launch solver: {e}") from None
    except subprocess.TimeoutExpired:
        raise ExternalSolverError("external solver timed out") from None
    verdict = None
    values: list[int] = []
    for line in proc.stdout.splitlines():
        line = line.strip()
        if line.startswith("s "):
            word = line[2:].strip()
            if word == "SATISFIABLE":
                verdict = "sat"
            elif word == "UNSATISFIABLE":
                verdict = "unsat"
            else:
                raise ExternalSolverError(f"unrecognized status line {line!r}")
        elif line.startswith("v "):
            values.extend(int(t) for t in line[2:].split())
    if verdict is None:
        raise ExternalSolverError(
            f"no status line in solver output (exit code {proc.returncode})"
        )
    if verdict == "unsat":
        return SolveResult("unsat")
    model = [0] * (cnf.var_count + 1)
    for lit in values:
        if lit == 0:
            continue
        v = abs(lit)
        if v <= cnf.var_count:
            model[v] = 1 if lit > 0 else 0
    return SolveResult("sat", model=tuple(model))
