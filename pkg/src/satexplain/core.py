"""Shared domain types: instances, propositional formulas, problems.

Feature indices are 0-based everywhere; propositional variables are 1-based
(DIMACS convention). A :class:`VarMap` is the single source of truth for the
correspondence between the two worlds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

Label = int  # 0 = negative class, 1 = positive class


class ClauseError(ValueError):
    """Raised for ill-formed literals or clauses (e.g. tautologies)."""


class DimacsParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def check_label(value: int) -> Label:
    if value not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {value!r}")
    return value


@dataclass(frozen=True)
class Instance:
    """A complete assignment of n binary features."""

    values: tuple[int, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("instance needs at least one feature")
        if any(v not in (0, 1) for v in self.values):
            raise ValueError("instance values must be 0 or 1")
        object.__setattr__(self, "values", tuple(self.values))

    @property
    def n(self) -> int:
        return len(self.values)

    @classmethod
    def from_string(cls, bits: str) -> "Instance":
        bits = bits.strip()
        if not bits or any(c not in "01" for c in bits):
            raise ValueError(f"instance string must be over '0'/'1', got {bits!r}")
        return cls(tuple(int(c) for c in bits))

    def to_string(self) -> str:
        return "".join(str(v) for v in self.values)

    def flip(self, features: Iterable[int]) -> "Instance":
        """A copy with the given feature positions inverted."""
        vals = list(self.values)
        for i in features:
            vals[i] = 1 - vals[i]
        return Instance(tuple(vals))


def hamming(a: Instance, b: Instance) -> int:
    if a.n != b.n:
        raise ValueError("instances differ in feature count")
    return sum(x != y for x, y in zip(a.values, b.values))


@dataclass(frozen=True, order=True)
class Literal:
    variable: int
    positive: bool = True

    def __post_init__(self):
        if self.variable < 1:
            raise ClauseError(f"variable ids start at 1, got {self.variable}")

    def __neg__(self) -> "Literal":
        return Literal(self.variable, not self.positive)

    def to_int(self) -> int:
        return self.variable if self.positive else -self.variable

    @classmethod
    def from_int(cls, lit: int) -> "Literal":
        if lit == 0:
            raise ClauseError("0 is not a literal")
        return cls(abs(lit), lit > 0)


@dataclass(frozen=True)
class Clause:
    """A disjunction of literals. Tautologies are rejected at construction."""

    literals: frozenset[Literal]

    def __post_init__(self):
        lits = frozenset(self.literals)
        variables = {l.variable for l in lits}
        if len(variables) < len(lits):
            raise ClauseError("clause contains both polarities of a variable")
        object.__setattr__(self, "literals", lits)

    @classmethod
    def from_ints(cls, lits: Iterable[int]) -> "Clause":
        return cls(frozenset(Literal.from_int(l) for l in lits))

    def to_ints(self) -> list[int]:
        """Signed-int view, sorted by variable id for stable output."""
        return sorted((l.to_int() for l in self.literals), key=abs)

    @property
    def is_empty(self) -> bool:
        return not self.literals

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)


@dataclass(frozen=True)
class CnfFormula:
    clauses: tuple[Clause, ...]
    var_count: int

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))
        used = self.max_var_used()
        if self.var_count < used:
            raise ValueError(f"var_count {self.var_count} < max used variable {used}")

    def max_var_used(self) -> int:
        return max((l.variable for c in self.clauses for l in c.literals), default=0)

    def __len__(self) -> int:
        return len(self.clauses)


@dataclass
class VarMap:
    """Binding between feature indices and propositional variables.

    ``feature_to_var`` covers exactly features 0..n-1; auxiliary variables
    (Tseitin / counter cells) and the output variable are disjoint from the
    feature variables and from each other.
    """

    feature_to_var: dict[int, int]
    aux_vars: set[int] = field(default_factory=set)
    output_var: int = 0
    _next_var: int = 0

    def __post_init__(self):
        n = len(self.feature_to_var)
        if sorted(self.feature_to_var) != list(range(n)):
            raise ValueError("feature_to_var must cover exactly 0..n-1")
        if len(set(self.feature_to_var.values())) != n:
            raise ValueError("feature_to_var must be injective")
        if self._next_var == 0:
            top = max(
                [*self.feature_to_var.values(), *self.aux_vars, self.output_var],
                default=0,
            )
            self._next_var = top + 1

    @classmethod
    def for_features(cls, n: int) -> "VarMap":
        """Fresh map with feature i bound to variable i+1."""
        return cls(feature_to_var={i: i + 1 for i in range(n)})

    @property
    def n_features(self) -> int:
        return len(self.feature_to_var)

    def fresh_aux(self) -> int:
        v = self._next_var
        self._next_var += 1
        self.aux_vars.add(v)
        return v

    def set_output(self, var: int) -> None:
        self.aux_vars.discard(var)
        self.output_var = var

    def validate(self) -> None:
        feats = set(self.feature_to_var.values())
        if feats & self.aux_vars:
            raise ValueError("feature and auxiliary variables overlap")
        if self.output_var:
            if self.output_var in feats or self.output_var in self.aux_vars:
                raise ValueError("output variable overlaps feature/aux variables")


@dataclass
class ExplanationProblem:
    """Partial Max-SAT instance: hard classifier clauses, soft instance units.

    Soft clause i is the unit literal asserting feature i's observed value;
    ``selectors`` maps each soft index to a fresh guard variable usable as a
    solver assumption handle.
    """

    hard: CnfFormula
    soft: list[Clause]
    selectors: dict[int, int]
    target_class: Label
    instance: Instance | None = None
    varmap: VarMap | None = None

    def __post_init__(self):
        check_label(self.target_class)
        for i, clause in enumerate(self.soft):
            if len(clause) != 1:
                raise ValueError(f"soft clause {i} is not a unit clause")
        if set(self.selectors) != set(range(len(self.soft))):
            raise ValueError("selectors must cover every soft index")
        used = {l.variable for c in self.hard.clauses for l in c.literals}
        used |= {l.variable for c in self.soft for l in c.literals}
        sel_vars = set(self.selectors.values())
        if len(sel_vars) != len(self.selectors):
            raise ValueError("selector variables must be distinct")
        if sel_vars & used:
            raise ValueError("selector variables must not occur in hard/soft clauses")
        if self.instance is not None and self.varmap is not None:
            for i, clause in enumerate(self.soft):
                (lit,) = clause.literals
                if lit.variable != self.varmap.feature_to_var[i]:
                    raise ValueError(f"soft clause {i} bound to the wrong variable")
                if lit.positive != bool(self.instance.values[i]):
                    raise ValueError(f"soft clause {i} polarity mismatches instance")

    @property
    def n_soft(self) -> int:
        return len(self.soft)

    def soft_literal(self, i: int) -> Literal:
        (lit,) = self.soft[i].literals
        return lit


@dataclass(frozen=True)
class Explanation:
    """A set of feature indices explaining one prediction."""

    kind: str  # "sufficient_reason" | "counterfactual"
    features: frozenset[int]
    source_instance: Instance
    target_class: Label

    def __post_init__(self):
        if self.kind not in ("sufficient_reason", "counterfactual"):
            raise ValueError(f"unknown explanation kind {self.kind!r}")
        n = self.source_instance.n
        if any(f < 0 or f >= n for f in self.features):
            raise ValueError("feature indices out of range")


# ---------------------------------------------------------------------------
# DIMACS / WCNF serialization


def parse_dimacs(text: str | TextIO) -> CnfFormula:
    """Parse DIMACS CNF text ("p cnf V C" header, 0-terminated clause lines)."""
    if hasattr(text, "read"):
        text = text.read()
    header = None
    clauses: list[Clause] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if header is not None:
                raise DimacsParseError(line_no, "duplicate header")
            parts = line.split()
            if len(parts) != 4 or parts[0] != "p" or parts[1] != "cnf":
                raise DimacsParseError(line_no, f"malformed header {line!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise DimacsParseError(line_no, f"malformed header {line!r}") from None
            if header[0] < 0 or header[1] < 0:
                raise DimacsParseError(line_no, "negative counts in header")
            continue
        if header is None:
            raise DimacsParseError(line_no, "clause before header")
        try:
            tokens = [int(t) for t in line.split()]
        except ValueError:
            raise DimacsParseError(line_no, f"non-integer token in {line!r}") from None
        if tokens[-1] != 0:
            raise DimacsParseError(line_no, "missing terminating 0")
        if 0 in tokens[:-1]:
            raise DimacsParseError(line_no, "0 inside clause body")
        for t in tokens[:-1]:
            if abs(t) > header[0]:
                raise DimacsParseError(line_no, f"literal {t} exceeds var count {header[0]}")
        try:
            clauses.append(Clause.from_ints(tokens[:-1]))
        except ClauseError as e:
            raise DimacsParseError(line_no, str(e)) from None
    if header is None:
        raise DimacsParseError(0, "no header found")
    var_count, clause_count = header
    if len(clauses) != clause_count:
        raise DimacsParseError(
            0, f"header declares {clause_count} clauses, found {len(clauses)}"
        )
    return CnfFormula(tuple(clauses), var_count)


def emit_dimacs(cnf: CnfFormula) -> str:
    lines = [f"p cnf {cnf.var_count} {len(cnf.clauses)}"]
    for clause in cnf.clauses:
        lines.append(" ".join(str(l) for l in clause.to_ints()) + " 0")
    return "\n".join(lines) + "\n"


def emit_wcnf(problem: ExplanationProblem) -> str:
    """Weighted CNF with "p wcnf nvars nclauses top": hard clauses carry the
    top weight, soft clauses weight 1, soft order preserved."""
    top = len(problem.soft) + 1
    max_var = problem.hard.var_count
    for clause in problem.soft:
        for lit in clause.literals:
            max_var = max(max_var, lit.variable)
    n_clauses = len(problem.hard.clauses) + len(problem.soft)
    lines = [f"p wcnf {max_var} {n_clauses} {top}"]
    for clause in problem.hard.clauses:
        lines.append(f"{top} " + " ".join(str(l) for l in clause.to_ints()) + " 0")
    for clause in problem.soft:
        lines.append("1 " + " ".join(str(l) for l in clause.to_ints()) + " 0")
    return "\n".join(lines) + "\n"
