"""Propositional solvers matched to clause shapes and the top-level
satisfiability pipeline for knowledge bases."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Optional, Set, Tuple

from .errors import BudgetExceeded, FragmentUnsupported

SAT = "sat"
UNSAT = "unsat"
FRAGMENT_UNSUPPORTED = "fragment-unsupported"
BUDGET_EXCEEDED = "budget-exceeded"

EXIT_CODES = {SAT: 0, UNSAT: 1, FRAGMENT_UNSUPPORTED: 2, BUDGET_EXCEEDED: 3}


class ShapeError(ValueError):
    pass


class ClauseSet:
    """Clauses over interned atoms; literals are signed 1-based atom ids."""

    def __init__(self):
        self.atoms: List[Hashable] = []
        self.index: Dict[Hashable, int] = {}
        self.clauses: List[Tuple[int, ...]] = []
        self._seen: Set[Tuple[int, ...]] = set()

    def atom_id(self, atom: Hashable) -> int:
        i = self.index.get(atom)
        if i is None:
            self.atoms.append(atom)
            i = len(self.atoms)
            self.index[atom] = i
        return i

    def add_clause(self, lits: Iterable[Tuple[bool, Hashable]]) -> None:
        ids = []
        for pos, atom in lits:
            i = self.atom_id(atom)
            ids.append(i if pos else -i)
        self.add_ids(ids)

    def add_ids(self, ids: Iterable[int]) -> None:
        s = set(ids)
        if any(-i in s for i in s):
            return
        clause = tuple(sorted(s, key=lambda i: (abs(i), i)))
        if clause in self._seen:
            return
        self._seen.add(clause)
        self.clauses.append(clause)

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    def is_horn(self) -> bool:
        return all(sum(1 for l in c if l > 0) <= 1 for c in self.clauses)

    def is_krom(self) -> bool:
        return all(len(c) <= 2 for c in self.clauses)

    @property
    def shape_hint(self) -> str:
        if self.is_horn():
            return "horn"
        if self.is_krom():
            return "krom"
        return "general"

    def size(self) -> int:
        return sum(len(c) for c in self.clauses) + len(self.clauses)

    def to_dimacs(self, name=str) -> str:
        lines = [f"c atom {i} {name(a)}" for i, a in enumerate(self.atoms, 1)]
        lines.append(f"p cnf {len(self.atoms)} {len(self.clauses)}")
        lines += [" ".join(map(str, c)) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"


@dataclass
class PropResult:
    satisfiable: bool
    model: Optional[Set[int]] = None  # ids of atoms set true

    def __bool__(self) -> bool:
        return self.satisfiable


def horn_sat(c: ClauseSet) -> PropResult:
    """Unit propagation; on success the true atoms form the least model."""
    if not c.is_horn():
        raise ShapeError("clause set is not Horn")
    n = c.num_atoms
    watch: List[List[int]] = [[] for _ in range(n + 1)]
    remaining = []
    true: Set[int] = set()
    queue: List[int] = []
    for ci, clause in enumerate(c.clauses):
        neg = [-l for l in clause if l < 0]
        remaining.append(len(neg))
        for a in neg:
            watch[a].append(ci)
    heads = [next((l for l in clause if l > 0), 0) for clause in c.clauses]

    def fire(ci: int) -> bool:
        h = heads[ci]
        if h == 0:
            return False
        if h not in true:
            true.add(h)
            queue.append(h)
        return True

    for ci, r in enumerate(remaining):
        if r == 0 and not fire(ci):
            return PropResult(False)
    while queue:
        a = queue.pop()
        for ci in watch[a]:
            remaining[ci] -= 1
            if remaining[ci] == 0 and not fire(ci):
                return PropResult(False)
    return PropResult(True, true)


def two_sat(c: ClauseSet) -> PropResult:
    """Implication graph plus strongly connected components."""
    if not c.is_krom():
        raise ShapeError("clause set has a clause with more than two literals")
    n = c.num_atoms

    def node(l: int) -> int:
        return 2 * (abs(l) - 1) + (0 if l > 0 else 1)

    graph: List[List[int]] = [[] for _ in range(2 * n)]
    for clause in c.clauses:
        if not clause:
            return PropResult(False)
        if len(clause) == 1:
            (a,) = clause
            graph[node(-a)].append(node(a))
        else:
            a, b = clause
            graph[node(-a)].append(node(b))
            graph[node(-b)].append(node(a))
    comp = _tarjan(graph)
    model = set()
    for i in range(1, n + 1):
        p, q = comp[node(i)], comp[node(-i)]
        if p == q:
            return PropResult(False)
        if p < q:
            model.add(i)
    return PropResult(True, model)


def _tarjan(graph: List[List[int]]) -> List[int]:
    """Component index per node; components are numbered in reverse topological order."""
    n = len(graph)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp = [-1] * n
    stack: List[int] = []
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            if i < len(graph[v]):
                work[-1] = (v, i + 1)
                w = graph[v][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    low[u] = min(low[u], low[v])
                if low[v] == index[v]:
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        comp[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
    return comp


def dpll(c: ClauseSet) -> PropResult:
    """Backtracking with unit propagation and pure literals; branches on the
    lowest unassigned atom, true first."""
    n = c.num_atoms
    clauses = [list(cl) for cl in c.clauses]
    if any(not cl for cl in clauses):
        return PropResult(False)
    occurs: List[List[int]] = [[] for _ in range(n + 1)]
    for ci, cl in enumerate(clauses):
        for l in cl:
            occurs[abs(l)].append(ci)
    value: List[int] = [0] * (n + 1)  # 0 unassigned, 1 true, -1 false

    def lit_val(l: int) -> int:
        v = value[abs(l)]
        return v if l > 0 else -v

    def propagate(trail: List[int]) -> bool:
        changed = True
        while changed:
            changed = False
            for cl in clauses:
                unassigned = None
                count = 0
                satisfied = False
                for l in cl:
                    v = lit_val(l)
                    if v == 1:
                        satisfied = True
                        break
                    if v == 0:
                        count += 1
                        unassigned = l
                if satisfied:
                    continue
                if count == 0:
                    return False
                if count == 1:
                    value[abs(unassigned)] = 1 if unassigned > 0 else -1
                    trail.append(abs(unassigned))
                    changed = True
            if not changed:
                for a in range(1, n + 1):
                    if value[a] != 0:
                        continue
                    signs = set()
                    for ci in occurs[a]:
                        cl = clauses[ci]
                        if any(lit_val(l) == 1 for l in cl):
                            continue
                        for l in cl:
                            if abs(l) == a:
                                signs.add(l > 0)
                    if len(signs) == 1:
                        value[a] = 1 if signs.pop() else -1
                        trail.append(a)
                        changed = True
        return True

    def search() -> bool:
        trail: List[int] = []
        if not propagate(trail):
            for a in trail:
                value[a] = 0
            return False
        atom = next((a for a in range(1, n + 1) if value[a] == 0), None)
        if atom is None:
            return True
        for choice in (1, -1):
            value[atom] = choice
            if search():
                return True
            value[atom] = 0
        for a in trail:
            value[a] = 0
        return False

    limit = sys.getrecursionlimit()
    if limit < n + 1000:
        sys.setrecursionlimit(n + 1000)
    if search():
        return PropResult(True, {a for a in range(1, n + 1) if value[a] == 1})
    return PropResult(False)


def solve_clauses(c: ClauseSet) -> Tuple[PropResult, str]:
    if c.is_horn():
        return horn_sat(c), "horn"
    if c.is_krom():
        return two_sat(c), "2sat"
    return dpll(c), "dpll"


# ------------------------------------------------------------ pipeline

@dataclass
class SolveOptions:
    engine: str = "ground"
    chase_bound: Optional[int] = None
    partition_cap: int = 100000


@dataclass
class SolveResult:
    verdict: str
    reason: str = ""
    report: object = None
    solver: str = ""
    clauses: Optional[ClauseSet] = None
    model: Optional[Set[int]] = None
    normalized: object = None
    sentence: object = None
    steps: List[str] = field(default_factory=list)

    @property
    def satisfiable(self) -> bool:
        return self.verdict == SAT


def solve(k, opts: Optional[SolveOptions] = None) -> SolveResult:
    from .model import classify
    from .normalize import (cond44_failures, eliminate_transitivity, enumerate_identifications,
                            functional_merge, normalize_to_hn_minus)
    from . import fol

    opts = opts or SolveOptions()
    report = classify(k)
    if opts.engine == "chase":
        from .chase import chase, default_bound
        res = chase(k, opts.chase_bound or default_bound(k))
        return SolveResult(res.status, res.reason, report, "chase")
    if not report.admissible:
        issues = list(report.a123_violations) + list(report.non_simple_number_restrictions)
        return SolveResult(FRAGMENT_UNSUPPORTED, "; ".join(map(str, issues)), report)
    steps: List[str] = []
    try:
        if not k.una:
            if report.numbers == "N":
                steps.append("identification search")
                found = enumerate_identifications(
                    k, lambda q: solve(q, opts).verdict == SAT, opts.partition_cap)
                verdict = SAT if found.satisfiable else UNSAT
                return SolveResult(verdict, f"{found.partitions_tried} quotients tried", report,
                                   "identifications", steps=steps)
            steps.append("merge equalities and functional roles")
            k = functional_merge(k)
        if report.has_transitivity:
            steps.append("eliminate transitivity")
            k = eliminate_transitivity(k)
        hk = normalize_to_hn_minus(k)
        failures = cond44_failures(hk)
        if failures:
            return SolveResult(UNSAT, failures[0], report, "cond44", normalized=hk, steps=steps)
        sentence = fol.translate(hk)
        cs = fol.ground(sentence)
        res, solver = solve_clauses(cs)
    except FragmentUnsupported as e:
        return SolveResult(FRAGMENT_UNSUPPORTED, str(e), report)
    except BudgetExceeded as e:
        return SolveResult(BUDGET_EXCEEDED, str(e), report)
    return SolveResult(SAT if res.satisfiable else UNSAT, "", report, solver, cs, res.model,
                       hk, sentence, steps)
