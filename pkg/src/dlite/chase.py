"""A bounded restricted chase for Horn knowledge bases whose role
inclusions interact with functionality constraints.

Existential obligations ≥qR(x) are witnessed by labelled nulls only when x
lacks q successors already known to be pairwise distinct; functionality
constraints merge successors (equality-generating steps run before any new
null is created).  A saturated store is a model of the input, so "sat" is
sound; every derived fact holds in all models, so "unsat" is sound."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .closure import RoleOrder, role_order
from .errors import FragmentUnsupported
from .model import (ABox, AtLeast, AtLeastQ, Atom, Asym, Dis, Interpretation, Irr, KnowledgeBase, Ref,
                    Role, Sym, TBox, Tra, inclusion_clauses)

SAT, UNSAT, BOUND_EXCEEDED = "sat", "unsat", "bound-exceeded"
Edge = Tuple[str, str, str]  # (role name, subject, object)


class _Contradiction(Exception):
    pass


@dataclass
class _Rule:
    body: Tuple[object, ...]          # Atom or AtLeast(1, R)
    head: Optional[object]            # Atom, AtLeast or None for ⊥
    text: str


@dataclass
class ChaseResult:
    status: str
    reason: str = ""
    model: Optional[Interpretation] = None
    steps: int = 0
    state: Optional["ChaseState"] = None

    @property
    def saturated(self) -> bool:
        return self.status == SAT


def default_bound(k: KnowledgeBase) -> int:
    size = k.abox.size() + k.tbox.size()
    return 10 * size * size


@dataclass
class _Program:
    rules: List[_Rule]
    functional: List[Role]
    order: RoleOrder
    reflexive: List[str]
    transitive: List[str]
    disjoint: List[Tuple[Role, Role]]
    irreflexive: List[str]
    concept_names: List[str]
    role_names: List[str]


def _compile(k: KnowledgeBase) -> _Program:
    t = k.tbox
    if any(isinstance(c, AtLeastQ) for lhs, rhs in t.concept_inclusions for c in _walk(lhs, rhs)):
        from .normalize import eliminate_qualified
        t = eliminate_qualified(t)
    role_incl = list(t.role_inclusions)
    disjoint: List[Tuple[Role, Role]] = []
    reflexive, transitive, irreflexive = [], [], []
    for c in t.role_constraints:
        if isinstance(c, Sym):
            role_incl.append((Role(c.name, True), Role(c.name)))
        elif isinstance(c, Asym):
            disjoint.append((Role(c.name), Role(c.name, True)))
        elif isinstance(c, Dis):
            disjoint.append((c.first, c.second))
        elif isinstance(c, Ref):
            reflexive.append(c.name)
        elif isinstance(c, Irr):
            irreflexive.append(c.name)
        elif isinstance(c, Tra):
            transitive.append(c.name)
    names = set(t.role_names()) | k.abox.role_names()
    order = role_order(TBox((), tuple(role_incl)), names)
    rules: List[_Rule] = []
    functional: List[Role] = []
    for lhs, rhs in t.concept_inclusions:
        text = f"{lhs} <= {rhs}"
        clauses = inclusion_clauses(lhs, rhs)
        if clauses is None:
            raise FragmentUnsupported(f"the chase needs Horn inclusions: {text}")
        for clause in clauses:
            heads = [c for pos, c in clause if pos]
            body = [c for pos, c in clause if not pos]
            if len(heads) > 1:
                raise FragmentUnsupported(f"the chase needs Horn inclusions: {text}")
            counting = [c for c in body if isinstance(c, AtLeast) and c.q >= 2]
            if counting:
                if len(body) == 1 and not heads and counting[0].q == 2:
                    functional.append(counting[0].role)
                    continue
                raise FragmentUnsupported(f"the chase supports >= 2 on the left only as functionality: {text}")
            rules.append(_Rule(tuple(sorted(body, key=str)), heads[0] if heads else None, text))
    concept_names = sorted(set(t.concept_names()) | k.abox.concept_names())
    return _Program(rules, functional, order, reflexive, transitive, disjoint, irreflexive,
                    concept_names, sorted(names))


def _walk(*cs) -> Iterable[object]:
    from .model import subconcepts
    for c in cs:
        yield from subconcepts(c)


class ChaseState:
    """Elements, atoms, identifications and pending obligations.

    Every change to an element's concepts, edges or distinctness marks it
    touched; the Datalog, equality and constraint passes only revisit
    touched elements."""

    def __init__(self, k: KnowledgeBase, program: _Program):
        self.k = k
        self.p = program
        self.named: List[str] = list(k.abox.objects())
        self.rank: Dict[str, int] = {a: i for i, a in enumerate(self.named)}
        self.parent: Dict[str, str] = {a: a for a in self.named}
        self.concepts: Dict[str, Set[str]] = {}
        self.labels: Dict[str, Set[str]] = {}
        self.edges: Set[Edge] = set()
        self.incident: Dict[str, Set[Edge]] = {}
        self.apart: Dict[str, Set[str]] = {}
        self.obligations: List[Tuple[int, Role, str]] = []
        self._obligation_set: Set[Tuple[int, Role, str]] = set()
        self.cursor = 0
        self.nulls = 0
        self.steps = 0
        self._out: Dict[Tuple[str, str], Set[str]] = {}
        self._in: Dict[Tuple[str, str], Set[str]] = {}
        self.datalog_todo: Set[str] = set(self.named)
        self.egd_todo: Set[str] = set(self.named)
        self.check_todo: Set[str] = set(self.named)

    # ----- elements

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def elements(self) -> List[str]:
        return sorted({self.find(x) for x in self.parent}, key=self.rank.__getitem__)

    def touch(self, x: str) -> None:
        self.datalog_todo.add(x)
        self.egd_todo.add(x)
        self.check_todo.add(x)

    def fresh(self) -> str:
        self.nulls += 1
        name = f"_n{self.nulls}"
        while name in self.parent:
            self.nulls += 1
            name = f"_n{self.nulls}"
        self.parent[name] = name
        self.rank[name] = len(self.rank)
        self.touch(name)
        return name

    def is_named(self, x: str) -> bool:
        return self.rank[x] < len(self.named)

    def known_distinct(self, a: str, b: str) -> bool:
        a, b = self.find(a), self.find(b)
        if a == b:
            return False
        if self.k.una and self.is_named(a) and self.is_named(b):
            return True
        return b in self.apart.get(a, ())

    def set_apart(self, a: str, b: str) -> None:
        a, b = self.find(a), self.find(b)
        if a == b:
            raise _Contradiction(f"{a} must differ from itself")
        self.apart.setdefault(a, set()).add(b)
        self.apart.setdefault(b, set()).add(a)

    # ----- atoms

    def add_concept(self, name: str, x: str) -> bool:
        s = self.concepts.setdefault(name, set())
        if x in s:
            return False
        s.add(x)
        self.labels.setdefault(x, set()).add(name)
        self.touch(x)
        return True

    def _store_edge(self, e: Edge) -> bool:
        if e in self.edges:
            return False
        self.edges.add(e)
        name, s, o = e
        self._out.setdefault((name, s), set()).add(o)
        self._in.setdefault((name, o), set()).add(s)
        self.incident.setdefault(s, set()).add(e)
        self.incident.setdefault(o, set()).add(e)
        self.touch(s)
        self.touch(o)
        return True

    def _drop_edge(self, e: Edge) -> None:
        self.edges.discard(e)
        name, s, o = e
        self._out[(name, s)].discard(o)
        self._in[(name, o)].discard(s)
        self.incident[s].discard(e)
        self.incident[o].discard(e)

    def add_edge(self, r: Role, s: str, o: str) -> bool:
        changed = False
        for sup in self.p.order.super_roles(r):
            e = (sup.name, o, s) if sup.inverted else (sup.name, s, o)
            changed |= self._store_edge(e)
        return changed

    def successors(self, x: str, r: Role) -> Set[str]:
        if r.inverted:
            return self._in.get((r.name, x), set())
        return self._out.get((r.name, x), set())

    # ----- merging

    def merge(self, a: str, b: str, why: str) -> None:
        a, b = self.find(a), self.find(b)
        if a == b:
            return
        if self.known_distinct(a, b):
            raise _Contradiction(f"{why} identifies {a} and {b}, which must differ")
        keep, drop = sorted((a, b), key=self.rank.__getitem__)
        self.parent[drop] = keep
        self.steps += 1
        for name in self.labels.pop(drop, set()):
            self.concepts[name].discard(drop)
            self.add_concept(name, keep)
        for e in list(self.incident.get(drop, ())):
            self._drop_edge(e)
            name, s, o = e
            moved = (name, keep if s == drop else s, keep if o == drop else o)
            self._store_edge(moved)
            self.touch(s if s != drop else keep)
            self.touch(o if o != drop else keep)
        for other in self.apart.pop(drop, set()):
            self.apart[other].discard(drop)
            self.set_apart(keep, other)
        self.touch(keep)
        obligations = []
        seen = set()
        for q, r, x in self.obligations:
            item = (q, r, self.find(x))
            if item not in seen:
                seen.add(item)
                obligations.append(item)
        self.obligations = obligations
        self._obligation_set = seen
        self.cursor = 0

    # ----- rule evaluation

    def holds(self, c, x: str) -> bool:
        if isinstance(c, Atom):
            return x in self.concepts.get(c.name, ())
        if isinstance(c, AtLeast):
            return self.count_distinct(x, c.role, c.q) >= c.q
        raise TypeError(c)

    def count_distinct(self, x: str, r: Role, want: int) -> int:
        """Size of a largest set of pairwise known-distinct R-successors of x,
        capped at want."""
        succ = sorted(self.successors(x, r), key=self.rank.__getitem__)
        if not succ or want <= 1:
            return min(len(succ), want)
        best = 1
        for size in range(2, min(want, len(succ)) + 1):
            if any(all(self.known_distinct(a, b) for a, b in combinations(group, 2))
                   for group in combinations(succ, size)):
                best = size
            else:
                break
        return best

    def witnesses(self, x: str, r: Role, q: int) -> List[str]:
        succ = sorted(self.successors(x, r), key=self.rank.__getitem__)
        for size in range(min(q, len(succ)), 0, -1):
            for group in combinations(succ, size):
                if all(self.known_distinct(a, b) for a, b in combinations(group, 2)):
                    return list(group)
        return []

    def add_obligation(self, q: int, r: Role, x: str) -> bool:
        item = (q, r, x)
        if item in self._obligation_set:
            return False
        self._obligation_set.add(item)
        self.obligations.append(item)
        return True


def _load(state: ChaseState) -> None:
    k = state.k
    for x, y in k.abox.equalities:
        state.merge(x, y, f"{x} = {y}")
    for x, y in k.abox.inequalities:
        if state.find(x) == state.find(y):
            raise _Contradiction(f"{x} != {y} contradicts the equalities")
        state.set_apart(x, y)
    for pos, c, a in k.abox.concept_assertions:
        if pos:
            state.add_concept(c, state.find(a))
    for pos, p, s, o in k.abox.role_assertions:
        if pos:
            state.add_edge(Role(p), state.find(s), state.find(o))


def _take(state: ChaseState, todo: Set[str]) -> List[str]:
    """Current representatives of the touched elements, in creation order."""
    out = sorted({state.find(x) for x in todo}, key=state.rank.__getitem__)
    todo.clear()
    return out


def _check(state: ChaseState) -> None:
    k, p = state.k, state.p
    for pos, c, a in k.abox.concept_assertions:
        if not pos and state.find(a) in state.concepts.get(c, ()):
            raise _Contradiction(f"not {c}({a}) contradicts a derived fact")
    for pos, r, s, o in k.abox.role_assertions:
        if not pos and (r, state.find(s), state.find(o)) in state.edges:
            raise _Contradiction(f"not {r}({s},{o}) contradicts a derived fact")
    for x in _take(state, state.check_todo):
        for r1, r2 in p.disjoint:
            if state.successors(x, r1) & state.successors(x, r2):
                raise _Contradiction(f"dis({r1}, {r2}) is violated at {x}")
        for name in p.irreflexive:
            if x in state.successors(x, Role(name)):
                raise _Contradiction(f"irr({name}) is violated at {x}")


def _egd_round(state: ChaseState) -> bool:
    if not state.p.functional:
        state.egd_todo.clear()
        return False
    for x in _take(state, state.egd_todo):
        for r in state.p.functional:
            succ = sorted({state.find(y) for y in state.successors(x, r)}, key=state.rank.__getitem__)
            if len(succ) >= 2:
                state.egd_todo.add(x)
                state.merge(succ[0], succ[1], f">= 2 {r} <= bot at {x}")
                return True
    return False


def _datalog_round(state: ChaseState) -> bool:
    p = state.p
    changed = False
    if p.transitive and state.datalog_todo:
        for name in p.transitive:
            pairs = [(s, o) for n, s, o in list(state.edges) if n == name]
            succ: Dict[str, Set[str]] = {}
            for s, o in pairs:
                succ.setdefault(s, set()).add(o)
            for s, o in pairs:
                for z in list(succ.get(o, ())):
                    changed |= state.add_edge(Role(name), s, z)
    for x in _take(state, state.datalog_todo):
        if state.find(x) != x:
            continue
        for name in p.reflexive:
            changed |= state.add_edge(Role(name), x, x)
        for rule in p.rules:
            if not all(state.holds(c, x) for c in rule.body):
                continue
            head = rule.head
            if head is None:
                raise _Contradiction(f"{rule.text} derives bot at {x}")
            if isinstance(head, Atom):
                changed |= state.add_concept(head.name, x)
            elif isinstance(head, AtLeast):
                changed |= state.add_obligation(head.q, head.role, x)
    return changed or bool(state.datalog_todo)


def _saturate(state: ChaseState, max_steps: int) -> bool:
    """Apply equality and Datalog rules to a fixpoint; False if the bound is hit."""
    while True:
        if state.steps > max_steps:
            return False
        if _egd_round(state):
            continue
        if _datalog_round(state):
            continue
        _check(state)
        return True


def _pending(state: ChaseState) -> Optional[Tuple[int, Role, str]]:
    """The oldest unmet obligation.  Obligations before the cursor were met
    when last seen; only merges can undo that, and merges reset the cursor."""
    while state.cursor < len(state.obligations):
        q, r, x = state.obligations[state.cursor]
        x = state.find(x)
        if state.count_distinct(x, r, q) < q:
            return q, r, x
        state.cursor += 1
    return None


def _apply_tgd(state: ChaseState, q: int, r: Role, x: str) -> None:
    existing = state.witnesses(x, r, q)
    new = [state.fresh() for _ in range(q - len(existing))]
    group = existing + new
    for a, b in combinations(group, 2):
        state.set_apart(a, b)
    for y in group:
        state.touch(y)
    for y in new:
        state.add_edge(r, x, y)
    state.touch(x)
    state.steps += 1


def run_chase(k: KnowledgeBase, max_steps: Optional[int] = None) -> ChaseResult:
    program = _compile(k)
    bound = default_bound(k) if max_steps is None else max_steps
    state = ChaseState(k, program)
    try:
        _load(state)
        while True:
            if not _saturate(state, bound):
                return ChaseResult(BOUND_EXCEEDED, f"no saturation within {bound} steps", None,
                                   state.steps, state)
            todo = _pending(state)
            if todo is None:
                return ChaseResult(SAT, "", to_interpretation(state), state.steps, state)
            if state.steps >= bound:
                return ChaseResult(BOUND_EXCEEDED, f"no saturation within {bound} steps", None,
                                   state.steps, state)
            _apply_tgd(state, *todo)
    except _Contradiction as e:
        return ChaseResult(UNSAT, str(e), None, state.steps, state)


def chase(k: KnowledgeBase, max_steps: Optional[int] = None) -> ChaseResult:
    """Like run_chase, but a KB outside the chase's input language yields a
    fragment-unsupported result instead of an exception."""
    try:
        return run_chase(k, max_steps)
    except FragmentUnsupported as e:
        return ChaseResult("fragment-unsupported", str(e))


def to_interpretation(state: ChaseState) -> Interpretation:
    elements = state.elements()
    concept_ext = {c: set() for c in state.p.concept_names}
    for c, xs in state.concepts.items():
        concept_ext.setdefault(c, set()).update(xs)
    role_ext: Dict[str, Set[Tuple[str, str]]] = {r: set() for r in state.p.role_names}
    for name, s, o in state.edges:
        role_ext.setdefault(name, set()).add((s, o))
    objects = {a: state.find(a) for a in state.named}
    return Interpretation(set(elements), concept_ext, role_ext, objects)


def chase_entails(k: KnowledgeBase, assertion: tuple, max_steps: Optional[int] = None) -> str:
    """"yes", "no" or "bound-exceeded" for a concept assertion (A, a) or a
    role assertion (P, a, b); an inconsistent KB entails everything."""
    res = run_chase(k, max_steps)
    if res.status == UNSAT:
        return "yes"
    if res.status != SAT:
        return BOUND_EXCEEDED
    state = res.state
    if len(assertion) == 2:
        name, a = assertion
        if a not in state.parent:
            return "no"
        return "yes" if state.find(a) in state.concepts.get(name, ()) else "no"
    name, a, b = assertion
    if a not in state.parent or b not in state.parent:
        return "no"
    return "yes" if (name, state.find(a), state.find(b)) in state.edges else "no"


def dump_abox(state: ChaseState) -> ABox:
    """The saturated store as an ABox over named objects and nulls."""
    concepts = tuple((True, c, x) for c in sorted(state.concepts) for x in sorted(state.concepts[c]))
    roles = tuple((True, n, s, o) for n, s, o in sorted(state.edges))
    return ABox(concepts, roles)
