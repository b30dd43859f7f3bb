"""Role hierarchy closure, ABox closures, number sets and ext(T)."""

from __future__ import annotations

from collections import deque
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .model import ABox, AtLeast, AtLeastQ, Role, TBox, Tra, axiom_occurrences

# direction-normalized role atom: (role name, subject, object)
RoleAtom = Tuple[str, str, str]


class RoleOrder:
    """The reflexive-transitive, inversion-closed closure of the role inclusions."""

    def __init__(self, role_inclusions: Iterable[Tuple[Role, Role]], role_names: Iterable[str] = ()):
        edges: Dict[Role, Set[Role]] = {}
        names = set(role_names)
        for sub, sup in role_inclusions:
            edges.setdefault(sub, set()).add(sup)
            edges.setdefault(sub.inv(), set()).add(sup.inv())
            names |= {sub.name, sup.name}
        self.roles: List[Role] = sorted(Role(n, i) for n in names for i in (False, True))
        self._up: Dict[Role, frozenset] = {}
        for r in self.roles:
            seen = {r}
            todo = deque([r])
            while todo:
                x = todo.popleft()
                for y in edges.get(x, ()):
                    if y not in seen:
                        seen.add(y)
                        todo.append(y)
            self._up[r] = frozenset(seen)
        self._down: Dict[Role, Set[Role]] = {r: set() for r in self.roles}
        for r, ups in self._up.items():
            for s in ups:
                self._down[s].add(r)
        self._rep: Dict[Role, Role] = {}
        for r in self.roles:
            cls = self.equivalents(r)
            self._rep[r] = min(cls, key=lambda x: (x.name, x.inverted))

    @classmethod
    def of(cls, t: TBox, extra_names: Iterable[str] = ()) -> "RoleOrder":
        return cls(t.role_inclusions, set(t.role_names()) | set(extra_names))

    def leq(self, r: Role, s: Role) -> bool:
        if r == s:
            return True
        return s in self._up.get(r, ())

    def super_roles(self, r: Role) -> frozenset:
        return self._up.get(r, frozenset([r]))

    def sub_roles(self, r: Role) -> Set[Role]:
        return self._down.get(r, {r})

    def equivalents(self, r: Role) -> Set[Role]:
        return {s for s in self.super_roles(r) if self.leq(s, r)}

    def rep(self, r: Role) -> Role:
        return self._rep.get(r, r)

    def classes(self) -> List[Tuple[Role, ...]]:
        seen: Set[Role] = set()
        out = []
        for r in self.roles:
            if r in seen:
                continue
            cls = tuple(sorted(self.equivalents(r)))
            seen.update(cls)
            out.append(cls)
        return out

    def proper_sub_roles(self, r: Role) -> Set[Role]:
        return {s for s in self.sub_roles(r) if not self.leq(r, s)}

    def has_proper_sub_role(self, r: Role) -> bool:
        return bool(self.proper_sub_roles(r))

    def pairs(self) -> Set[Tuple[Role, Role]]:
        return {(r, s) for r in self.roles for s in self.super_roles(r)}


def role_order(t: TBox, extra_names: Iterable[str] = ()) -> RoleOrder:
    return RoleOrder.of(t, extra_names)


def normalize_atom(r: Role, s: str, o: str) -> RoleAtom:
    if r.inverted:
        return (r.name, o, s)
    return (r.name, s, o)


def extended_abox_closure(t: TBox, a: ABox, order: Optional[RoleOrder] = None) -> Set[RoleAtom]:
    atoms = {(p, s, o) for pos, p, s, o in a.role_assertions if pos}
    return close_atoms(order or role_order(t, a.role_names()), atoms)


def close_atoms(order: RoleOrder, atoms: Iterable[RoleAtom]) -> Set[RoleAtom]:
    out: Set[RoleAtom] = set()
    for p, s, o in atoms:
        for sup in order.super_roles(Role(p)):
            out.add(normalize_atom(sup, s, o))
    return out


def successors(atoms: Iterable[RoleAtom], r: Role) -> Dict[str, Set[str]]:
    out: Dict[str, Set[str]] = {}
    for p, s, o in atoms:
        if p != r.name:
            continue
        if r.inverted:
            out.setdefault(o, set()).add(s)
        else:
            out.setdefault(s, set()).add(o)
    return out


def transitive_abox_closure(t: TBox, atoms: Iterable[RoleAtom]) -> Set[RoleAtom]:
    transitive = {c.name for c in t.role_constraints if isinstance(c, Tra)}
    atoms = set(atoms)
    out = set(atoms)
    for p in sorted(transitive):
        succ: Dict[str, Set[str]] = {}
        for q, s, o in atoms:
            if q == p:
                succ.setdefault(s, set()).add(o)
        for start in list(succ):
            seen: Set[str] = set()
            todo = deque(succ[start])
            while todo:
                x = todo.popleft()
                if x in seen:
                    continue
                seen.add(x)
                todo.extend(succ.get(x, ()))
            out |= {(p, start, y) for y in seen}
    return out


def number_sets(t: TBox, order: Optional[RoleOrder] = None) -> Dict[Role, List[int]]:
    """Q^R for every role in role±(T): {1} plus every q used with R, padded
    upward along ⊑* so that Q^R ⊆ Q^R' whenever R ⊑* R'."""
    order = order or role_order(t)
    qs: Dict[Role, Set[int]] = {r: {1} for r in order.roles}
    for lhs, rhs in t.concept_inclusions:
        for c, _ in axiom_occurrences(lhs, rhs):
            if isinstance(c, (AtLeast, AtLeastQ)):
                qs.setdefault(c.role, {1}).add(c.q)
    padded: Dict[Role, Set[int]] = {r: set(v) for r, v in qs.items()}
    for r, v in qs.items():
        for s in order.super_roles(r):
            padded.setdefault(s, {1}).update(v)
    return {r: sorted(v) for r, v in padded.items()}


def ext_inclusions(t: TBox, order: Optional[RoleOrder] = None,
                   numbers: Optional[Dict[Role, List[int]]] = None) -> List[Tuple[AtLeast, AtLeast]]:
    """The extra inclusions ext(T) adds: adjacent numbers per role, and the
    role-inclusion lifting over Q^R."""
    order = order or role_order(t)
    numbers = numbers or number_sets(t, order)
    out: List[Tuple[AtLeast, AtLeast]] = []
    for r in order.roles:
        qs = numbers.get(r, [1])
        for lo, hi in zip(qs, qs[1:]):
            out.append((AtLeast(hi, r), AtLeast(lo, r)))
    seen = set()
    for sub, sup in t.role_inclusions:
        for a, b in ((sub, sup), (sub.inv(), sup.inv())):
            for q in numbers.get(a, [1]):
                ax = (AtLeast(q, a), AtLeast(q, b))
                if ax not in seen:
                    seen.add(ax)
                    out.append(ax)
    return out


def ext_tbox(t: TBox) -> TBox:
    extra = tuple(ext_inclusions(t))
    return TBox(t.concept_inclusions + extra, t.role_inclusions, t.role_constraints)
