"""Knowledge bases, finite interpretations, a model checker and the fragment classifier."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Set, Tuple, Union

from .errors import UnknownName


# ---------------------------------------------------------------- roles

@dataclass(frozen=True, order=True)
class Role:
    name: str
    inverted: bool = False

    def inv(self) -> "Role":
        return Role(self.name, not self.inverted)

    def __str__(self) -> str:
        return self.name + ("-" if self.inverted else "")


def inv(r: Role) -> Role:
    return r.inv()


# ------------------------------------------------------------- concepts

@dataclass(frozen=True)
class Bottom:
    def __str__(self) -> str:
        return "bot"


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class AtLeast:
    q: int
    role: Role

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("number restriction needs q >= 1")

    def __str__(self) -> str:
        if self.q == 1:
            return f"exists {self.role}"
        return f">= {self.q} {self.role}"


@dataclass(frozen=True)
class Not:
    arg: "Concept"

    def __str__(self) -> str:
        if self.arg == Bottom():
            return "top"
        return "not " + _wrap(self.arg, 3)


@dataclass(frozen=True)
class And:
    left: "Concept"
    right: "Concept"

    def __str__(self) -> str:
        return f"{_wrap(self.left, 2)} & {_wrap(self.right, 3)}"


@dataclass(frozen=True)
class AtLeastQ:
    q: int
    role: Role
    filler: "Concept"

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("number restriction needs q >= 1")

    def __str__(self) -> str:
        return f">= {self.q} {self.role} . ({self.filler})"


BasicConcept = Union[Bottom, Atom, AtLeast]
Concept = Union[Bottom, Atom, AtLeast, Not, And, AtLeastQ]

BOTTOM = Bottom()
TOP = Not(BOTTOM)


def _prec(c: Concept) -> int:
    if isinstance(c, And):
        return 2
    return 3


def _wrap(c: Concept, level: int) -> str:
    s = str(c)
    if _prec(c) < level:
        return f"({s})"
    return s


def exists(r: Role) -> AtLeast:
    return AtLeast(1, r)


def Or(a: Concept, b: Concept) -> Concept:
    return Not(And(Not(a), Not(b)))


def at_most(q: int, r: Role) -> Concept:
    return Not(AtLeast(q + 1, r))


def conj(*parts: Concept) -> Concept:
    if not parts:
        return TOP
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def is_basic(c: Concept) -> bool:
    return isinstance(c, (Bottom, Atom, AtLeast))


def conjuncts(c: Concept) -> List[Concept]:
    if isinstance(c, And):
        return conjuncts(c.left) + conjuncts(c.right)
    return [c]


def subconcepts(c: Concept) -> Iterator[Concept]:
    yield c
    if isinstance(c, Not):
        yield from subconcepts(c.arg)
    elif isinstance(c, And):
        yield from subconcepts(c.left)
        yield from subconcepts(c.right)
    elif isinstance(c, AtLeastQ):
        yield from subconcepts(c.filler)


def concept_names(c: Concept) -> Set[str]:
    return {s.name for s in subconcepts(c) if isinstance(s, Atom)}


def concept_roles(c: Concept) -> Set[str]:
    return {s.role.name for s in subconcepts(c) if isinstance(s, (AtLeast, AtLeastQ))}


# -------------------------------------------------------- role axioms

@dataclass(frozen=True)
class Dis:
    first: Role
    second: Role

    def __str__(self) -> str:
        return f"dis({self.first}, {self.second})"


@dataclass(frozen=True)
class Sym:
    name: str

    def __str__(self) -> str:
        return f"sym({self.name})"


@dataclass(frozen=True)
class Asym:
    name: str

    def __str__(self) -> str:
        return f"asym({self.name})"


@dataclass(frozen=True)
class Ref:
    name: str

    def __str__(self) -> str:
        return f"ref({self.name})"


@dataclass(frozen=True)
class Irr:
    name: str

    def __str__(self) -> str:
        return f"irr({self.name})"


@dataclass(frozen=True)
class Tra:
    name: str

    def __str__(self) -> str:
        return f"tra({self.name})"


RoleConstraint = Union[Dis, Sym, Asym, Ref, Irr, Tra]


def constraint_roles(c: RoleConstraint) -> Set[str]:
    if isinstance(c, Dis):
        return {c.first.name, c.second.name}
    return {c.name}


# ------------------------------------------------------------- KB parts

@dataclass(frozen=True)
class TBox:
    concept_inclusions: Tuple[Tuple[Concept, Concept], ...] = ()
    role_inclusions: Tuple[Tuple[Role, Role], ...] = ()
    role_constraints: Tuple[RoleConstraint, ...] = ()

    def role_names(self) -> Set[str]:
        out: Set[str] = set()
        for lhs, rhs in self.concept_inclusions:
            out |= concept_roles(lhs) | concept_roles(rhs)
        for sub, sup in self.role_inclusions:
            out |= {sub.name, sup.name}
        for c in self.role_constraints:
            out |= constraint_roles(c)
        return out

    def concept_names(self) -> Set[str]:
        out: Set[str] = set()
        for lhs, rhs in self.concept_inclusions:
            out |= concept_names(lhs) | concept_names(rhs)
        return out

    def size(self) -> int:
        return len(self.concept_inclusions) + len(self.role_inclusions) + len(self.role_constraints)


@dataclass(frozen=True)
class ABox:
    concept_assertions: Tuple[Tuple[bool, str, str], ...] = ()
    role_assertions: Tuple[Tuple[bool, str, str, str], ...] = ()
    equalities: Tuple[Tuple[str, str], ...] = ()
    inequalities: Tuple[Tuple[str, str], ...] = ()

    def objects(self) -> List[str]:
        """Object names in order of first appearance."""
        seen: Dict[str, None] = {}
        for _, _, a in self.concept_assertions:
            seen.setdefault(a)
        for _, _, s, o in self.role_assertions:
            seen.setdefault(s)
            seen.setdefault(o)
        for a, b in self.equalities + self.inequalities:
            seen.setdefault(a)
            seen.setdefault(b)
        return list(seen)

    def role_names(self) -> Set[str]:
        return {p for _, p, _, _ in self.role_assertions}

    def concept_names(self) -> Set[str]:
        return {c for _, c, _ in self.concept_assertions}

    def size(self) -> int:
        return (len(self.concept_assertions) + len(self.role_assertions)
                + len(self.equalities) + len(self.inequalities))


@dataclass(frozen=True)
class KnowledgeBase:
    tbox: TBox = field(default_factory=TBox)
    abox: ABox = field(default_factory=ABox)
    una: bool = True

    def role_names(self) -> Set[str]:
        return self.tbox.role_names() | self.abox.role_names()

    def concept_names(self) -> Set[str]:
        return self.tbox.concept_names() | self.abox.concept_names()

    def roles_pm(self) -> List[Role]:
        """role±(K), sorted."""
        return sorted(Role(p, inv) for p in self.role_names() for inv in (False, True))


# -------------------------------------------------------- interpretation

@dataclass
class Interpretation:
    domain: Set[str]
    concept_ext: Dict[str, Set[str]]
    role_ext: Dict[str, Set[Tuple[str, str]]]
    object_map: Dict[str, str]

    def role_pairs(self, r: Role) -> Set[Tuple[str, str]]:
        if r.name not in self.role_ext:
            raise UnknownName(f"no extension for role {r.name}")
        pairs = self.role_ext[r.name]
        if r.inverted:
            return {(y, x) for x, y in pairs}
        return set(pairs)

    def successors(self, r: Role) -> Dict[str, Set[str]]:
        out: Dict[str, Set[str]] = {d: set() for d in self.domain}
        for x, y in self.role_pairs(r):
            out.setdefault(x, set()).add(y)
        return out

    def extension(self, c: Concept) -> Set[str]:
        if isinstance(c, Bottom):
            return set()
        if isinstance(c, Atom):
            if c.name not in self.concept_ext:
                raise UnknownName(f"no extension for concept {c.name}")
            return set(self.concept_ext[c.name])
        if isinstance(c, AtLeast):
            succ = self.successors(c.role)
            return {d for d in self.domain if len(succ[d]) >= c.q}
        if isinstance(c, Not):
            return set(self.domain) - self.extension(c.arg)
        if isinstance(c, And):
            return self.extension(c.left) & self.extension(c.right)
        if isinstance(c, AtLeastQ):
            succ = self.successors(c.role)
            filler = self.extension(c.filler)
            return {d for d in self.domain if len(succ[d] & filler) >= c.q}
        raise TypeError(f"not a concept: {c!r}")


@dataclass(frozen=True)
class Violation:
    kind: str
    item: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.item}"


def check_model(i: Interpretation, k: KnowledgeBase) -> List[Violation]:
    """Every axiom or assertion of k that fails in i; empty means i is a model."""
    out: List[Violation] = []
    t, a = k.tbox, k.abox
    for name in a.objects():
        if name not in i.object_map:
            raise UnknownName(f"object {name} is not interpreted")
    for lhs, rhs in t.concept_inclusions:
        if not i.extension(lhs) <= i.extension(rhs):
            out.append(Violation("concept inclusion", f"{lhs} <= {rhs}"))
    for sub, sup in t.role_inclusions:
        if not i.role_pairs(sub) <= i.role_pairs(sup):
            out.append(Violation("role inclusion", f"{sub} <= {sup}"))
    for c in t.role_constraints:
        if not _constraint_holds(i, c):
            out.append(Violation("role constraint", str(c)))
    m = i.object_map
    for pos, cname, obj in a.concept_assertions:
        if cname not in i.concept_ext:
            raise UnknownName(f"no extension for concept {cname}")
        if (m[obj] in i.concept_ext[cname]) != pos:
            out.append(Violation("assertion", f"{'' if pos else 'not '}{cname}({obj})"))
    for pos, rname, s, o in a.role_assertions:
        if rname not in i.role_ext:
            raise UnknownName(f"no extension for role {rname}")
        if ((m[s], m[o]) in i.role_ext[rname]) != pos:
            out.append(Violation("assertion", f"{'' if pos else 'not '}{rname}({s},{o})"))
    for x, y in a.equalities:
        if m[x] != m[y]:
            out.append(Violation("equality", f"{x} = {y}"))
    for x, y in a.inequalities:
        if m[x] == m[y]:
            out.append(Violation("inequality", f"{x} != {y}"))
    if k.una:
        seen: Dict[str, str] = {}
        for name in a.objects():
            d = m[name]
            if d in seen:
                out.append(Violation("unique names", f"{seen[d]} and {name} share {d}"))
            else:
                seen[d] = name
    return out


def _constraint_holds(i: Interpretation, c: RoleConstraint) -> bool:
    if isinstance(c, Dis):
        return not (i.role_pairs(c.first) & i.role_pairs(c.second))
    pairs = i.role_pairs(Role(c.name))
    if isinstance(c, Sym):
        return all((y, x) in pairs for x, y in pairs)
    if isinstance(c, Asym):
        return not any((y, x) in pairs for x, y in pairs)
    if isinstance(c, Ref):
        return all((d, d) in pairs for d in i.domain)
    if isinstance(c, Irr):
        return not any(x == y for x, y in pairs)
    if isinstance(c, Tra):
        succ: Dict[str, Set[str]] = {}
        for x, y in pairs:
            succ.setdefault(x, set()).add(y)
        return all((x, z) in pairs for x, y in pairs for z in succ.get(y, ()))
    raise TypeError(c)


# ----------------------------------------------------------- classifier

# A literal is (positive, atom) where atom is Atom, AtLeast or AtLeastQ.
Literal = Tuple[bool, Concept]
Clause = FrozenSet[Literal]

CLAUSE_CAP = 4096


class _TooBig(Exception):
    pass


def _cnf(c: Concept, positive: bool) -> Optional[List[Clause]]:
    """CNF of c (or of its negation).  None stands for the constant true;
    a list containing the empty clause is false."""
    if isinstance(c, Bottom):
        return None if not positive else [frozenset()]
    if isinstance(c, (Atom, AtLeast, AtLeastQ)):
        return [frozenset([(positive, c)])]
    if isinstance(c, Not):
        return _cnf(c.arg, not positive)
    if isinstance(c, And):
        if positive:
            return _cnf_and(_cnf(c.left, True), _cnf(c.right, True))
        return _cnf_or(_cnf(c.left, False), _cnf(c.right, False))
    raise TypeError(c)


def _cnf_and(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _cnf_or(a, b):
    if a is None or b is None:
        return None
    if len(a) * len(b) > CLAUSE_CAP:
        raise _TooBig()
    out = []
    for x in a:
        for y in b:
            clause = x | y
            if any((not pos, atom) in clause for pos, atom in clause):
                continue
            out.append(clause)
    return out if out else None


def inclusion_clauses(lhs: Concept, rhs: Concept) -> Optional[List[Clause]]:
    """Clauses of ¬lhs ∨ rhs with tautologies removed; None if too large."""
    try:
        res = _cnf_or(_cnf(lhs, False), _cnf(rhs, True))
    except _TooBig:
        return None
    if res is None:
        return []
    uniq = []
    for cl in res:
        if cl not in uniq:
            uniq.append(cl)
    return uniq


SHAPES = ("core", "krom", "horn", "bool")


def clause_shape(clause: Clause) -> str:
    npos = sum(1 for pos, _ in clause if pos)
    if len(clause) <= 2 and npos <= 1:
        return "core"
    if len(clause) <= 2:
        return "krom"
    if npos <= 1:
        return "horn"
    return "bool"


def join_shapes(a: str, b: str) -> str:
    if a == b:
        return a
    if a == "core":
        return b
    if b == "core":
        return a
    return "bool"


def _occurrences(c: Concept, positive: bool) -> Iterator[Tuple[Concept, bool]]:
    yield c, positive
    if isinstance(c, Not):
        yield from _occurrences(c.arg, not positive)
    elif isinstance(c, And):
        yield from _occurrences(c.left, positive)
        yield from _occurrences(c.right, positive)
    elif isinstance(c, AtLeastQ):
        yield from _occurrences(c.filler, positive)


def axiom_occurrences(lhs: Concept, rhs: Concept) -> List[Tuple[Concept, bool]]:
    """Sub-concept occurrences with polarity (True = positive)."""
    return list(_occurrences(lhs, False)) + list(_occurrences(rhs, True))


@dataclass(frozen=True)
class Issue:
    rule: str
    axiom: int
    detail: str

    def __str__(self) -> str:
        where = f"axiom {self.axiom}" if self.axiom >= 0 else "role axioms"
        return f"{self.rule} ({where}): {self.detail}"


@dataclass(frozen=True)
class FragmentReport:
    shape: str
    numbers: str
    has_role_inclusions: bool
    has_role_constraints: bool
    has_transitivity: bool
    has_qualified: bool
    a123_violations: Tuple[Issue, ...]
    non_simple_number_restrictions: Tuple[Issue, ...]
    notes: Tuple[str, ...]
    family_label: str

    @property
    def admissible(self) -> bool:
        return not self.a123_violations and not self.non_simple_number_restrictions

    def as_dict(self) -> dict:
        return {
            "shape": self.shape,
            "numbers": self.numbers,
            "has_role_inclusions": self.has_role_inclusions,
            "has_role_constraints": self.has_role_constraints,
            "has_transitivity": self.has_transitivity,
            "has_qualified": self.has_qualified,
            "a123_violations": [str(v) for v in self.a123_violations],
            "non_simple_number_restrictions": [str(v) for v in self.non_simple_number_restrictions],
            "notes": list(self.notes),
            "family_label": self.family_label,
        }


def _sub_roles(role_inclusions: Iterable[Tuple[Role, Role]]) -> Dict[Role, Set[Role]]:
    """Map R to {S | S ⊑* R}, inversion closed."""
    up: Dict[Role, Set[Role]] = {}
    for sub, sup in role_inclusions:
        up.setdefault(sub, set()).add(sup)
        up.setdefault(sub.inv(), set()).add(sup.inv())
    down: Dict[Role, Set[Role]] = {}
    for start in list(up):
        seen = {start}
        stack = [start]
        while stack:
            r = stack.pop()
            for s in up.get(r, ()):
                if s not in seen:
                    seen.add(s)
                    stack.append(s)
        for s in seen:
            down.setdefault(s, set()).add(start)
    return down


def classify(k: Union[KnowledgeBase, TBox]) -> FragmentReport:
    t = k.tbox if isinstance(k, KnowledgeBase) else k
    shape = "core"
    notes: List[str] = []
    functional_only = True
    any_q_ge2 = False
    has_qualified = False
    qualified_roles: Set[Role] = set()
    negative_counts: List[Tuple[int, AtLeast]] = []
    violations: List[Issue] = []
    all_counts: List[Tuple[int, Role, int]] = []

    # axioms to inspect for shape: the inclusions themselves plus the filler
    # axioms ∃inv(R_C) ⊑ C that eliminating qualified restrictions would add
    shape_axioms: List[Tuple[Concept, Concept]] = list(t.concept_inclusions)
    for idx, (lhs, rhs) in enumerate(t.concept_inclusions):
        if lhs == TOP or (isinstance(lhs, Not) and lhs.arg == BOTTOM):
            if "top on the left of an inclusion" not in notes:
                notes.append("top on the left of an inclusion")
        for c, positive in axiom_occurrences(lhs, rhs):
            if isinstance(c, AtLeastQ):
                has_qualified = True
                qualified_roles.add(c.role)
                shape_axioms.append((exists(c.role.inv()), c.filler))
                all_counts.append((idx, c.role, c.q))
                if c.q >= 2:
                    any_q_ge2 = True
                    functional_only = False
                if not positive:
                    violations.append(Issue("A1", idx, f"negative occurrence of {c}"))
            elif isinstance(c, AtLeast):
                all_counts.append((idx, c.role, c.q))
                if c.q >= 2:
                    any_q_ge2 = True
                    if not positive:
                        negative_counts.append((idx, c))
        # functionality form: the whole axiom is the single clause ¬≥2R
        if any(isinstance(c, AtLeast) and c.q >= 2 for c, _ in axiom_occurrences(lhs, rhs)):
            cls = inclusion_clauses(lhs, rhs)
            ok = cls is not None and all(
                all(not pos and isinstance(a, AtLeast) and a.q == 2 for pos, a in cl) and len(cl) == 1
                for cl in cls)
            if not ok or any(isinstance(c, AtLeast) and c.q > 2 for c, _ in axiom_occurrences(lhs, rhs)):
                functional_only = False

    for lhs, rhs in shape_axioms:
        cls = inclusion_clauses(lhs, rhs)
        if cls is None:
            shape = "bool"
            continue
        for cl in cls:
            shape = join_shapes(shape, clause_shape(cl))

    if not any_q_ge2:
        numbers = "none"
    elif functional_only:
        numbers = "F"
    else:
        numbers = "N"

    down = _sub_roles(t.role_inclusions)

    def proper_sub(r: Role) -> bool:
        for s in down.get(r, ()):
            if s != r and r not in down.get(s, ()):  # s ⊑* r but not r ⊑* s
                return True
        return False

    for idx, c in negative_counts:
        r = c.role
        if r in qualified_roles or r.inv() in qualified_roles:
            violations.append(Issue("A2", idx, f"negative {c} next to a qualified restriction on {r}"))
        if proper_sub(r) or proper_sub(r.inv()):
            violations.append(Issue("A3", idx, f"negative {c} on a role with a proper sub-role"))

    transitive = {c.name for c in t.role_constraints if isinstance(c, Tra)}
    non_simple: List[Issue] = []
    if transitive:
        for idx, r, q in all_counts:
            if q < 2:
                continue
            subs = down.get(r, {r}) | {r}
            if any(s.name in transitive for s in subs):
                non_simple.append(Issue("simple-role", idx, f"number restriction >= {q} on non-simple role {r}"))

    has_ri = bool(t.role_inclusions)
    has_rc = any(not isinstance(c, Tra) for c in t.role_constraints)
    has_tra = bool(transitive)
    label = _family_label(shape, numbers, has_ri, has_rc or has_qualified, has_tra,
                          bool(violations), bool(non_simple))
    return FragmentReport(shape, numbers, has_ri, has_rc, has_tra, has_qualified,
                          tuple(violations), tuple(non_simple), tuple(notes), label)


def _family_label(shape, numbers, has_ri, extended, has_tra, violated, non_simple) -> str:
    base = f"DL-Lite_{shape}"
    if non_simple or (violated and (extended or has_tra)):
        return f"outside the family ({base} with unrestricted role axioms)"
    if not has_ri and not extended and not has_tra:
        return base + {"none": "", "F": "^{F}", "N": "^{N}"}[numbers]
    if not extended and not has_tra:
        if numbers == "none":
            return base + "^{H}"
        if violated:
            return base + ("^{HF}" if numbers == "F" else "^{HN}")
    sup = "(HF)" if numbers in ("none", "F") else "(HN)"
    if has_tra:
        sup += "+"
    return base + "^{" + sup + "}"
