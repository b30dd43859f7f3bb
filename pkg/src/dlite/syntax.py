"""Line-oriented text formats for knowledge bases, queries and interpretations."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple, Union

from .errors import NegationNotAllowed, ParseError, SourceSpan, UnaConflict
from .model import (ABox, AtLeast, AtLeastQ, Atom, Asym, Concept, Dis, Interpretation, Irr, KnowledgeBase, Not,
                    And, Or, Ref, Role, Sym, TBox, Tra, TOP, BOTTOM, concept_names, concept_roles)

KEYWORDS = {"top", "bot", "not", "exists", "role", "concept", "dis", "sym", "asym",
            "ref", "irr", "tra", "una", "true", "false"}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<int>[0-9]+)
  | (?P<sym>:=|<=|>=|!=|->|[-()=,.&|:])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.line, self.col, self.col + len(self.text))


def tokenize(text: str, line: int, col0: int = 1) -> List[Token]:
    out: List[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             SourceSpan(line, col0 + pos, col0 + pos + 1))
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), line, col0 + pos))
        pos = m.end()
    return out


class _Stream:
    def __init__(self, tokens: List[Token], line: int, width: int):
        self.tokens = tokens
        self.i = 0
        self.line = line
        self.width = width

    def peek(self, offset: int = 0) -> Optional[Token]:
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else None

    def at(self, text: str) -> bool:
        t = self.peek()
        return t is not None and t.text == text and t.kind != "int"

    def next(self) -> Token:
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end of line", self.end_span())
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.span)
        return t

    def name(self, what: str = "name") -> Token:
        t = self.next()
        if t.kind != "ident" or t.text in KEYWORDS:
            raise ParseError(f"expected {what}, found {t.text!r}", t.span)
        return t

    def done(self) -> bool:
        return self.i >= len(self.tokens)

    def finish(self) -> None:
        if not self.done():
            t = self.peek()
            raise ParseError(f"unexpected {t.text!r}", t.span)

    def end_span(self) -> SourceSpan:
        col = max(1, self.width - 1)  # the last character of the line
        return SourceSpan(self.line, col, col + 1)


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


# ------------------------------------------------------------- concepts

def _parse_role(s: _Stream) -> Role:
    t = s.name("role name")
    inverted = False
    nxt = s.peek()
    if nxt is not None and nxt.text == "-" and nxt.col == t.col + len(t.text):
        s.next()
        inverted = True
    return Role(t.text, inverted)


def _parse_concept(s: _Stream) -> Concept:
    left = _parse_and(s)
    while s.at("|"):
        s.next()
        left = Or(left, _parse_and(s))
    return left


def _parse_and(s: _Stream) -> Concept:
    left = _parse_unary(s)
    while s.at("&"):
        s.next()
        left = And(left, _parse_unary(s))
    return left


def _parse_unary(s: _Stream) -> Concept:
    t = s.peek()
    if t is None:
        raise ParseError("expected a concept", s.end_span())
    if t.text == "not" and t.kind == "ident":
        s.next()
        return Not(_parse_unary(s))
    if t.text == "top" and t.kind == "ident":
        s.next()
        return TOP
    if t.text == "bot" and t.kind == "ident":
        s.next()
        return BOTTOM
    if t.text == "(":
        s.next()
        c = _parse_concept(s)
        s.expect(")")
        return c
    if t.text == "exists" and t.kind == "ident":
        s.next()
        return _restriction(s, 1)
    if t.text == ">=":
        s.next()
        q = s.next()
        if q.kind != "int" or int(q.text) < 1:
            raise ParseError("expected a positive integer", q.span)
        return _restriction(s, int(q.text))
    tok = s.name("concept")
    return Atom(tok.text)


def _restriction(s: _Stream, q: int) -> Concept:
    r = _parse_role(s)
    if s.at("."):
        s.next()
        s.expect("(")
        filler = _parse_concept(s)
        s.expect(")")
        return AtLeastQ(q, r, filler)
    return AtLeast(q, r)


def parse_concept(text: str) -> Concept:
    s = _Stream(tokenize(text, 1), 1, len(text) + 1)
    c = _parse_concept(s)
    s.finish()
    return c


# ------------------------------------------------------------------- KB

@dataclass
class _Pending:
    line: int
    lhs: Role
    rhs: Role
    span: SourceSpan


def _simple_side(tokens: List[Token]) -> Optional[Role]:
    if len(tokens) == 1 and tokens[0].kind == "ident" and tokens[0].text not in KEYWORDS:
        return Role(tokens[0].text)
    if (len(tokens) == 2 and tokens[0].kind == "ident" and tokens[0].text not in KEYWORDS
            and tokens[1].text == "-" and tokens[1].col == tokens[0].col + len(tokens[0].text)):
        return Role(tokens[0].text, True)
    return None


def parse_kb(text: str) -> KnowledgeBase:
    section: Optional[str] = None
    tbox_items: List[Tuple[int, str, object]] = []  # (order, kind, payload)
    concept_assertions = []
    role_assertions = []
    equalities = []
    inequalities = []
    first_equality: Optional[SourceSpan] = None
    una = True
    role_kind: Set[str] = set()
    concept_kind: Set[str] = set()
    pending: List[Tuple[int, Role, Role, Optional[str]]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            name = stripped.strip("[] \t").lower()
            if name not in ("tbox", "abox", "options") or not stripped.endswith("]"):
                col = line.index("[") + 1
                raise ParseError(f"unknown section {stripped!r}",
                                 SourceSpan(lineno, col, col + len(stripped)))
            section = name
            continue
        tokens = tokenize(line, lineno)
        s = _Stream(tokens, lineno, len(line) + 1)
        if section is None:
            raise ParseError("content before any section header", tokens[0].span)
        if section == "tbox":
            _parse_tbox_line(s, tokens, tbox_items, pending, role_kind, concept_kind)
        elif section == "abox":
            item = _parse_abox_line(s)
            kind = item[0]
            if kind == "concept":
                concept_assertions.append(item[1])
                concept_kind.add(item[1][1])
            elif kind == "role":
                role_assertions.append(item[1])
                role_kind.add(item[1][1])
            elif kind == "eq":
                equalities.append(item[1])
                if first_equality is None:
                    first_equality = tokens[0].span
            else:
                inequalities.append(item[1])
        else:
            key = s.next()
            if key.text != "una":
                raise ParseError(f"unknown option {key.text!r}", key.span)
            s.expect("=")
            val = s.next()
            if val.text not in ("true", "false"):
                raise ParseError("una must be true or false", val.span)
            una = val.text == "true"
            s.finish()

    if una and equalities:
        raise UnaConflict("equality assertions need una = false", first_equality)

    concept_incl = []
    role_incl = []
    constraints = []
    resolved: Dict[int, Tuple[str, object]] = {}
    for order, lhs, rhs, prefix in pending:
        if prefix is None:
            lhs_role = lhs.inverted or rhs.inverted or (
                (lhs.name in role_kind or rhs.name in role_kind)
                and not (lhs.name in concept_kind or rhs.name in concept_kind))
            prefix = "role" if lhs_role else "concept"
        if prefix == "role":
            resolved[order] = ("ri", (lhs, rhs))
        else:
            resolved[order] = ("ci", (Atom(lhs.name), Atom(rhs.name)))
    items = sorted(tbox_items + [(o, k, p) for o, (k, p) in resolved.items()], key=lambda x: x[0])
    for _, kind, payload in items:
        if kind == "ci":
            concept_incl.append(payload)
        elif kind == "ri":
            role_incl.append(payload)
        else:
            constraints.append(payload)
    tbox = TBox(tuple(concept_incl), tuple(role_incl), tuple(constraints))
    abox = ABox(tuple(concept_assertions), tuple(role_assertions), tuple(equalities), tuple(inequalities))
    return KnowledgeBase(tbox, abox, una)


_CONSTRAINTS = {"dis": Dis, "sym": Sym, "asym": Asym, "ref": Ref, "irr": Irr, "tra": Tra}


def _parse_tbox_line(s, tokens, items, pending, role_kind, concept_kind) -> None:
    order = len(items) + len(pending)
    first = tokens[0]
    if first.kind == "ident" and first.text in _CONSTRAINTS and len(tokens) > 1 and tokens[1].text == "(":
        s.next()
        s.expect("(")
        if first.text == "dis":
            r1 = _parse_role(s)
            s.expect(",")
            r2 = _parse_role(s)
            c = Dis(r1, r2)
            role_kind.update({r1.name, r2.name})
        else:
            name = s.name("role name").text
            c = _CONSTRAINTS[first.text](name)
            role_kind.add(name)
        s.expect(")")
        s.finish()
        items.append((order, "rc", c))
        return
    prefix = None
    if first.kind == "ident" and first.text in ("role", "concept"):
        prefix = first.text
        s.next()
        tokens = tokens[1:]
    split = [i for i, t in enumerate(tokens) if t.text == "<="]
    if len(split) != 1:
        raise ParseError("an inclusion needs exactly one '<='", first.span)
    lhs_toks, rhs_toks = tokens[:split[0]], tokens[split[0] + 1:]
    if not lhs_toks or not rhs_toks:
        raise ParseError("empty side of an inclusion", tokens[split[0]].span)
    lhs_role, rhs_role = _simple_side(lhs_toks), _simple_side(rhs_toks)
    if prefix == "role":
        if lhs_role is None or rhs_role is None:
            raise ParseError("a role inclusion relates two roles", first.span)
        pending.append((order, lhs_role, rhs_role, "role"))
        return
    if lhs_role is not None and rhs_role is not None:
        if prefix == "concept" and (lhs_role.inverted or rhs_role.inverted):
            raise ParseError("inverse roles are not concepts", first.span)
        pending.append((order, lhs_role, rhs_role, prefix))
        return
    left = _Stream(lhs_toks, s.line, s.width)
    lhs = _parse_concept(left)
    left.finish()
    right = _Stream(rhs_toks, s.line, s.width)
    rhs = _parse_concept(right)
    right.finish()
    role_kind.update(concept_roles(lhs) | concept_roles(rhs))
    concept_kind.update(concept_names(lhs) | concept_names(rhs))
    items.append((order, "ci", (lhs, rhs)))


def _parse_abox_line(s: _Stream):
    positive = True
    if s.at("not"):
        s.next()
        positive = False
    first = s.name()
    if s.at("=") or s.at("!="):
        op = s.next()
        if not positive:
            raise ParseError("'not' applies to assertions only", op.span)
        other = s.name("object name")
        s.finish()
        return ("eq" if op.text == "=" else "neq", (first.text, other.text))
    s.expect("(")
    a = s.name("object name").text
    if s.at(","):
        s.next()
        b = s.name("object name").text
        s.expect(")")
        s.finish()
        return ("role", (positive, first.text, a, b))
    s.expect(")")
    s.finish()
    return ("concept", (positive, first.text, a))


def _intrinsic_kinds(k: KnowledgeBase) -> Tuple[Set[str], Set[str]]:
    roles: Set[str] = set()
    concepts: Set[str] = set()
    for lhs, rhs in k.tbox.concept_inclusions:
        if isinstance(lhs, Atom) and isinstance(rhs, Atom):
            continue
        roles |= concept_roles(lhs) | concept_roles(rhs)
        concepts |= concept_names(lhs) | concept_names(rhs)
    for c in k.tbox.role_constraints:
        roles |= {c.first.name, c.second.name} if isinstance(c, Dis) else {c.name}
    roles |= k.abox.role_names()
    concepts |= k.abox.concept_names()
    return roles, concepts


def print_kb(k: KnowledgeBase) -> str:
    roles, concepts = _intrinsic_kinds(k)
    lines = ["[tbox]"]
    for lhs, rhs in k.tbox.concept_inclusions:
        text = f"{lhs} <= {rhs}"
        if isinstance(lhs, Atom) and isinstance(rhs, Atom):
            guess_role = ((lhs.name in roles or rhs.name in roles)
                          and not (lhs.name in concepts or rhs.name in concepts))
            if guess_role:
                text = "concept " + text
        lines.append(text)
    for sub, sup in k.tbox.role_inclusions:
        text = f"{sub} <= {sup}"
        if not (sub.inverted or sup.inverted):
            guess_role = ((sub.name in roles or sup.name in roles)
                          and not (sub.name in concepts or sup.name in concepts))
            if not guess_role:
                text = "role " + text
        lines.append(text)
    for c in k.tbox.role_constraints:
        lines.append(str(c))
    lines.append("[abox]")
    for pos, cname, a in k.abox.concept_assertions:
        lines.append(f"{'' if pos else 'not '}{cname}({a})")
    for pos, rname, a, b in k.abox.role_assertions:
        lines.append(f"{'' if pos else 'not '}{rname}({a},{b})")
    for a, b in k.abox.equalities:
        lines.append(f"{a} = {b}")
    for a, b in k.abox.inequalities:
        lines.append(f"{a} != {b}")
    if not k.una:
        lines.append("[options]")
        lines.append("una = false")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------- queries

@dataclass(frozen=True)
class QAtom:
    pred: str
    args: Tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.pred}({','.join(self.args)})"


@dataclass(frozen=True)
class QAnd:
    parts: Tuple["QFormula", ...]

    def __str__(self) -> str:
        return "(" + " & ".join(str(p) for p in self.parts) + ")"


@dataclass(frozen=True)
class QOr:
    parts: Tuple["QFormula", ...]

    def __str__(self) -> str:
        return "(" + " | ".join(str(p) for p in self.parts) + ")"


@dataclass(frozen=True)
class QExists:
    vars: Tuple[str, ...]
    body: "QFormula"

    def __str__(self) -> str:
        return f"(exists {','.join(self.vars)} . {self.body})"


QFormula = Union[QAtom, QAnd, QOr, QExists]


@dataclass(frozen=True)
class Query:
    name: str
    head: Tuple[str, ...]
    body: QFormula
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def __str__(self) -> str:
        return f"{self.name}({','.join(self.head)}) := {self.body}"


def free_vars(f: QFormula) -> Set[str]:
    if isinstance(f, QAtom):
        return set(f.args)
    if isinstance(f, (QAnd, QOr)):
        out: Set[str] = set()
        for p in f.parts:
            out |= free_vars(p)
        return out
    return free_vars(f.body) - set(f.vars)


def bound_vars(f: QFormula) -> List[str]:
    if isinstance(f, QAtom):
        return []
    if isinstance(f, (QAnd, QOr)):
        return [v for p in f.parts for v in bound_vars(p)]
    return list(f.vars) + bound_vars(f.body)


def query_atoms(f: QFormula) -> List[QAtom]:
    if isinstance(f, QAtom):
        return [f]
    if isinstance(f, (QAnd, QOr)):
        return [a for p in f.parts for a in query_atoms(p)]
    return query_atoms(f.body)


def _query_disj(s: _Stream) -> QFormula:
    parts = [_query_conj(s)]
    while s.at("|"):
        s.next()
        parts.append(_query_conj(s))
    return parts[0] if len(parts) == 1 else QOr(tuple(parts))


def _query_conj(s: _Stream) -> QFormula:
    parts = [_query_unit(s)]
    while s.at("&"):
        s.next()
        parts.append(_query_unit(s))
    return parts[0] if len(parts) == 1 else QAnd(tuple(parts))


def _query_unit(s: _Stream) -> QFormula:
    t = s.peek()
    if t is None:
        raise ParseError("expected a query formula", s.end_span())
    if t.kind == "ident" and t.text == "not":
        raise NegationNotAllowed("queries are positive; 'not' is not allowed", t.span)
    if t.kind == "ident" and t.text == "exists":
        s.next()
        names = [s.name("variable").text]
        while s.at(","):
            s.next()
            names.append(s.name("variable").text)
        s.expect(".")
        return QExists(tuple(names), _query_disj(s))
    if t.text == "(":
        s.next()
        f = _query_disj(s)
        s.expect(")")
        return f
    pred = s.name("predicate")
    s.expect("(")
    args = [s.name("variable").text]
    while s.at(","):
        s.next()
        args.append(s.name("variable").text)
    close = s.expect(")")
    if len(args) > 2:
        raise ParseError("atoms have one or two arguments", close.span)
    return QAtom(pred.text, tuple(args))


def parse_query(text: str) -> Query:
    tokens: List[Token] = []
    width = 1
    last_line = 1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        tokens.extend(tokenize(line, lineno))
        if line.strip():
            last_line, width = lineno, len(line) + 1
    if not tokens:
        raise ParseError("empty query", SourceSpan(1, 1, 2))
    s = _Stream(tokens, last_line, width)
    name = s.name("query name")
    s.expect("(")
    head: List[str] = []
    if not s.at(")"):
        head.append(s.name("variable").text)
        while s.at(","):
            s.next()
            head.append(s.name("variable").text)
    s.expect(")")
    s.expect(":=")
    body = _query_disj(s)
    s.finish()
    free = free_vars(body)
    missing = free - set(head)
    if missing:
        raise ParseError(f"free variables not in the head: {', '.join(sorted(missing))}", name.span)
    if len(set(head)) != len(head):
        raise ParseError("repeated head variable", name.span)
    clash = set(bound_vars(body)) & set(head)
    if clash:
        raise ParseError(f"bound variables reuse head names: {', '.join(sorted(clash))}", name.span)
    return Query(name.text, tuple(head), body, name.span)


def print_query(q: Query) -> str:
    return f"{q.name}({','.join(q.head)}) := {_print_qf(q.body)}\n"


def _print_qf(f: QFormula) -> str:
    if isinstance(f, QAtom):
        return str(f)
    if isinstance(f, QAnd):
        return " & ".join(_print_qf_unit(p) for p in f.parts)
    if isinstance(f, QOr):
        return " | ".join(_print_qf_unit(p) for p in f.parts)
    return f"exists {','.join(f.vars)} . {_print_qf(f.body)}"


def _print_qf_unit(f: QFormula) -> str:
    if isinstance(f, QAtom):
        return str(f)
    return "(" + _print_qf(f) + ")"


def prenex(q: Query) -> Tuple[List[str], QFormula]:
    """Rename bound variables apart and pull the quantifiers to the front."""
    used = set(q.head)
    bound: List[str] = []

    def fresh(v: str) -> str:
        name = v
        i = 1
        while name in used:
            name = f"{v}_{i}"
            i += 1
        used.add(name)
        return name

    def walk(f: QFormula, env: Dict[str, str]) -> QFormula:
        if isinstance(f, QAtom):
            return QAtom(f.pred, tuple(env.get(a, a) for a in f.args))
        if isinstance(f, QAnd):
            return QAnd(tuple(walk(p, env) for p in f.parts))
        if isinstance(f, QOr):
            return QOr(tuple(walk(p, env) for p in f.parts))
        inner = dict(env)
        for v in f.vars:
            nv = fresh(v)
            inner[v] = nv
            bound.append(nv)
        return walk(f.body, inner)

    matrix = walk(q.body, {})
    return bound, matrix


def to_dnf(f: QFormula) -> List[List[QAtom]]:
    """Disjunctive normal form of a quantifier-free positive matrix."""
    if isinstance(f, QAtom):
        return [[f]]
    if isinstance(f, QOr):
        return [c for p in f.parts for c in to_dnf(p)]
    if isinstance(f, QAnd):
        out: List[List[QAtom]] = [[]]
        for p in f.parts:
            out = [a + b for a in out for b in to_dnf(p)]
        return out
    return to_dnf(f.body)


# -------------------------------------------------------- interpretations

def print_interpretation(i: Interpretation) -> str:
    lines = ["[domain]", " ".join(sorted(i.domain)), "[concepts]"]
    for name in sorted(i.concept_ext):
        lines.append(f"{name}: {' '.join(sorted(i.concept_ext[name]))}".rstrip())
    lines.append("[roles]")
    for name in sorted(i.role_ext):
        pairs = " ".join(f"{x},{y}" for x, y in sorted(i.role_ext[name]))
        lines.append(f"{name}: {pairs}".rstrip())
    lines.append("[objects]")
    for name in sorted(i.object_map):
        lines.append(f"{name} -> {i.object_map[name]}")
    return "\n".join(lines) + "\n"


def parse_interpretation(text: str) -> Interpretation:
    section = None
    domain: Set[str] = set()
    concepts: Dict[str, Set[str]] = {}
    roles: Dict[str, Set[Tuple[str, str]]] = {}
    objects: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("domain", "concepts", "roles", "objects"):
                raise ParseError(f"unknown section {line!r}", SourceSpan(lineno, 1, len(line) + 1))
            continue
        if section == "domain":
            domain.update(line.split())
        elif section in ("concepts", "roles"):
            if ":" not in line:
                raise ParseError("expected 'name: members'", SourceSpan(lineno, 1, len(line) + 1))
            name, rest = line.split(":", 1)
            name = name.strip()
            if section == "concepts":
                concepts[name] = set(rest.split())
            else:
                pairs = set()
                for item in rest.split():
                    parts = item.split(",")
                    if len(parts) != 2:
                        raise ParseError(f"bad pair {item!r}", SourceSpan(lineno, 1, len(line) + 1))
                    pairs.add((parts[0], parts[1]))
                roles[name] = pairs
        elif section == "objects":
            if "->" not in line:
                raise ParseError("expected 'name -> element'", SourceSpan(lineno, 1, len(line) + 1))
            a, d = line.split("->", 1)
            objects[a.strip()] = d.strip()
        else:
            raise ParseError("content before any section header", SourceSpan(lineno, 1, len(line) + 1))
    return Interpretation(domain, concepts, roles, objects)
