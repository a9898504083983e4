"""Line-oriented text format for databases, rules and queries.

Grammar::

    program  := (fact | rule | query)*
    fact     := atom "."
    rule     := atoms "->" headconj ("|" headconj)* "."
    headconj := ["exists" var ("," var)* "."] atoms
    query    := "?" atoms ("|" atoms)* "."
    atoms    := atom ("," atom)*

``%`` starts a comment running to the end of the line.  In argument
position an identifier starting with an uppercase letter is a variable and
any other identifier is a constant; an identifier followed by ``(`` is a
function term (only accepted with ``allow_skolem``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable

from .terms import (
    Atom,
    Conjunct,
    Const,
    Func,
    GuardedSaturateError,
    Query,
    Rule,
    Var,
    sorted_atoms,
)


class ParseError(GuardedSaturateError):
    def __init__(self, message: str, line: int, col: int):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


@dataclass
class Program:
    database: set = field(default_factory=set)
    rules: list = field(default_factory=list)
    queries: list = field(default_factory=list)


_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<comment>%[^\n]*)|(?P<arrow>->)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<punct>[(),.|?])"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            if kind == "punct" or kind == "arrow":
                kind = chunk
            toks.append(_Tok(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str, allow_skolem: bool):
        self.toks = _tokenize(text)
        self.i = 0
        self.allow_skolem = allow_skolem
        self.arities: dict = {}

    def peek(self, offset: int = 0) -> _Tok:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def take(self, kind: str | None = None) -> _Tok:
        tok = self.peek()
        if kind is not None and tok.kind != kind:
            want = "identifier" if kind == "ident" else repr(kind)
            got = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise ParseError(f"expected {want}, found {got}", tok.line, tok.col)
        self.i += 1
        return tok

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    def term(self):
        tok = self.take("ident")
        if self.peek().kind == "(":
            if not self.allow_skolem:
                self.error("function terms require allow_skolem", tok)
            self.take("(")
            args = [self.simple_term()]
            while self.peek().kind == ",":
                self.take(",")
                args.append(self.simple_term())
            self.take(")")
            return Func(tok.text, tuple(args)), tok
        return self._leaf(tok), tok

    def simple_term(self):
        tok = self.take("ident")
        if self.peek().kind == "(":
            self.error("nested function terms are not supported")
        return self._leaf(tok)

    @staticmethod
    def _leaf(tok: _Tok):
        if tok.text[0].isupper():
            return Var(tok.text)
        return Const(tok.text)

    def atom(self) -> tuple:
        tok = self.take("ident")
        if tok.text == "exists":
            self.error("'exists' is reserved", tok)
        args: list = []
        if self.peek().kind == "(":
            self.take("(")
            args.append(self.term()[0])
            while self.peek().kind == ",":
                self.take(",")
                args.append(self.term()[0])
            self.take(")")
        known = self.arities.setdefault(tok.text, len(args))
        if known != len(args):
            self.error(f"predicate {tok.text} has arity {known}, used with {len(args)}", tok)
        return Atom(tok.text, tuple(args)), tok

    def atoms(self) -> list:
        out = [self.atom()]
        while self.peek().kind == ",":
            self.take(",")
            out.append(self.atom())
        return out

    def head_conjunct(self) -> tuple:
        binders: list = []
        start = self.peek()
        if start.kind == "ident" and start.text == "exists":
            self.take()
            while True:
                tok = self.take("ident")
                if not tok.text[0].isupper():
                    self.error(f"{tok.text} is not a variable", tok)
                v = Var(tok.text)
                if v in binders:
                    self.error(f"duplicate existential binder {tok.text}", tok)
                binders.append(v)
                if self.peek().kind != ",":
                    break
                self.take(",")
            self.take(".")
        return binders, self.atoms(), start

    def statement(self, prog: Program):
        start = self.peek()
        if start.kind == "?":
            self.take()
            disjuncts = [[a for a, _ in self.atoms()]]
            while self.peek().kind == "|":
                self.take()
                disjuncts.append([a for a, _ in self.atoms()])
            self.take(".")
            prog.queries.append(Query.make(disjuncts))
            return
        if start.kind == "->":
            self.error("rules must have a nonempty body")
        body = self.atoms()
        if self.peek().kind == ".":
            self.take()
            if len(body) != 1:
                self.error("a fact must be a single atom", start)
            atom, tok = body[0]
            if not atom.is_ground():
                self.error("facts must not contain variables", tok)
            if atom.is_functional():
                self.error("facts must be function-free", tok)
            prog.database.add(atom)
            return
        self.take("->")
        head = [self.head_conjunct()]
        while self.peek().kind == "|":
            self.take()
            head.append(self.head_conjunct())
        self.take(".")
        prog.rules.append(self._build_rule(body, head))

    def _build_rule(self, body: list, head: list) -> Rule:
        body_vars = set()
        for atom, tok in body:
            if atom.constants():
                self.error("rules must not contain constants", tok)
            body_vars |= atom.var_set()
        conjuncts = []
        for binders, atoms, start in head:
            clash = [v for v in binders if v in body_vars]
            if clash:
                self.error(f"existential variable {clash[0]} also occurs in the body", start)
            for atom, tok in atoms:
                if atom.constants():
                    self.error("rules must not contain constants", tok)
                for v in atom.variables():
                    if v not in body_vars and v not in binders:
                        self.error(f"head variable {v} is neither in the body nor existential", tok)
            conjuncts.append(Conjunct(frozenset(a for a, _ in atoms), tuple(binders)))
        return Rule.make((a for a, _ in body), conjuncts)


def parse(text: str, allow_skolem: bool = False) -> Program:
    p = _Parser(text, allow_skolem)
    prog = Program()
    while p.peek().kind != "eof":
        p.statement(prog)
    return prog


def parse_rule(text: str, allow_skolem: bool = False) -> Rule:
    prog = parse(text, allow_skolem)
    if len(prog.rules) != 1 or prog.database or prog.queries:
        raise ParseError("expected exactly one rule", 1, 1)
    return prog.rules[0]


def parse_rules(text: str, allow_skolem: bool = False) -> list:
    return parse(text, allow_skolem).rules


def parse_atom(text: str) -> Atom:
    p = _Parser(text.rstrip().rstrip(".") + ".", allow_skolem=True)
    atom, _ = p.atom()
    p.take(".")
    if p.peek().kind != "eof":
        p.error("trailing input after atom")
    return atom


def format_atom(atom: Atom) -> str:
    return str(atom)


def format_atoms(atoms: Iterable[Atom]) -> str:
    return ", ".join(map(str, sorted_atoms(atoms)))


def format_conjunct(c: Conjunct) -> str:
    prefix = f"exists {', '.join(map(str, c.existentials))}. " if c.existentials else ""
    return prefix + format_atoms(c.atoms)


def format_rule(rule: Rule) -> str:
    head = " | ".join(format_conjunct(c) for c in rule.head)
    return f"{format_atoms(rule.body)} -> {head}."


def format_query(q: Query) -> str:
    return "? " + " | ".join(format_atoms(d) for d in q.disjuncts) + "."


def format_program(prog: Program) -> str:
    lines = [f"{a}." for a in sorted_atoms(prog.database)]
    lines += [format_rule(r) for r in prog.rules]
    lines += [format_query(q) for q in prog.queries]
    return "\n".join(lines) + ("\n" if lines else "")
