"""Recursive-descent parser for the ASCII formula grammar.

    formula := 'E' var '.' formula | 'A' var '.' formula | disj
    disj    := conj ('|' conj)*
    conj    := neg ('&' neg)*
    neg     := '!' neg | '(' formula ')' | atom
    atom    := term '=' term | term '!=' term | pred '(' term ')'
             | rel '(' var (',' var)* ')' | '#>=' int var '.' formula
             | 'true' | 'false'
    term    := var | const | '@' int | func '(' term ')' | func '^-1' '(' term ')'

Quantifiers (and cardinality bodies) extend to the end of the enclosing
scope.  Bound variables are renamed ``v0, v1, ...`` in binding order,
skipping names used as free variables, so substitution is capture-free.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .formula import (
    CONST,
    ELEM,
    FALSE,
    MAX_CARDINALITY,
    TRUE,
    And,
    Card,
    Eq,
    Exists,
    Forall,
    Formula,
    FormulaError,
    Not,
    Or,
    Pred,
    Rel,
    Signature,
    Term,
    canonicalize_term,
    free_vars,
)


class ParseError(FormulaError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line, self.col = line, col
        super().__init__(f"{line}:{col}: {message}" if line else message)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<card>\#>=)
  | (?P<neq>!=)
  | (?P<inv>\^-1)
  | (?P<elem>@\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>[().,=!&|])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            chunk = m.group()
            nl = chunk.count("\n")
            if nl:
                line += nl
                line_start = pos + chunk.rindex("\n") + 1
        else:
            tok_text = m.group()
            tokens.append(Token(tok_text if kind == "sym" else kind, tok_text, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, sig: Signature, infer: bool):
        self.toks = tokenize(text)
        self.i = 0
        self.sig = sig
        self.infer = infer

    # -- token helpers
    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(f"expected {kind!r}, found {tok.text or 'end of input'!r}", tok)
        return self.advance()

    def fail(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        raise ParseError(msg, tok.line, tok.col)

    # -- grammar
    def parse(self) -> Formula:
        phi = self.formula()
        if self.peek().kind != "eof":
            self.fail(f"unexpected {self.peek().text!r}")
        return phi

    def _is_quantifier(self) -> bool:
        tok = self.peek()
        return (
            tok.kind == "ident"
            and tok.text in ("E", "A")
            and self.peek(1).kind == "ident"
            and self.peek(2).kind == "."
        )

    def formula(self) -> Formula:
        if self._is_quantifier():
            q = self.advance().text
            v = self.advance().text
            self._check_var_name(v)
            self.expect(".")
            body = self.formula()
            return Exists(v, body) if q == "E" else Forall(v, body)
        return self.disj()

    def disj(self) -> Formula:
        parts = [self.conj()]
        while self.peek().kind == "|":
            self.advance()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(parts)

    def conj(self) -> Formula:
        parts = [self.neg()]
        while self.peek().kind == "&":
            self.advance()
            parts.append(self.neg())
        return parts[0] if len(parts) == 1 else And(parts)

    def neg(self) -> Formula:
        tok = self.peek()
        if tok.kind == "!":
            self.advance()
            return Not(self.neg())
        if tok.kind == "(":
            self.advance()
            phi = self.formula()
            self.expect(")")
            return phi
        if self._is_quantifier():
            return self.formula()
        return self.atom()

    def atom(self) -> Formula:
        tok = self.peek()
        if tok.kind == "card":
            self.advance()
            k_tok = self.expect("int")
            k = int(k_tok.text)
            if k < 1 or k > MAX_CARDINALITY:
                self.fail(f"cardinality bound must be in [1, 2^64-1], got {k}", k_tok)
            v = self.expect("ident").text
            self._check_var_name(v)
            self.expect(".")
            body_tok = self.peek()
            body = self.formula()
            extra = [w for w in free_vars(body) if w != v]
            if extra:
                self.fail(f"cardinality body may only mention {v!r}, found {extra}", body_tok)
            return Card(k, v, body)
        if tok.kind == "ident" and tok.text in ("true", "false") and self.peek(1).kind not in ("=", "neq", "("):
            self.advance()
            return TRUE if tok.text == "true" else FALSE
        if tok.kind == "ident" and self.peek(1).kind == "(":
            name = tok.text
            if name in self.sig.relations:
                return self.relation()
            if name in self.sig.predicates:
                self.advance()
                self.expect("(")
                t = self.term()
                self.expect(")")
                return Pred(name, t)
            if name not in self.sig.functions:
                if not self.infer:
                    self.fail(f"undeclared symbol {name!r}", tok)
                self._infer_application(name)
                return self.atom()
        left = self.term()
        op = self.peek()
        if op.kind not in ("=", "neq"):
            self.fail(f"expected '=' or '!=' after term, found {op.text or 'end of input'!r}", op)
        self.advance()
        right = self.term()
        eq = Eq(left, right)
        return eq if op.kind == "=" else Not(eq)

    def _infer_application(self, name: str):
        # Decide whether an undeclared `name(` heads a term or an atom by
        # looking past the matching parenthesis.
        depth, j, commas = 0, self.i + 1, 0
        while True:
            t = self.toks[j]
            if t.kind == "(":
                depth += 1
            elif t.kind == ")":
                depth -= 1
                if depth == 0:
                    break
            elif t.kind == "," and depth == 1:
                commas += 1
            elif t.kind == "eof":
                self.fail("unbalanced parenthesis")
            j += 1
        after = self.toks[j + 1].kind
        if after in ("=", "neq") or self.peek(1).kind == "inv":
            self.sig.functions.add(name)
        elif commas or self.sig.relations:
            self.sig.relations[name] = commas + 1
        else:
            self.sig.predicates.add(name)

    def relation(self) -> Formula:
        tok = self.advance()
        name = tok.text
        self.expect("(")
        args = [self.expect("ident").text]
        while self.peek().kind == ",":
            self.advance()
            args.append(self.expect("ident").text)
        self.expect(")")
        for a in args:
            self._check_var_name(a)
        arity = self.sig.relations[name]
        if len(args) != arity:
            self.fail(f"relation {name!r} has arity {arity}, got {len(args)} arguments", tok)
        return Rel(name, tuple(args))

    def term(self) -> Term:
        tok = self.peek()
        if tok.kind == "elem":
            self.advance()
            return Term(int(tok.text[1:]), (), ELEM)
        if tok.kind != "ident":
            self.fail(f"expected a term, found {tok.text or 'end of input'!r}", tok)
        name = tok.text
        nxt = self.peek(1).kind
        if nxt in ("(", "inv"):
            if name not in self.sig.functions:
                if name in self.sig.symbols() or not self.infer:
                    self.fail(f"{name!r} is not a function symbol", tok)
                self.sig.functions.add(name)
            self.advance()
            sign = 1
            if self.peek().kind == "inv":
                self.advance()
                sign = -1
            self.expect("(")
            inner = self.term()
            self.expect(")")
            return inner.apply(((name, sign),))
        self.advance()
        if name in self.sig.constants:
            return Term(name, (), CONST)
        self._check_var_name(name, tok)
        return Term(name)

    def _check_var_name(self, name: str, tok: Optional[Token] = None):
        if name in self.sig.symbols():
            self.fail(f"symbol {name!r} used as a variable", tok)


# --------------------------------------------------------------------------
# bound-variable renaming


def _rename_term(t: Term, env: dict) -> Term:
    if t.kind == "var" and t.base in env:
        return Term(env[t.base], t.word)
    return t


def _rename(phi: Formula, env: dict, state: dict) -> Formula:
    if isinstance(phi, Eq):
        return Eq(_rename_term(phi.left, env), _rename_term(phi.right, env))
    if isinstance(phi, Pred):
        return Pred(phi.name, _rename_term(phi.term, env))
    if isinstance(phi, Rel):
        return Rel(phi.name, tuple(env.get(a, a) for a in phi.args))
    if isinstance(phi, Not):
        return Not(_rename(phi.body, env, state))
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(_rename(p, env, state) for p in phi.parts))
    if isinstance(phi, (Exists, Forall, Card)):
        new = _next_bound_name(state)
        body = _rename(phi.body, {**env, phi.var: new}, state)
        if isinstance(phi, Card):
            return Card(phi.k, new, body)
        return type(phi)(new, body)
    return phi


def _next_bound_name(state: dict) -> str:
    while True:
        name = f"v{state['counter']}"
        state["counter"] += 1
        if name not in state["free"]:
            return name


def rename_bound(phi: Formula) -> Formula:
    """Rename bound variables ``v0, v1, ...`` in binding order."""
    return _rename(phi, {}, {"counter": 0, "free": set(free_vars(phi))})


def _canon_terms(phi: Formula) -> Formula:
    if isinstance(phi, Eq):
        return Eq(canonicalize_term(phi.left), canonicalize_term(phi.right))
    if isinstance(phi, Pred):
        return Pred(phi.name, canonicalize_term(phi.term))
    if isinstance(phi, Not):
        return Not(_canon_terms(phi.body))
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(_canon_terms(p) for p in phi.parts))
    if isinstance(phi, Card):
        return Card(phi.k, phi.var, _canon_terms(phi.body))
    if isinstance(phi, (Exists, Forall)):
        return type(phi)(phi.var, _canon_terms(phi.body))
    return phi


def parse_formula(text: str, sig: Signature, infer: bool = False) -> Formula:
    """Parse ``text`` against ``sig``.

    With ``infer=True`` undeclared symbols are added to ``sig`` from their
    syntactic position instead of raising.
    """
    phi = _Parser(text, sig, infer).parse()
    return _canon_terms(rename_bound(phi))


_DECL_RE = re.compile(r"^\s*(func|pred|const|rel)\s+(.*)$")


def parse_formula_file(text: str, sig: Optional[Signature] = None) -> tuple[Formula, Signature]:
    """Parse a formula file: optional declaration lines, then the formula.

    Declarations are ``func f g``, ``pred U``, ``const c`` and
    ``rel E 2``; ``#`` starts a comment line.  Symbols not declared are
    inferred from usage.
    """
    sig = sig or Signature()
    body_lines = []
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("#") and not line.startswith("#>="):
            body_lines.append("")
            continue
        m = _DECL_RE.match(line) if not body_lines or not any(body_lines) else None
        if m:
            kind, rest = m.group(1), m.group(2).split()
            if kind == "func":
                sig.functions.update(rest)
            elif kind == "pred":
                sig.predicates.update(rest)
            elif kind == "const":
                sig.constants.update(rest)
            else:
                for name, arity in zip(rest[::2], rest[1::2]):
                    sig.relations[name] = int(arity)
            body_lines.append("")
        else:
            body_lines.append(raw)
    return parse_formula("\n".join(body_lines), sig, infer=True), sig
