"""Concrete textual syntax (.sel files) plus JSON and DOT emission.

The grammar, one statement per ``;``::

    kb         := (stmt ";")*
    stmt       := sharpening | modAxiom | axiom | block
    sharpening := SP "<=" SP
    modAxiom   := modality "[" axiom "]"
    block      := modality "{" (axiom ";")* "}"
    modality   := "B(" SP ")" | "D(" SP ")"
    SP         := IDENT | "*"
    axiom      := concept "<:" concept | concept "(" IDENT ")"
                | IDENT "(" IDENT "," IDENT ")"
    concept    := "Top" | "Bot" | IDENT | concept "&" concept
                | "ex" IDENT "." concept | modality "[" concept "]"
                | "(" concept ")"

``&`` is left-associative and binds tighter than ``<:``; ``ex R.``
extends maximally to the right.  Line comments start with ``#``.
Role assertions are told apart from unary concept assertions by arity.
Identifiers with the reserved ``__f`` prefix are rejected so that
machine-generated names can never collide with user input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .kb import (
    BOX, DIAMOND, RESERVED_PREFIX, TOP, BOT, UNIVERSAL,
    AnnotatedKb, Atom, And, Block, Bot, Box, ConceptAssertion, ConceptTerm,
    Diamond, Exists, Gci, KnowledgeBase, RoleAssertion, Sharpening, Top,
    axiom_key, modal,
)


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    kind: str = "error"

    def __str__(self):
        return f"{self.line}:{self.column}: {self.kind}: {self.message}"


class ParseError(Exception):
    """Raised when parsing fails; carries all collected diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_PUNCT = ("<=", "<:", "(", ")", "[", "]", "{", "}", "&", ".", ",", ";", "*")
_KEYWORDS = ("Top", "Bot", "ex")


@dataclass(frozen=True)
class _Tok:
    kind: str          # "ident", "kw", punctuation text, or "eof"
    text: str
    line: int
    col: int


def _lex(text: str):
    toks = []
    diags = []
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        two = text[i:i + 2]
        if two in ("<=", "<:"):
            toks.append(_Tok(two, two, line, col))
            i += 2
            col += 2
            continue
        if ch in "()[]{}&.,;*":
            toks.append(_Tok(ch, ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word in _KEYWORDS:
                toks.append(_Tok("kw", word, line, col))
            else:
                if word.startswith(RESERVED_PREFIX):
                    diags.append(ParseDiagnostic(
                        line, col,
                        f"identifier {word!r} uses the reserved prefix {RESERVED_PREFIX!r}"))
                toks.append(_Tok("ident", word, line, col))
            col += j - i
            i = j
            continue
        diags.append(ParseDiagnostic(line, col, f"unknown token {ch!r}"))
        i += 1
        col += 1
    toks.append(_Tok("eof", "", line, col))
    return toks, diags


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _SyntaxAbort(Exception):
    """Internal signal: skip to the next statement after an error."""


class _Parser:
    def __init__(self, toks, diags):
        self.toks = toks
        self.pos = 0
        self.diags = diags

    def tok(self, k=0) -> _Tok:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def error(self, message, tok=None):
        tok = tok or self.tok()
        self.diags.append(ParseDiagnostic(tok.line, tok.col, message))
        raise _SyntaxAbort()

    def expect(self, kind, what=None):
        t = self.tok()
        if t.kind != kind:
            self.error(f"expected {what or kind!r}, found {t.text or 'end of input'!r}")
        self.pos += 1
        return t

    def at_modality(self, offset=0) -> bool:
        t0 = self.tok(offset)
        return (t0.kind == "ident" and t0.text in ("B", "D")
                and self.tok(offset + 1).kind == "("
                and self.tok(offset + 2).kind in ("ident", "*")
                and self.tok(offset + 3).kind == ")")

    def parse_modality(self):
        mode = BOX if self.tok().text == "B" else DIAMOND
        self.pos += 1
        self.expect("(")
        sp = self.parse_standpoint()
        self.expect(")")
        return mode, sp

    def parse_standpoint(self) -> str:
        t = self.tok()
        if t.kind == "*":
            self.pos += 1
            return UNIVERSAL
        if t.kind == "ident":
            self.pos += 1
            return t.text
        self.error("expected a standpoint name")

    def parse_individual(self) -> str:
        t = self.tok()
        if t.kind != "ident":
            self.error("expected an individual name")
        self.pos += 1
        return t.text

    # -- statements --------------------------------------------------------

    def parse_kb(self) -> AnnotatedKb:
        stmts = []
        while self.tok().kind != "eof":
            try:
                stmts.append(self.parse_statement())
            except _SyntaxAbort:
                self.skip_statement()
        if self.diags:
            raise ParseError(self.diags)
        return AnnotatedKb(tuple(stmts))

    def skip_statement(self):
        depth = 0
        while True:
            t = self.tok()
            if t.kind == "eof":
                return
            self.pos += 1
            if t.kind == "{":
                depth += 1
            elif t.kind == "}":
                depth = max(0, depth - 1)
            elif t.kind == ";" and depth == 0:
                return

    def parse_statement(self):
        t = self.tok()
        if t.kind in ("ident", "*") and self.tok(1).kind == "<=":
            lower = self.parse_standpoint()
            self.expect("<=")
            upper = self.parse_standpoint()
            self.expect(";")
            return Sharpening(lower, upper)
        if self.at_modality() and self.tok(4).kind == "{":
            mode, sp = self.parse_modality()
            self.expect("{")
            axioms = []
            while self.tok().kind != "}":
                if self.tok().kind == "eof":
                    self.error("unterminated block")
                axioms.append(self.parse_axiom(allow_modalised=False))
                self.expect(";")
            self.expect("}")
            self.expect(";")
            if not axioms:
                self.diags.append(ParseDiagnostic(
                    t.line, t.col, "empty block has no effect", kind="warning"))
            return Block(mode, sp, tuple(axioms))
        ax = self.parse_axiom(allow_modalised=True)
        self.expect(";")
        return ax

    # -- axioms ------------------------------------------------------------

    def parse_axiom(self, allow_modalised: bool):
        """Parse one axiom; a leading modality may turn out to belong either
        to the axiom itself or to a modal concept starting the left side."""
        if self.at_modality() and self.tok(4).kind == "[":
            start = self.tok()
            mode, sp = self.parse_modality()
            self.expect("[")
            if self.tok().kind == "<=" or self.tok(1).kind == "<=":
                self.error("sharpening statements may not occur under a modality", start)
            concept = self.parse_concept()
            t = self.tok()
            if t.kind == "<:":
                self.pos += 1
                rhs = self.parse_concept()
                self.expect("]")
                if not allow_modalised:
                    self.error("modalised axioms are not allowed inside blocks", start)
                return Gci(mode, sp, concept, rhs)
            if t.kind == "(":
                ax = self.finish_assertion(concept, mode, sp)
                self.expect("]")
                if not allow_modalised:
                    self.error("modalised axioms are not allowed inside blocks", start)
                return ax
            if t.kind == "]":
                # It was a modal concept: keep parsing the surrounding axiom.
                self.pos += 1
                left = self.parse_conj_rest(modal(mode, sp, concept))
                return self.finish_bare_axiom(left)
            self.error("expected '<:', '(' or ']' inside a modality")
        left = self.parse_concept()
        return self.finish_bare_axiom(left)

    def finish_bare_axiom(self, left: ConceptTerm):
        t = self.tok()
        if t.kind == "<:":
            self.pos += 1
            rhs = self.parse_concept()
            return Gci(BOX, UNIVERSAL, left, rhs)
        if t.kind == "(":
            return self.finish_assertion(left, BOX, UNIVERSAL)
        self.error("expected '<:' or '(' to complete the axiom")

    def finish_assertion(self, concept: ConceptTerm, mode: str, sp: str):
        self.expect("(")
        first = self.parse_individual()
        if self.tok().kind == ",":
            if not isinstance(concept, Atom):
                self.error("role assertions need a plain role name")
            self.pos += 1
            second = self.parse_individual()
            self.expect(")")
            return RoleAssertion(mode, sp, concept.name, first, second)
        self.expect(")")
        return ConceptAssertion(mode, sp, concept, first)

    # -- concepts ----------------------------------------------------------

    def parse_concept(self) -> ConceptTerm:
        return self.parse_conj_rest(self.parse_unary())

    def parse_conj_rest(self, left: ConceptTerm) -> ConceptTerm:
        while self.tok().kind == "&":
            self.pos += 1
            left = And(left, self.parse_unary())
        return left

    def parse_unary(self) -> ConceptTerm:
        t = self.tok()
        if t.kind == "kw" and t.text == "Top":
            self.pos += 1
            return TOP
        if t.kind == "kw" and t.text == "Bot":
            self.pos += 1
            return BOT
        if t.kind == "kw" and t.text == "ex":
            self.pos += 1
            role = self.expect("ident", "a role name").text
            self.expect(".")
            return Exists(role, self.parse_concept())
        if self.at_modality():
            if self.tok(4).kind != "[":
                self.error("a modality inside a concept must be followed by '['")
            mode, sp = self.parse_modality()
            self.expect("[")
            inner = self.parse_concept()
            self.expect("]")
            return modal(mode, sp, inner)
        if t.kind == "(":
            self.pos += 1
            inner = self.parse_concept()
            self.expect(")")
            return inner
        if t.kind == "ident":
            self.pos += 1
            return Atom(t.text)
        self.error(f"expected a concept, found {t.text or 'end of input'!r}")


def parse_kb(text: str) -> AnnotatedKb:
    """Parse a .sel document.  Raises ParseError carrying diagnostics."""
    toks, diags = _lex(text)
    return _Parser(toks, diags).parse_kb()


def try_parse(text: str):
    """Like parse_kb, but returns ``(annotated_or_None, diagnostics)``."""
    try:
        return parse_kb(text), []
    except ParseError as e:
        return None, e.diagnostics


def _parse_fragment(text: str, what: str):
    toks, diags = _lex(text)
    parser = _Parser(toks, diags)
    try:
        if what == "axiom":
            node = parser.parse_axiom(allow_modalised=True)
        else:
            node = parser.parse_concept()
        if parser.tok().kind != "eof":
            parser.error(f"trailing input after {what}")
    except _SyntaxAbort:
        raise ParseError(parser.diags)
    if parser.diags:
        raise ParseError(parser.diags)
    return node


def parse_axiom_text(text: str):
    """Parse a single axiom given in .sel syntax (sharpenings included)."""
    stripped = text.strip().rstrip(";")
    toks, _ = _lex(stripped)
    if toks[0].kind in ("ident", "*") and toks[1].kind == "<=":
        ann = parse_kb(stripped + ";")
        return ann.statements[0]
    return _parse_fragment(stripped, "axiom")


def parse_concept_text(text: str) -> ConceptTerm:
    """Parse a single concept term given in .sel syntax."""
    return _parse_fragment(text.strip(), "concept")


# ---------------------------------------------------------------------------
# Serializer
# ---------------------------------------------------------------------------

def render_concept(c: ConceptTerm) -> str:
    if isinstance(c, Top):
        return "Top"
    if isinstance(c, Bot):
        return "Bot"
    if isinstance(c, Atom):
        return c.name
    if isinstance(c, And):
        # Parenthesise a left existential (it would otherwise swallow the
        # conjunction) and a right conjunction (which would re-associate).
        left = render_concept(c.left)
        if isinstance(c.left, Exists):
            left = f"({left})"
        right = render_concept(c.right)
        if isinstance(c.right, And):
            right = f"({right})"
        return f"{left} & {right}"
    if isinstance(c, Exists):
        return f"ex {c.role}.{render_concept(c.filler)}"
    if isinstance(c, Box):
        return f"B({c.standpoint})[{render_concept(c.inner)}]"
    if isinstance(c, Diamond):
        return f"D({c.standpoint})[{render_concept(c.inner)}]"
    raise TypeError(f"not a concept term: {c!r}")


def _prefix(mode: str, sp: str) -> str:
    if mode == BOX and sp == UNIVERSAL:
        return ""
    return ("B" if mode == BOX else "D") + f"({sp})"


def _assertion_concept(c: ConceptTerm) -> str:
    text = render_concept(c)
    if isinstance(c, (And, Exists)):
        return f"({text})"
    return text


def render_axiom(ax) -> str:
    if isinstance(ax, Sharpening):
        return f"{ax.lower} <= {ax.upper}"
    if isinstance(ax, Gci):
        body = f"{render_concept(ax.lhs)} <: {render_concept(ax.rhs)}"
    elif isinstance(ax, ConceptAssertion):
        body = f"{_assertion_concept(ax.concept)}({ax.individual})"
    elif isinstance(ax, RoleAssertion):
        body = f"{ax.role}({ax.subject}, {ax.target})"
    else:
        raise TypeError(f"not an axiom: {ax!r}")
    pre = _prefix(ax.mode, ax.standpoint)
    return f"{pre}[{body}]" if pre else body


def _statement_rank(stmt) -> tuple:
    if isinstance(stmt, Block):
        return (4 if stmt.mode == BOX else 5, stmt.standpoint)
    return (("0sharp", "1gci", "2ca", "3ra").index(axiom_key(stmt)[0]), "")


def serialize(kb) -> str:
    """Render a knowledge base (or parsed statement list) canonically.

    Statements are sorted by kind and then lexicographically, so the
    output is deterministic and stable under one reparse.
    """
    stmts = kb.axioms if isinstance(kb, KnowledgeBase) else kb.statements
    rendered = []
    for stmt in stmts:
        if isinstance(stmt, Block):
            inner = sorted(render_axiom(ax) for ax in stmt.axioms)
            head = ("B" if stmt.mode == BOX else "D") + f"({stmt.standpoint})"
            text = head + "{ " + " ".join(s + ";" for s in inner) + " }"
        else:
            text = render_axiom(stmt)
        rendered.append((_statement_rank(stmt), text))
    rendered.sort()
    return "".join(text + ";\n" for _, text in rendered)


def render_formula(f) -> str:
    """Render a constraint payload: an axiom or an unmodalised body."""
    from .kb import InclusionFact, ConceptFact, RoleFact
    if isinstance(f, InclusionFact):
        return f"{render_concept(f.lhs)} <: {render_concept(f.rhs)}"
    if isinstance(f, ConceptFact):
        return f"{_assertion_concept(f.concept)}({f.individual})"
    if isinstance(f, RoleFact):
        return f"{f.role}({f.subject}, {f.target})"
    return render_axiom(f)


# ---------------------------------------------------------------------------
# JSON reports
# ---------------------------------------------------------------------------

def emit_json(report: dict) -> str:
    """One JSON document per task result.

    Schema: ``{"task": str, "answer": bool|array, "axiom"?: str,
    "ruleApplications"?: int, "elements"?: int,
    "clash"?: {"element": str, "variable": str}}``.
    """
    ordered = {}
    for key in ("task", "answer", "axiom", "concept", "ruleApplications",
                "elements", "clash", "status", "model"):
        if key in report:
            ordered[key] = report[key]
    for key in report:
        if key not in ordered:
            ordered[key] = report[key]
    return json.dumps(ordered) + "\n"


# ---------------------------------------------------------------------------
# DOT dumps
# ---------------------------------------------------------------------------

def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(cg) -> str:
    """Render a completion graph in Graphviz DOT format.

    One node per quasi-element annotated with its constraint count, one
    edge per quasi-role labelled ``R @ (v,v')``.
    """
    lines = ["digraph completion {"]
    for elem in cg.element_ids():
        count = cg.constraint_count(elem)
        label = f"{elem}\\n{count} constraints"
        lines.append(f"  {_dot_quote(elem)} [label=\"{label}\"];")
    for (e, v, e2, v2, role) in cg.quasi_roles():
        label = f"{role} @ ({v},{v2})"
        lines.append(f"  {_dot_quote(e)} -> {_dot_quote(e2)} [label=\"{label}\"];")
    lines.append("}")
    return "\n".join(lines) + "\n"
