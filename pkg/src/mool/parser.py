"""Lexer and recursive-descent parser for ``.mool`` source text.

The concrete syntax follows the Java-like listings the language is usually
written in::

    class File {
        usage lin{open; Read} where
            Read = lin{eof; <lin{close; end} + lin{read; Read}>};
        int lines;
        void open() { this.lines = 2 }
        ...
    }

``m()`` is shorthand for ``m(unit)`` in calls and ``m(void _)`` in
declarations.  ``File f;`` declares ``f`` initialised to ``null``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from . import syntax as S
from .diagnostics import Diagnostic, ParseError
from .usage import END, EPS, Branch, Rec, UVar, UsageError, Variant

KEYWORDS = {
    "class", "usage", "where", "lin", "un", "end", "rec", "new", "this", "if",
    "else", "while", "spawn", "sync", "void", "int", "bool", "boolean", "true",
    "false", "unit", "null",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*|/\*.*?\*/)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|&&|\|\||[{}()\[\];.=<>+\-*/!,])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | kw | op | eof
    text: str
    start: int
    end: int


def _byte_offsets(source: str):
    if source.isascii():
        return lambda i: i
    prefix = [0]
    for ch in source:
        prefix.append(prefix[-1] + len(ch.encode("utf-8")))
    return prefix.__getitem__


def tokenize(source: str) -> list[Token]:
    to_byte = _byte_offsets(source)
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            if source.startswith("/*", pos):
                msg = "unterminated comment"
            else:
                msg = f"unexpected character {source[pos]!r}"
            raise ParseError([Diagnostic("lexical-error", msg, (to_byte(pos), to_byte(pos + 1)))])
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            if kind == "ident" and text in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, text, to_byte(m.start()), to_byte(m.end())))
        pos = m.end()
    end = to_byte(len(source))
    tokens.append(Token("eof", "", end, end))
    return tokens


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0

    # -- token helpers ----------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, text: str, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok.kind in ("kw", "op") and tok.text == text

    def advance(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.peek()
        found = tok.text or "end of input"
        raise ParseError([Diagnostic("syntax-error", f"{msg} (found {found!r})", (tok.start, tok.end))])

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.advance()

    def ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            self.error("expected identifier")
        return self.advance()

    def span_from(self, start: Token):
        return (start.start, self.tokens[self.pos - 1].end)

    # -- declarations -----------------------------------------------------

    def program(self) -> S.Program:
        classes = []
        seen = {}
        diags = []
        while self.peek().kind != "eof":
            cls = self.class_decl()
            if cls.name in seen:
                diags.append(Diagnostic("duplicate-class", f"class {cls.name} is declared twice", cls.span))
            seen[cls.name] = cls
            classes.append(cls)
        if diags:
            raise ParseError(diags)
        return S.Program(tuple(classes))

    def class_decl(self) -> S.ClassDecl:
        start = self.expect("class")
        name = self.ident().text
        self.expect("{")
        usage, where = EPS, ()
        if self.at("usage"):
            self.advance()
            usage = self.usage()
            if self.at("where"):
                self.advance()
                eqs = []
                while self.peek().kind == "ident" and self.at("=", 1):
                    eq_name = self.advance().text
                    self.advance()
                    eqs.append((eq_name, self.usage()))
                if not eqs:
                    self.error("expected usage equation after 'where'")
                where = tuple(eqs)
            self.expect(";")
        fields, methods = [], []
        diags = []
        while not self.at("}"):
            member = self.member(name)
            group = fields if isinstance(member, S.FieldDecl) else methods
            if any(m.name == member.name for m in group):
                what = "field" if group is fields else "method"
                diags.append(Diagnostic(f"duplicate-{what}", f"{what} {member.name} is declared twice in {name}", member.span))
            group.append(member)
        self.expect("}")
        if diags:
            raise ParseError(diags)
        return S.ClassDecl(name, usage, where, tuple(fields), tuple(methods), span=self.span_from(start))

    def member(self, class_name: str):
        start = self.peek()
        sync = False
        if self.at("sync"):
            self.advance()
            sync = True
        if self.peek().kind == "ident" and self.peek().text == class_name and self.at("(", 1):
            name = self.advance().text
            return self.method_rest(start, sync, S.VOID, name)
        typ = self.type()
        name = self.ident().text
        if self.at("("):
            return self.method_rest(start, sync, typ, name)
        if sync:
            self.error("'sync' only qualifies methods", start)
        self.expect(";")
        return S.FieldDecl(typ, name, span=self.span_from(start))

    def method_rest(self, start, sync, ret, name) -> S.MethodDecl:
        self.expect("(")
        if self.at(")"):
            ptype, pname = S.VOID, "_"
        else:
            ptype = self.type()
            pname = self.ident().text
        self.expect(")")
        body = self.block()
        return S.MethodDecl(name, ret, ptype, pname, body, sync, span=self.span_from(start))

    def starts_type(self, k: int = 0) -> bool:
        tok = self.peek(k)
        return (tok.kind == "kw" and tok.text in ("void", "int", "bool", "boolean")) or tok.kind == "ident"

    def type(self):
        tok = self.peek()
        if tok.kind == "kw" and tok.text in ("void", "int", "bool", "boolean"):
            self.advance()
            return {"void": S.VOID, "int": S.INT, "bool": S.BOOL, "boolean": S.BOOL}[tok.text]
        if tok.kind != "ident":
            self.error("expected a type")
        self.advance()
        usage = None
        if self.at("["):
            self.advance()
            usage = self.usage()
            self.expect("]")
        return S.ClassType(tok.text, usage)

    # -- usages --------------------------------------------------------------

    def usage(self):
        tok = self.peek()
        if self.at("lin") or self.at("un"):
            qual = self.advance().text
            self.expect("{")
            branches = []
            if not self.at("}"):
                while True:
                    m = self.ident().text
                    self.expect(";")
                    branches.append((m, self.usage()))
                    if not self.at("+"):
                        break
                    self.advance()
            self.expect("}")
            try:
                return Branch(qual, tuple(branches))
            except UsageError as exc:
                raise ParseError([Diagnostic("syntax-error", str(exc), self.span_from(tok))]) from None
        if self.at("end"):
            self.advance()
            return END
        if self.at("rec"):
            self.advance()
            var = self.ident().text
            self.expect(".")
            body = self.usage()
            if not isinstance(body, (Branch, Rec)):
                raise ParseError([Diagnostic("syntax-error", "recursive usage body must be a branch state", self.span_from(tok))])
            return Rec(var, body)
        if self.at("<"):
            self.advance()
            left = self.usage()
            self.expect("+")
            right = self.usage()
            self.expect(">")
            return Variant(left, right)
        if tok.kind == "ident":
            self.advance()
            return UVar(tok.text)
        self.error("expected a usage")

    # -- statements ----------------------------------------------------------

    def block(self):
        self.expect("{")
        body = self.stmts()
        self.expect("}")
        return body

    def stmts(self):
        out = []
        while not self.at("}") and self.peek().kind != "eof":
            while self.at(";"):
                self.advance()
            if self.at("}"):
                break
            out.append(self.stmt())
            if self.at(";"):
                continue
            if self.tokens[self.pos - 1].text == "}" and not self.at("}"):
                continue
            break
        if not out:
            return S.UnitLit(span=(self.peek().start, self.peek().start))
        return S.seq(*out)

    def stmt(self):
        start = self.peek()
        if self.at("if"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            if self.at("else"):
                self.advance()
                orelse = self.stmt() if self.at("if") else self.block()
            else:
                orelse = S.UNIT
            return S.If(cond, then, orelse, span=self.span_from(start))
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            body = self.block()
            return S.While(cond, body, span=self.span_from(start))
        if self.at("spawn"):
            self.advance()
            body = self.block() if self.at("{") else self.stmt()
            return S.Spawn(body, span=self.span_from(start))
        if self.at("{"):
            return self.block()
        if self.is_decl():
            typ = self.type()
            name = self.ident().text
            if self.at("="):
                self.advance()
                value = self.expr()
            else:
                value = S.NullLit(span=self.span_from(start))
            return S.Decl(typ, name, value, span=self.span_from(start))
        if start.kind == "ident" and self.at("=", 1):
            self.advance()
            self.advance()
            return S.Assign(start.text, self.expr(), span=self.span_from(start))
        if (start.kind == "ident" or self.at("this")) and self.at(".", 1) and self.peek(2).kind == "ident" and self.at("=", 3):
            obj = S.This(span=(start.start, start.end)) if self.at("this") else S.Var(start.text, span=(start.start, start.end))
            self.advance()
            self.advance()
            name = self.advance().text
            self.advance()
            return S.FieldAssign(obj, name, self.expr(), span=self.span_from(start))
        return self.expr()

    def is_decl(self) -> bool:
        tok = self.peek()
        if tok.kind == "kw" and tok.text in ("void", "int", "bool", "boolean"):
            return True
        return tok.kind == "ident" and (self.peek(1).kind == "ident" or self.at("[", 1))

    # -- expressions ---------------------------------------------------------

    _LEVELS = [("||",), ("&&",), ("==", "!="), ("<", "<=", ">", ">="), ("+", "-"), ("*", "/")]

    def expr(self, level: int = 0):
        if level == len(self._LEVELS):
            return self.unary()
        start = self.peek()
        left = self.expr(level + 1)
        while self.peek().kind == "op" and self.peek().text in self._LEVELS[level]:
            op = self.advance().text
            right = self.expr(level + 1)
            left = S.BinOp(op, left, right, span=self.span_from(start))
        return left

    def unary(self):
        start = self.peek()
        if self.at("!"):
            self.advance()
            return S.Not(self.unary(), span=self.span_from(start))
        if self.at("-") and self.peek(1).kind == "int":
            self.advance()
            n = int(self.advance().text)
            return S.IntLit(-n, span=self.span_from(start))
        return self.primary()

    def args(self):
        self.expect("(")
        if self.at(")"):
            tok = self.advance()
            return S.UnitLit(span=(tok.start, tok.start)), True
        arg = self.expr()
        self.expect(")")
        return arg, False

    def primary(self):
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return S.IntLit(int(tok.text), span=(tok.start, tok.end))
        if tok.kind == "kw" and tok.text in ("true", "false", "unit", "null"):
            self.advance()
            sp = (tok.start, tok.end)
            if tok.text == "unit":
                return S.UnitLit(span=sp)
            if tok.text == "null":
                return S.NullLit(span=sp)
            return S.BoolLit(tok.text == "true", span=sp)
        if self.at("("):
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if self.at("new"):
            self.advance()
            cls = self.ident().text
            arg, bare = self.args()
            return S.New(cls, arg, bare=bare, span=self.span_from(tok))
        if self.at("this") or tok.kind == "ident":
            self.advance()
            base = S.This(span=(tok.start, tok.end)) if tok.text == "this" else S.Var(tok.text, span=(tok.start, tok.end))
            if not self.at("."):
                return base
            self.advance()
            name = self.ident().text
            if self.at("("):
                arg, _ = self.args()
                return S.Call(base, name, arg, span=self.span_from(tok))
            ref = S.FieldRef(base, name, span=self.span_from(tok))
            if not self.at("."):
                return ref
            self.advance()
            meth = self.ident().text
            if not self.at("("):
                self.error("expected '(' after method name")
            arg, _ = self.args()
            return S.Call(ref, meth, arg, span=self.span_from(tok))
        self.error("expected an expression")


def parse_program(source: str) -> S.Program:
    """Parse source text; raises :class:`ParseError` with diagnostics."""
    return Parser(source).program()


def parse_usage(source: str):
    p = Parser(source)
    u = p.usage()
    if p.peek().kind != "eof":
        p.error("trailing input after usage")
    return u


def parse_stmt(source: str):
    p = Parser(source)
    s = p.stmts()
    if p.peek().kind != "eof":
        p.error("trailing input after statement")
    return s


def parse_expr(source: str):
    p = Parser(source)
    e = p.expr()
    if p.peek().kind != "eof":
        p.error("trailing input after expression")
    return e
