"""Syntax tree for the command-template language.

A template is a line-oriented program: command lines, comments, absolute
waits, conditionals, and loops.  Substitution slots (``{name}`` with an
optional ``+N``/``-N`` second offset) appear inside line text and inside
expressions; both forms parse to :class:`Var`.

Node equality is structural (source line numbers are carried for error
reporting but excluded from comparisons), so parse -> pretty-print ->
parse is the identity on trees.
"""
from __future__ import annotations

from dataclasses import dataclass, field


# --- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    value: object          # int | float | str | bool

    def to_source(self) -> str:
        if isinstance(self.value, str):
            return f"'{self.value}'"
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    name: str
    offset_s: int = 0      # +N/-N seconds, meaningful for time values
    braced: bool = False   # written as {name} rather than a bare identifier

    def to_source(self) -> str:
        if self.braced:
            if self.offset_s > 0:
                return "{%s+%d}" % (self.name, self.offset_s)
            if self.offset_s < 0:
                return "{%s-%d}" % (self.name, -self.offset_s)
            return "{%s}" % self.name
        return self.name


@dataclass(frozen=True)
class Compare:
    op: str                # < <= > >= == !=
    lhs: object
    rhs: object

    def to_source(self) -> str:
        return f"{self.lhs.to_source()} {self.op} {self.rhs.to_source()}"


@dataclass(frozen=True)
class Not:
    item: object

    def to_source(self) -> str:
        return f"not {self.item.to_source()}"


@dataclass(frozen=True)
class And:
    items: tuple

    def to_source(self) -> str:
        return " and ".join(i.to_source() for i in self.items)


@dataclass(frozen=True)
class Or:
    items: tuple

    def to_source(self) -> str:
        return " or ".join(
            f"({i.to_source()})" if isinstance(i, And) else i.to_source()
            for i in self.items)


@dataclass(frozen=True)
class Group:
    """Explicit parentheses, kept so pretty-printing round-trips."""
    item: object

    def to_source(self) -> str:
        return f"({self.item.to_source()})"


# --- line text with substitution slots ------------------------------------------

@dataclass(frozen=True)
class Text:
    """Literal text interleaved with Var slots, e.g. ``D34{next_addr}``."""
    parts: tuple           # str | Var

    def to_source(self) -> str:
        return "".join(p if isinstance(p, str) else p.to_source() for p in self.parts)

    @property
    def slot_vars(self) -> list[Var]:
        return [p for p in self.parts if isinstance(p, Var)]

    def is_literal(self) -> bool:
        return not self.slot_vars


# --- statements ----------------------------------------------------------------

@dataclass
class Comment:
    text: Text
    line: int = field(default=0, compare=False)


@dataclass
class Command:
    hex_code: Text
    wait: object           # int literal or an expression node
    name: Text
    line: int = field(default=0, compare=False)


@dataclass
class AbsWait:
    expr: object
    label: Text = field(default_factory=lambda: Text(("ABS_WAIT",)))
    line: int = field(default=0, compare=False)


@dataclass
class If:
    branches: list         # [(expr-or-None, [nodes])]; None = else branch
    line: int = field(default=0, compare=False)


@dataclass
class While:
    cond: object
    body: list
    line: int = field(default=0, compare=False)


@dataclass
class TemplateProgram:
    nodes: list

    def walk(self):
        """Every node in document order, including nested blocks."""
        def visit(nodes):
            for node in nodes:
                yield node
                if isinstance(node, If):
                    for _, block in node.branches:
                        yield from visit(block)
                elif isinstance(node, While):
                    yield from visit(node.body)
        yield from visit(self.nodes)
