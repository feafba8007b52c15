"""Static diagnostics for templates: unbound names, constant conditions,
and loops with no termination-relevant variable in their condition."""
from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    AbsWait,
    And,
    Command,
    Comment,
    Compare,
    Group,
    If,
    Literal,
    Not,
    Or,
    TemplateProgram,
    Var,
    While,
)

BUILTINS = {"t_cursor", "addr_count", "next_addr"}


@dataclass(frozen=True)
class Diagnostic:
    severity: str          # "error" | "warning"
    line: int
    message: str


def _expr_vars(expr) -> set[str]:
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, (And, Or)):
        out: set[str] = set()
        for item in expr.items:
            out |= _expr_vars(item)
        return out
    if isinstance(expr, Not):
        return _expr_vars(expr.item)
    if isinstance(expr, Group):
        return _expr_vars(expr.item)
    if isinstance(expr, Compare):
        return _expr_vars(expr.lhs) | _expr_vars(expr.rhs)
    return set()


def lint_template(program: TemplateProgram, declared_names: set[str]) -> list[Diagnostic]:
    known = set(declared_names) | BUILTINS
    out: list[Diagnostic] = []

    def check_names(names, line):
        for name in sorted(names - known):
            out.append(Diagnostic("error", line, f"unbound variable '{name}'"))

    for node in program.walk():
        if isinstance(node, Comment):
            check_names({v.name for v in node.text.slot_vars}, node.line)
        elif isinstance(node, Command):
            names = {v.name for v in node.hex_code.slot_vars}
            names |= {v.name for v in node.name.slot_vars}
            if not isinstance(node.wait, int):
                names |= _expr_vars(node.wait)
            check_names(names, node.line)
        elif isinstance(node, AbsWait):
            names = _expr_vars(node.expr)
            names |= {v.name for v in node.label.slot_vars}
            check_names(names, node.line)
        elif isinstance(node, If):
            for expr, _ in node.branches:
                if expr is None:
                    continue
                check_names(_expr_vars(expr), node.line)
                if not _expr_vars(expr):
                    out.append(Diagnostic("warning", node.line,
                                          "constant condition: branch is unreachable "
                                          "or always taken"))
        elif isinstance(node, While):
            names = _expr_vars(node.cond)
            check_names(names, node.line)
            if not names:
                out.append(Diagnostic("warning", node.line,
                                      "constant loop condition"))
            if not names & {"addr_count", "t_cursor"}:
                out.append(Diagnostic("warning", node.line,
                                      "loop condition uses neither addr_count nor "
                                      "t_cursor: termination is not evident"))
    return out
