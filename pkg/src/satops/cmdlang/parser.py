"""Parser and pretty-printer for command templates.

Line grammar:

    // comment text
    <HEX> <WAIT> ; <NAME>          one spacecraft command
    #waitabs {time-expr} [; LABEL] absolute-time wait
    #if EXPR / #elif EXPR / #else / #endif
    #while EXPR / #endwhile

HEX is 2-16 hex digits (substitution slots allowed, checked after
substitution), WAIT is a non-negative integer or a braced expression, and
NAME is free text.  ``{name}``, ``{name+N}`` and ``{name-N}`` slots may
appear anywhere in comment and command text.  Expressions combine
comparisons over numbers, times, and strings with and/or/not.
"""
from __future__ import annotations

import re

from ..errors import TemplateSyntaxError, UnclosedBlock, UnknownDirective
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
    Text,
    Var,
    While,
)

_SLOT_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)([+-]\d+)?\}")
_HEX_RE = re.compile(r"^[0-9A-Fa-f]{2,16}$")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUM_RE = re.compile(r"\d+(\.\d+)?")

_COMPARE_OPS = ("<=", ">=", "==", "!=", "<", ">")


def parse_text(raw: str, line_no: int) -> Text:
    parts: list = []
    pos = 0
    for m in _SLOT_RE.finditer(raw):
        if m.start() > pos:
            parts.append(raw[pos:m.start()])
        offset = int(m.group(2)) if m.group(2) else 0
        parts.append(Var(m.group(1), offset, braced=True))
        pos = m.end()
    if pos < len(raw):
        parts.append(raw[pos:])
    for p in parts:
        if isinstance(p, str) and ("{" in p or "}" in p):
            raise TemplateSyntaxError(f"malformed substitution in {raw!r}", line_no,
                                      raw.find("{") + 1 if "{" in raw else 1)
    return Text(tuple(parts))


class _ExprParser:
    def __init__(self, text: str, line_no: int):
        self.text = text
        self.pos = 0
        self.line_no = line_no

    def error(self, message: str):
        raise TemplateSyntaxError(message, self.line_no, self.pos + 1)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek_word(self) -> str | None:
        self.skip_ws()
        m = _IDENT_RE.match(self.text, self.pos)
        return m.group(0) if m else None

    def take_word(self) -> str:
        m = _IDENT_RE.match(self.text, self.pos)
        self.pos = m.end()
        return m.group(0)

    def parse(self):
        expr = self.parse_or()
        if not self.at_end():
            self.error(f"unexpected trailing input {self.text[self.pos:]!r}")
        return expr

    def parse_or(self):
        items = [self.parse_and()]
        while self.peek_word() == "or":
            self.take_word()
            items.append(self.parse_and())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def parse_and(self):
        items = [self.parse_not()]
        while self.peek_word() == "and":
            self.take_word()
            items.append(self.parse_not())
        return items[0] if len(items) == 1 else And(tuple(items))

    def parse_not(self):
        if self.peek_word() == "not":
            self.take_word()
            return Not(self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self):
        lhs = self.parse_operand()
        self.skip_ws()
        for op in _COMPARE_OPS:
            if self.text.startswith(op, self.pos):
                self.pos += len(op)
                return Compare(op, lhs, self.parse_operand())
        return lhs

    def parse_operand(self):
        self.skip_ws()
        if self.pos >= len(self.text):
            self.error("expected an operand")
        ch = self.text[self.pos]
        if ch == "(":
            self.pos += 1
            inner = self.parse_or()
            self.skip_ws()
            if self.pos >= len(self.text) or self.text[self.pos] != ")":
                self.error("missing ')'")
            self.pos += 1
            return Group(inner)
        if ch == "{":
            m = _SLOT_RE.match(self.text, self.pos)
            if not m:
                self.error("malformed substitution")
            self.pos = m.end()
            offset = int(m.group(2)) if m.group(2) else 0
            return Var(m.group(1), offset, braced=True)
        if ch in "'\"":
            end = self.text.find(ch, self.pos + 1)
            if end < 0:
                self.error("unterminated string")
            value = self.text[self.pos + 1:end]
            self.pos = end + 1
            return Literal(value)
        m = _NUM_RE.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            raw = m.group(0)
            return Literal(float(raw) if "." in raw else int(raw))
        word = self.peek_word()
        if word in ("and", "or", "not", None):
            self.error("expected an operand")
        self.take_word()
        if word == "true":
            return Literal(True)
        if word == "false":
            return Literal(False)
        return Var(word)


def parse_expression(text: str, line_no: int = 0):
    return _ExprParser(text, line_no).parse()


def parse_template(text: str) -> TemplateProgram:
    """Parse UTF-8 template source into a program tree."""
    root: list = []
    # stack of (kind, node, current-block) where block is the list to append to
    stack: list[tuple[str, object, list]] = []

    def current_block() -> list:
        return stack[-1][2] if stack else root

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("//"):
            current_block().append(Comment(parse_text(line, line_no), line_no))
            continue
        if line.startswith("#"):
            word, _, rest = line.partition(" ")
            rest = rest.strip()
            if word == "#waitabs":
                expr_text, _, label = rest.partition(";")
                expr_text = expr_text.strip()
                if not expr_text:
                    raise TemplateSyntaxError("#waitabs needs a time expression", line_no)
                node = AbsWait(parse_expression(expr_text, line_no),
                               parse_text(label.strip() or "ABS_WAIT", line_no), line_no)
                current_block().append(node)
            elif word == "#if":
                node = If([(parse_expression(rest, line_no), [])], line_no)
                current_block().append(node)
                stack.append(("if", node, node.branches[0][1]))
            elif word == "#elif":
                if not stack or stack[-1][0] != "if":
                    raise TemplateSyntaxError("#elif without #if", line_no)
                node = stack[-1][1]
                if node.branches[-1][0] is None:
                    raise TemplateSyntaxError("#elif after #else", line_no)
                node.branches.append((parse_expression(rest, line_no), []))
                stack[-1] = ("if", node, node.branches[-1][1])
            elif word == "#else":
                if not stack or stack[-1][0] != "if":
                    raise TemplateSyntaxError("#else without #if", line_no)
                node = stack[-1][1]
                if node.branches[-1][0] is None:
                    raise TemplateSyntaxError("duplicate #else", line_no)
                node.branches.append((None, []))
                stack[-1] = ("if", node, node.branches[-1][1])
            elif word == "#endif":
                if not stack or stack[-1][0] != "if":
                    raise TemplateSyntaxError("#endif without #if", line_no)
                stack.pop()
            elif word == "#while":
                node = While(parse_expression(rest, line_no), [], line_no)
                current_block().append(node)
                stack.append(("while", node, node.body))
            elif word == "#endwhile":
                if not stack or stack[-1][0] != "while":
                    raise TemplateSyntaxError("#endwhile without #while", line_no)
                stack.pop()
            else:
                raise UnknownDirective(f"line {line_no}: unknown directive {word!r}")
            continue

        # command line: HEX WAIT ; NAME
        left, sep, name = line.partition(";")
        if not sep:
            raise TemplateSyntaxError(
                "command line needs '; NAME' after the wait field", line_no)
        fields = left.split()
        if len(fields) != 2:
            raise TemplateSyntaxError(
                f"expected '<HEX> <WAIT>' before ';', got {left.strip()!r}", line_no)
        hex_text = parse_text(fields[0], line_no)
        if hex_text.is_literal() and not _HEX_RE.match(fields[0]):
            raise TemplateSyntaxError(
                f"{fields[0]!r} is not 2-16 hex digits", line_no)
        wait_raw = fields[1]
        if wait_raw.startswith("{"):
            m = re.fullmatch(r"\{(.+)\}", wait_raw)
            if not m:
                raise TemplateSyntaxError(f"malformed wait field {wait_raw!r}", line_no)
            wait = parse_expression(m.group(1), line_no)
        else:
            if not wait_raw.isdigit():
                raise TemplateSyntaxError(
                    f"wait must be a non-negative integer or {{expr}}, got {wait_raw!r}",
                    line_no)
            wait = int(wait_raw)
        current_block().append(Command(hex_text, wait, parse_text(name.strip(), line_no),
                                       line_no))

    if stack:
        kind, node, _ = stack[-1]
        raise UnclosedBlock(f"#{kind} opened on line {node.line} is never closed")
    return TemplateProgram(root)


def pretty_print(program: TemplateProgram) -> str:
    """Canonical source for a program; parses back to an equal tree."""
    out: list[str] = []

    def emit(nodes, depth):
        pad = "  " * depth
        for node in nodes:
            if isinstance(node, Comment):
                out.append(pad + node.text.to_source())
            elif isinstance(node, Command):
                wait = node.wait if isinstance(node.wait, int) \
                    else "{%s}" % node.wait.to_source()
                out.append(f"{pad}{node.hex_code.to_source()} {wait} ; "
                           f"{node.name.to_source()}")
            elif isinstance(node, AbsWait):
                out.append(f"{pad}#waitabs {node.expr.to_source()} ; {node.label.to_source()}")
            elif isinstance(node, If):
                for k, (expr, block) in enumerate(node.branches):
                    if k == 0:
                        out.append(f"{pad}#if {expr.to_source()}")
                    elif expr is None:
                        out.append(f"{pad}#else")
                    else:
                        out.append(f"{pad}#elif {expr.to_source()}")
                    emit(block, depth + 1)
                out.append(f"{pad}#endif")
            elif isinstance(node, While):
                out.append(f"{pad}#while {node.cond.to_source()}")
                emit(node.body, depth + 1)
                out.append(f"{pad}#endwhile")
    emit(program.nodes, 0)
    return "\n".join(out) + "\n"
