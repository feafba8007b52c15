"""Template evaluation: bind a session context, walk the tree, emit lines.

Rendering keeps a virtual time cursor.  ``#waitabs`` sets it to an absolute
time (never backward); every command advances it by its wait seconds.  The
``{next_addr}`` substitution pops the head of the playback queue, and the
``t_cursor`` / ``addr_count`` built-ins let loop conditions bound playback
by LOS5 or by data exhaustion, whichever comes first.

Rendering is pure: identical (program, context) pairs produce identical
bytes on any platform.
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field

from ..astro.epoch import Epoch
from ..errors import (
    CmdGenerationError,
    EmptyQueuePop,
    LoopCapExceeded,
    MissingAbsoluteWait,
    OverlappingSessions,
    TimeCursorRegression,
    TypeMismatch,
    UnboundVariable,
)
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

LOOP_CAP = 10_000
_HEX_RE = re.compile(r"^[0-9A-Fa-f]{2,16}$")


@dataclass
class SessionContext:
    """Variable bindings plus the ordered playback address queue."""
    bindings: dict
    playback_queue: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.playback_queue)) != len(self.playback_queue):
            raise ValueError("playback queue addresses must be unique")


@dataclass
class RenderResult:
    lines: list[str]
    final_cursor: Epoch | None
    first_abs_time: Epoch | None
    popped_addresses: list[str]


@dataclass
class CmdSection:
    session_id: object
    template_type: str
    t_start: Epoch
    lines: list[str]
    popped_addresses: list[str]


@dataclass
class CmdFile:
    sections: list[CmdSection]
    total_duration_s: float

    @property
    def lines(self) -> list[str]:
        out = []
        for section in self.sections:
            out.extend(section.lines)
        return out

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n"

    @property
    def popped_by_session(self) -> dict:
        return {s.session_id: s.popped_addresses for s in self.sections
                if s.popped_addresses}


def format_value(value) -> str:
    if isinstance(value, Epoch):
        return value.round_to_second().isoformat()
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


class _Renderer:
    def __init__(self, program: TemplateProgram, ctx: SessionContext,
                 initial_cursor: Epoch | None = None):
        self.program = program
        self.ctx = ctx
        self.queue = deque(ctx.playback_queue)
        self.cursor = initial_cursor
        self.first_abs: Epoch | None = None
        self.popped: list[str] = []
        self.lines: list[str] = []

    # --- expression evaluation ------------------------------------------

    def lookup(self, var: Var):
        if var.name == "next_addr":
            if not self.queue:
                raise EmptyQueuePop("playback queue is empty")
            addr = self.queue.popleft()
            self.popped.append(addr)
            return addr
        if var.name == "t_cursor":
            if self.cursor is None:
                raise UnboundVariable("t_cursor")
            value = self.cursor
        elif var.name == "addr_count":
            value = len(self.queue)
        elif var.name in self.ctx.bindings:
            value = self.ctx.bindings[var.name]
        else:
            raise UnboundVariable(var.name)
        if var.offset_s:
            if not isinstance(value, Epoch):
                raise TypeMismatch(
                    f"offset {var.offset_s:+d}s applies to time values, "
                    f"but {var.name!r} is {type(value).__name__}")
            value = value + float(var.offset_s)
        return value

    def eval(self, expr):
        if isinstance(expr, Literal):
            return expr.value
        if isinstance(expr, Var):
            return self.lookup(expr)
        if isinstance(expr, Group):
            return self.eval(expr.item)
        if isinstance(expr, Not):
            return not self.eval_bool(expr.item, "not")
        if isinstance(expr, And):
            return all(self.eval_bool(i, "and") for i in expr.items)
        if isinstance(expr, Or):
            return any(self.eval_bool(i, "or") for i in expr.items)
        if isinstance(expr, Compare):
            return self.compare(expr)
        raise TypeError(f"unknown expression node {expr!r}")

    def eval_bool(self, expr, where: str) -> bool:
        value = self.eval(expr)
        if not isinstance(value, bool):
            raise TypeMismatch(f"{where} needs a boolean, got {value!r}")
        return value

    def compare(self, expr: Compare) -> bool:
        lhs = self.eval(expr.lhs)
        rhs = self.eval(expr.rhs)
        numeric = (int, float)
        if isinstance(lhs, bool) or isinstance(rhs, bool):
            if expr.op in ("==", "!="):
                return (lhs == rhs) if expr.op == "==" else (lhs != rhs)
            raise TypeMismatch(f"ordering comparison on booleans: {expr.to_source()}")
        if isinstance(lhs, str) or isinstance(rhs, str):
            if not (isinstance(lhs, str) and isinstance(rhs, str)):
                raise TypeMismatch(f"cannot compare {lhs!r} with {rhs!r}")
            if expr.op in ("==", "!="):
                return (lhs == rhs) if expr.op == "==" else (lhs != rhs)
            raise TypeMismatch(f"strings support only equality: {expr.to_source()}")
        if isinstance(lhs, Epoch) != isinstance(rhs, Epoch):
            raise TypeMismatch(
                f"cannot compare a time with a number: {expr.to_source()}")
        if isinstance(lhs, Epoch):
            lhs, rhs = lhs.ms, rhs.ms
        if not (isinstance(lhs, numeric) and isinstance(rhs, numeric)):
            raise TypeMismatch(f"cannot compare {lhs!r} with {rhs!r}")
        return {
            "<": lhs < rhs, "<=": lhs <= rhs, ">": lhs > rhs,
            ">=": lhs >= rhs, "==": lhs == rhs, "!=": lhs != rhs,
        }[expr.op]

    # --- emission ------------------------------------------------------

    def render_text(self, text: Text) -> str:
        return "".join(p if isinstance(p, str) else format_value(self.lookup(p))
                       for p in text.parts)

    def run(self) -> RenderResult:
        self.visit_block(self.program.nodes)
        return RenderResult(self.lines, self.cursor, self.first_abs, self.popped)

    def visit_block(self, nodes):
        for node in nodes:
            self.visit(node)

    def visit(self, node):
        if isinstance(node, Comment):
            self.lines.append(self.render_text(node.text))
        elif isinstance(node, AbsWait):
            value = self.eval(node.expr)
            if not isinstance(value, Epoch):
                raise TypeMismatch(
                    f"line {node.line}: #waitabs needs a time, got {value!r}")
            value = value.round_to_second()
            if self.cursor is not None and value < self.cursor:
                raise TimeCursorRegression(
                    f"line {node.line}: absolute wait {value} precedes the "
                    f"cursor at {self.cursor}")
            self.cursor = value
            if self.first_abs is None:
                self.first_abs = value
            self.lines.append(f"WAITABS {value.isoformat()} ; {self.render_text(node.label)}")
        elif isinstance(node, Command):
            hex_code = self.render_text(node.hex_code)
            if not _HEX_RE.match(hex_code):
                raise TypeMismatch(
                    f"line {node.line}: {hex_code!r} is not 2-16 hex digits "
                    "after substitution")
            wait = node.wait if isinstance(node.wait, int) else self.eval(node.wait)
            if isinstance(wait, bool) or not isinstance(wait, (int, float)):
                raise TypeMismatch(f"line {node.line}: wait must be a number")
            if isinstance(wait, float):
                if wait != int(wait):
                    raise TypeMismatch(
                        f"line {node.line}: wait must be a whole number of seconds")
                wait = int(wait)
            if wait < 0:
                raise TypeMismatch(f"line {node.line}: wait must be >= 0")
            if self.cursor is None:
                raise MissingAbsoluteWait(
                    f"line {node.line}: command emitted before any absolute wait")
            name = self.render_text(node.name)
            self.lines.append(f"{hex_code} {wait} ; {name}")
            self.cursor = self.cursor + float(wait)
        elif isinstance(node, If):
            for expr, block in node.branches:
                if expr is None or self.eval_bool(expr, f"line {node.line}: #if"):
                    self.visit_block(block)
                    break
        elif isinstance(node, While):
            iterations = 0
            while True:
                if iterations >= LOOP_CAP:
                    raise LoopCapExceeded(
                        f"line {node.line}: loop exceeded {LOOP_CAP} iterations")
                if not self.eval_bool(node.cond, f"line {node.line}: #while"):
                    break
                self.visit_block(node.body)
                iterations += 1
        else:
            raise TypeError(f"unknown node {node!r}")


def render_session(program: TemplateProgram, ctx: SessionContext,
                   initial_cursor: Epoch | None = None) -> RenderResult:
    """Evaluate one template against one session's bindings."""
    return _Renderer(program, ctx, initial_cursor).run()


def generate_cmd_file(sessions, templates, contexts) -> CmdFile:
    """Merge per-session renders into one upload file.

    ``sessions`` is an ordered list of (session_id, template_type, t_start)
    sorted by start time; ``templates`` maps template type to a parsed
    program, ``contexts`` maps session_id to its :class:`SessionContext`.
    One monotone time cursor spans the file: a session whose absolute wait
    precedes the previous session's final cursor is an overlap error.
    """
    starts = [s[2] for s in sessions]
    if starts != sorted(starts):
        raise ValueError("sessions must be ordered by start time")
    sections: list[CmdSection] = []
    running_cursor: Epoch | None = None
    first_abs: Epoch | None = None
    for session_id, template_type, t_start in sessions:
        program = templates[template_type]
        ctx = contexts[session_id]
        try:
            result = render_session(program, ctx)
        except OverlappingSessions:
            raise
        except CmdGenerationError:
            raise
        except Exception as exc:
            raise CmdGenerationError(
                f"session {session_id} ({template_type}): {exc}", session_id,
                exc if isinstance(exc, (TypeMismatch, UnboundVariable)) else None
            ) from exc
        if result.first_abs_time is None:
            raise CmdGenerationError(
                f"session {session_id} ({template_type}): template emits no "
                "absolute wait", session_id)
        if running_cursor is not None and result.first_abs_time < running_cursor:
            raise OverlappingSessions(
                f"session {session_id} starts at {result.first_abs_time}, before "
                f"the previous session's final cursor {running_cursor}", session_id)
        header = (f"// === {session_id} {template_type} "
                  f"{t_start.round_to_second().isoformat()} ===")
        sections.append(CmdSection(session_id, template_type, t_start,
                                   [header, *result.lines], result.popped_addresses))
        running_cursor = result.final_cursor
        if first_abs is None:
            first_abs = result.first_abs_time
    duration = 0.0
    if sections and running_cursor is not None and first_abs is not None:
        duration = running_cursor - first_abs
    return CmdFile(sections, duration)
