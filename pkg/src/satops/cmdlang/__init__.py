"""The command-template language: parse, lint, render, merge."""

from .ast import TemplateProgram
from .lint import Diagnostic, lint_template
from .parser import parse_expression, parse_template, pretty_print
from .render import (
    CmdFile,
    CmdSection,
    RenderResult,
    SessionContext,
    format_value,
    generate_cmd_file,
    render_session,
)

TEMPLATE_TYPES = ("routine", "xband_download", "smi_mfc", "hpt_mfc")

__all__ = [
    "CmdFile",
    "CmdSection",
    "Diagnostic",
    "RenderResult",
    "SessionContext",
    "TEMPLATE_TYPES",
    "TemplateProgram",
    "format_value",
    "generate_cmd_file",
    "lint_template",
    "parse_expression",
    "parse_template",
    "pretty_print",
    "render_session",
]


def builtin_template_source(name: str) -> str:
    from importlib import resources

    return resources.files("satops").joinpath(f"templates/{name}.cmdt").read_text("utf-8")


def load_builtin_templates() -> dict[str, TemplateProgram]:
    """The four shipped templates, parsed, keyed by type name."""
    return {name: parse_template(builtin_template_source(name))
            for name in TEMPLATE_TYPES}
