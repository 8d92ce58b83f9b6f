"""
The <think>/<answer> response template: parsing, code extraction, rendering.

Default matching accepts horizontal whitespace around each tag but needs
every tag on its own line and nothing except whitespace outside the two
blocks. Each of the four tags must appear exactly once.
"""

import re
from dataclasses import dataclass
from typing import Optional

TAGS = ('<think>', '</think>', '<answer>', '</answer>')

_BODY = r'<think>[ \t]*\n(.*?)\n[ \t]*</think>[ \t]*\n\s*<answer>[ \t]*\n(.*?)\n[ \t]*</answer>\s*$'
_RELAXED = re.compile(r'^\s*' + _BODY, re.DOTALL)
_PREAMBLE = re.compile(r'^(?:[\s\S]*?\n)?[ \t]*' + _BODY, re.DOTALL)
_STRICT = re.compile(r'^\s*<think>\n(.*?)\n</think>\n<answer>\n(.*?)\n</answer>\s*$', re.DOTALL)

_FENCE = re.compile(r'```[^\n`]*\n(.*?)\n?```', re.DOTALL)
_MODULE_SPAN = re.compile(r'\bmodule\b.*?\bendmodule\b', re.DOTALL)


@dataclass(frozen=True)
class FormatOptions:
    strict_newlines: bool = False
    allow_preamble: bool = False
    lenient_extraction: bool = False

    def pattern(self):
        if self.strict_newlines:
            return _STRICT
        return _PREAMBLE if self.allow_preamble else _RELAXED


@dataclass(frozen=True)
class ParsedResponse:
    raw: str
    think_text: Optional[str] = None
    answer_text: Optional[str] = None
    code: Optional[str] = None
    format_ok: bool = False


def _find_code(text):
    fenced = _FENCE.search(text)
    if fenced:
        return fenced.group(1)
    span = _MODULE_SPAN.search(text)
    return span.group(0) if span else None


def extract_verilog(parsed, options=None):
    """Verilog inside the answer: first fenced block, else a module...endmodule span."""
    options = options or FormatOptions()
    if parsed.answer_text is not None:
        code = _find_code(parsed.answer_text)
        if code is not None or parsed.format_ok:
            return code
    if options.lenient_extraction and not parsed.format_ok:
        return _find_code(parsed.raw)
    return None


def parse_response(raw, options=None):
    """Total and deterministic: malformed text gives format_ok=False, never an error."""
    options = options or FormatOptions()
    raw = raw or ''
    parsed = ParsedResponse(raw=raw)
    if all(raw.count(tag) == 1 for tag in TAGS):
        match = options.pattern().match(raw)
        if match:
            think, answer = match.group(1), match.group(2)
            parsed = ParsedResponse(
                raw=raw,
                think_text=think,
                answer_text=answer,
                format_ok=bool(think.strip()) and bool(answer.strip()),
            )
    code = extract_verilog(parsed, options)
    return ParsedResponse(parsed.raw, parsed.think_text, parsed.answer_text, code, parsed.format_ok)


def render_response(think, answer):
    return f"<think>\n{think}\n</think>\n<answer>\n{answer}\n</answer>"


def render_code_answer(code):
    return f"```verilog\n{code.strip()}\n```"


def format_reward(parsed):
    return 1 if parsed.format_ok else 0
