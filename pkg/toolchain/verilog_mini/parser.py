"""
pyparsing grammar for the combinational Verilog subset.

Accepted: one module, ANSI or non-ANSI port lists, `input`/`output`/`wire`
declarations with descending `[msb:lsb]` ranges, continuous `assign`
statements, the operators ~ * + - << >> < <= > >= == != & ^ | ?:,
concatenation, replication, decimal and sized binary/hex/decimal literals.
Everything else is reported as a VerilogSyntaxError with line and column.
"""

import re
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

from pyparsing import (
    Forward,
    Group,
    Keyword,
    MatchFirst,
    OpAssoc,
    Opt,
    ParseBaseException,
    ParseFatalException,
    ParserElement,
    Regex,
    StringEnd,
    Suppress,
    ZeroOrMore,
    col,
    cpp_style_comment,
    infix_notation,
    lineno,
    one_of,
)

from ..exceptions import VerilogSyntaxError
from .nodes import UNSIZED_WIDTH, Assign, Binary, Concat, Const, MiniModule, Ref, Replicate, Signal, Ternary, Unary
from .semantics import check_module

ParserElement.enable_packrat()

KEYWORDS = ('module', 'endmodule', 'input', 'output', 'wire', 'assign')

# Recognised so the error names the construct instead of a generic token.
UNSUPPORTED = (
    'always', 'initial', 'reg', 'integer', 'real', 'begin', 'end', 'if', 'else',
    'case', 'casez', 'casex', 'endcase', 'posedge', 'negedge', 'parameter',
    'localparam', 'function', 'endfunction', 'task', 'endtask', 'generate',
    'endgenerate', 'for', 'while', 'genvar', 'signed', 'inout', 'tri', 'supply0',
    'supply1', 'defparam', 'specify',
)

_BASES = {'b': 2, 'h': 16, 'd': 10}
_SIZED_RE = re.compile(r"(\d+)\s*'\s*([bBhHdD])\s*([0-9a-fA-F_]+)")
_BASED_RE = re.compile(r"'\s*([bBhHdD])\s*([0-9a-fA-F_]+)")

# pyparsing's packrat cache is shared process-wide
_parse_lock = threading.Lock()


@dataclass(frozen=True)
class _Name:
    text: str
    loc: int


@dataclass(frozen=True)
class _Range:
    msb: int
    lsb: int
    loc: int


@dataclass(frozen=True)
class _Select:
    msb: int
    lsb: int


@dataclass(frozen=True)
class _HeaderPort:
    name: _Name
    direction: Optional[str]
    rng: Optional[_Range]


@dataclass(frozen=True)
class _PortDecl:
    direction: str
    rng: Optional[_Range]
    names: Tuple[_Name, ...]


@dataclass(frozen=True)
class _WireDecl:
    rng: Optional[_Range]
    items: Tuple[Tuple[_Name, object], ...]


@dataclass(frozen=True)
class _Targets:
    refs: Tuple[Ref, ...]


@dataclass(frozen=True)
class _AssignStmt:
    assigns: Tuple[Assign, ...]


def _literal_value(s, loc, digits, base, text):
    try:
        return int(digits.replace('_', ''), _BASES[base.lower()])
    except ValueError:
        raise ParseFatalException(s, loc, f"invalid digits in literal {text!r}") from None


def _sized_literal(s, loc, toks):
    size, base, digits = _SIZED_RE.fullmatch(toks[0]).groups()
    size = int(size)
    if size == 0:
        raise ParseFatalException(s, loc, "zero-width literal")
    value = _literal_value(s, loc, digits, base, toks[0])
    return Const(value & ((1 << size) - 1), size, loc=loc)


def _based_literal(s, loc, toks):
    base, digits = _BASED_RE.fullmatch(toks[0]).groups()
    value = _literal_value(s, loc, digits, base, toks[0])
    return Const(value & ((1 << UNSIZED_WIDTH) - 1), None, loc=loc)


def _decimal_literal(s, loc, toks):
    value = int(toks[0].replace('_', ''))
    return Const(value & ((1 << UNSIZED_WIDTH) - 1), None, loc=loc)


def _ref(s, loc, toks):
    name = toks[0]
    if len(toks) == 1:
        return Ref(name.text, loc=name.loc)
    select = toks[1]
    return Ref(name.text, select.msb, select.lsb, loc=name.loc)


def _select(s, loc, toks):
    msb = toks[0]
    lsb = toks[1] if len(toks) > 1 else msb
    return _Select(msb, lsb)


def _replicate(s, loc, toks):
    count = toks[0]
    if count == 0:
        raise ParseFatalException(s, loc, "replication count must be positive")
    return Replicate(count, tuple(toks[1:]), loc=loc)


def _unary(s, loc, toks):
    op, operand = toks[0]
    return Unary(op, operand, loc=loc)


def _binary(s, loc, toks):
    items = toks[0]
    node = items[0]
    for i in range(1, len(items), 2):
        node = Binary(items[i], node, items[i + 1], loc=loc)
    return node


def _ternary(s, loc, toks):
    cond, _, then, _, other = toks[0]
    return Ternary(cond, then, other, loc=loc)


def _header_port(s, loc, toks):
    items = list(toks[0])
    direction = items.pop(0)
    rng = items.pop(0) if isinstance(items[0], _Range) else None
    return _HeaderPort(items[0], direction, rng)


def _port_decl(s, loc, toks):
    direction = toks[0]
    rng = toks[1] if isinstance(toks[1], _Range) else None
    names = tuple(t for t in toks[1:] if isinstance(t, _Name))
    return _PortDecl(direction, rng, names)


def _wire_decl(s, loc, toks):
    rng = toks[0] if isinstance(toks[0], _Range) else None
    items = []
    for group in toks[1 if rng else 0:]:
        group = list(group)
        items.append((group[0], group[1] if len(group) > 1 else None))
    return _WireDecl(rng, tuple(items))


def _assignment(s, loc, toks):
    target, expr = toks[0]
    refs = target.refs if isinstance(target, _Targets) else (target,)
    return Assign(refs, expr, loc=loc)


@lru_cache(maxsize=None)
def _grammar():
    LPAR, RPAR, LBRACK, RBRACK, LBRACE, RBRACE, COLON, SEMI, COMMA, EQ = map(Suppress, "()[]{}:;,=")
    MODULE, ENDMODULE, INPUT, OUTPUT, WIRE, ASSIGN = map(Keyword, KEYWORDS)

    reserved = MatchFirst(Keyword(k) for k in KEYWORDS + UNSUPPORTED)
    identifier = (~reserved + Regex(r"[A-Za-z_][A-Za-z0-9_$]*")).set_name("identifier")
    identifier.set_parse_action(lambda s, loc, toks: _Name(toks[0], loc))

    index = Regex(r"\d[\d_]*").set_parse_action(lambda toks: int(toks[0].replace('_', '')))

    sized = Regex(_SIZED_RE.pattern).set_parse_action(_sized_literal)
    based = Regex(_BASED_RE.pattern).set_parse_action(_based_literal)
    decimal = Regex(r"\d[\d_]*").set_parse_action(_decimal_literal)
    number = (sized | based | decimal).set_name("number")

    select = (LBRACK + index + Opt(COLON + index) + RBRACK).set_parse_action(_select)
    ref = (identifier + Opt(select)).set_parse_action(_ref)

    expr = Forward().set_name("expression")
    expr_list = expr + ZeroOrMore(COMMA + expr)

    replicate = (LBRACE + index + LBRACE + expr_list + RBRACE + RBRACE).set_parse_action(_replicate)
    concat = (LBRACE + expr_list + RBRACE).set_parse_action(
        lambda s, loc, toks: Concat(tuple(toks), loc=loc)
    )
    operand = number | replicate | concat | ref

    expr <<= infix_notation(
        operand,
        [
            ('~', 1, OpAssoc.RIGHT, _unary),
            ('*', 2, OpAssoc.LEFT, _binary),
            (one_of('+ -'), 2, OpAssoc.LEFT, _binary),
            (one_of('<< >>'), 2, OpAssoc.LEFT, _binary),
            (one_of('< <= > >='), 2, OpAssoc.LEFT, _binary),
            (one_of('== !='), 2, OpAssoc.LEFT, _binary),
            ('&', 2, OpAssoc.LEFT, _binary),
            ('^', 2, OpAssoc.LEFT, _binary),
            ('|', 2, OpAssoc.LEFT, _binary),
            (('?', ':'), 3, OpAssoc.RIGHT, _ternary),
        ],
    )

    rng = (LBRACK + index + COLON + index + RBRACK).set_parse_action(
        lambda s, loc, toks: _Range(toks[0], toks[1], loc)
    )
    direction = INPUT | OUTPUT

    header_ansi = Group(direction + Opt(WIRE.suppress()) + Opt(rng) + identifier).set_parse_action(_header_port)
    header_item = header_ansi | identifier.copy().set_parse_action(
        lambda s, loc, toks: _HeaderPort(_Name(toks[0], loc), None, None)
    )
    header = Group(Opt(LPAR - Opt(header_item + ZeroOrMore(COMMA - header_item)) - RPAR))

    name_list = identifier + ZeroOrMore(COMMA - identifier)
    port_decl = (direction - Opt(WIRE.suppress()) - Opt(rng) - name_list - SEMI).set_parse_action(_port_decl)
    wire_item = Group(identifier + Opt(EQ - expr))
    wire_decl = (WIRE.suppress() - Opt(rng) - wire_item - ZeroOrMore(COMMA - wire_item) - SEMI).set_parse_action(
        _wire_decl
    )

    lvalue = ref | (LBRACE + ref + ZeroOrMore(COMMA + ref) + RBRACE).set_parse_action(
        lambda toks: _Targets(tuple(toks))
    )
    assignment = Group(lvalue + EQ - expr).set_parse_action(_assignment)
    assign_stmt = (ASSIGN.suppress() - assignment - ZeroOrMore(COMMA - assignment) - SEMI).set_parse_action(
        lambda toks: _AssignStmt(tuple(toks))
    )

    item = port_decl | wire_decl | assign_stmt
    module = MODULE.suppress() - identifier - header - SEMI - Group(ZeroOrMore(item)) - ENDMODULE.suppress()
    source = module + StringEnd()
    source.ignore(cpp_style_comment)
    source.ignore(Regex(r"`(?:timescale|default_nettype)[^\n]*"))
    return source


def _syntax_error(source, exc):
    loc = min(exc.loc, len(source))
    word = re.match(r"[A-Za-z_][A-Za-z0-9_]*|\S?", source[loc:].lstrip()).group(0)
    if word in UNSUPPORTED:
        message = f"unsupported construct '{word}' (only combinational assigns are accepted)"
    elif word:
        message = f"{exc.msg}, found {word!r}"
    else:
        message = f"{exc.msg}, found end of text"
    return VerilogSyntaxError(message, lineno(loc, source), col(loc, source))


def _error_at(source, loc, message):
    return VerilogSyntaxError(message, lineno(loc, source), col(loc, source))


def _declare(source, signals, name, kind, rng):
    if name.text in signals:
        raise _error_at(source, name.loc, f"'{name.text}' is declared more than once")
    msb, lsb = (rng.msb, rng.lsb) if rng else (0, 0)
    if msb < lsb:
        raise _error_at(source, rng.loc, "ascending ranges are not supported")
    signals[name.text] = Signal(name.text, kind, msb, lsb, loc=name.loc)


def _assemble(source, tokens):
    name, header, items = tokens[0], list(tokens[1]), list(tokens[2])

    signals = {}
    ansi = bool(header) and header[0].direction is not None
    order = []
    if ansi:
        direction, rng = None, None
        for port in header:
            if port.direction is not None:
                direction, rng = port.direction, port.rng
            _declare(source, signals, port.name, direction, rng)
            order.append(port.name.text)
    else:
        pending = {}
        for port in header:
            if port.direction is not None:
                raise _error_at(source, port.name.loc, "cannot mix ANSI and non-ANSI port declarations")
            if port.name.text in pending:
                raise _error_at(source, port.name.loc, f"port '{port.name.text}' listed twice")
            pending[port.name.text] = port.name
            order.append(port.name.text)

    assigns = []
    for item in items:
        if isinstance(item, _PortDecl):
            for port_name in item.names:
                if ansi or port_name.text not in order:
                    raise _error_at(source, port_name.loc, f"'{port_name.text}' is not in the port list")
                _declare(source, signals, port_name, item.direction, item.rng)
        elif isinstance(item, _WireDecl):
            for wire_name, init in item.items:
                _declare(source, signals, wire_name, 'wire', item.rng)
                if init is not None:
                    assigns.append(Assign((Ref(wire_name.text, loc=wire_name.loc),), init, loc=wire_name.loc))
        else:
            assigns.extend(item.assigns)

    for port_name in order:
        if port_name not in signals:
            raise _error_at(source, 0, f"port '{port_name}' has no direction declaration")

    ports = tuple(signals[p] for p in order)
    nets = tuple(s for s in signals.values() if not s.is_port)
    return MiniModule(name.text, ports, nets, tuple(assigns))


def parse_mini(source):
    """Parse and check one module; raise VerilogSyntaxError on any failure."""
    with _parse_lock:
        try:
            tokens = _grammar().parse_string(source, parse_all=True)
        except ParseBaseException as exc:
            raise _syntax_error(source, exc) from None
    module = _assemble(source, tokens)
    check_module(module, source)
    return module
