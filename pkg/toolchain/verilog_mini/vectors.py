"""
Vector-table testbenches.

Text form::

    ports: in a[8] b[8] -> out s[8] cout[1]
    a=0x0F b=0x01 -> s=0x10 cout=0   # comment

Values are decimal, 0x-hex, 0b-binary or Verilog sized literals (8'hFF).
"""

import re
from dataclasses import dataclass, field
from typing import Dict, Tuple

from ..exceptions import PortMismatch, VectorTableError
from .elaborate import elaborate

_PORT = re.compile(r'^([A-Za-z_]\w*)(?:\[(\d+)\])?$')
_ASSIGNMENT = re.compile(r'^([A-Za-z_]\w*)=(\S+)$')
_SIZED = re.compile(r"^(\d*)'([bdhBDH])([0-9a-fA-F_]+)$")


def parse_value(text):
    """Integer value of a vector table literal."""
    match = _SIZED.match(text)
    try:
        if match:
            base = {'b': 2, 'd': 10, 'h': 16}[match.group(2).lower()]
            return int(match.group(3).replace('_', ''), base)
        return int(text.replace('_', ''), 0)
    except ValueError:
        raise VectorTableError(f"bad value '{text}'") from None


@dataclass(frozen=True)
class VectorRow:
    inputs: Dict[str, int]
    expected: Dict[str, int]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class VectorTable:
    inputs: Tuple[Tuple[str, int], ...]
    outputs: Tuple[Tuple[str, int], ...]
    rows: Tuple[VectorRow, ...]

    @property
    def header(self):
        return tuple(name for name, _ in self.inputs + self.outputs)

    @classmethod
    def parse(cls, text):
        lines = []
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0].strip()
            if line:
                lines.append((number, line))
        if not lines or not lines[0][1].startswith('ports:'):
            raise VectorTableError("vector table must start with a 'ports:' header")

        number, header = lines[0]
        sides = header[len('ports:'):].split('->')
        if len(sides) != 2:
            raise VectorTableError(f"line {number}: header needs exactly one '->'")
        inputs = cls._header_side(sides[0], 'in', number)
        outputs = cls._header_side(sides[1], 'out', number)
        names = [name for name, _ in inputs + outputs]
        if len(set(names)) != len(names):
            raise VectorTableError(f"line {number}: duplicate port in header")

        rows = tuple(cls._row(line, number, inputs, outputs) for number, line in lines[1:])
        return cls(inputs=inputs, outputs=outputs, rows=rows)

    @staticmethod
    def _header_side(text, keyword, number):
        tokens = text.split()
        if not tokens or tokens[0] != keyword:
            raise VectorTableError(f"line {number}: expected '{keyword}' in header")
        ports = []
        for token in tokens[1:]:
            match = _PORT.match(token)
            if not match:
                raise VectorTableError(f"line {number}: bad port '{token}'")
            width = int(match.group(2) or 1)
            if width < 1:
                raise VectorTableError(f"line {number}: port '{match.group(1)}' has zero width")
            ports.append((match.group(1), width))
        if not ports:
            raise VectorTableError(f"line {number}: no '{keyword}' ports")
        return tuple(ports)

    @staticmethod
    def _side(text, ports, number):
        values = {}
        for token in text.split():
            match = _ASSIGNMENT.match(token)
            if not match:
                raise VectorTableError(f"line {number}: bad assignment '{token}'")
            values[match.group(1)] = parse_value(match.group(2))
        widths = dict(ports)
        if set(values) != set(widths):
            missing = sorted(set(widths) - set(values))
            extra = sorted(set(values) - set(widths))
            raise VectorTableError(f"line {number}: ports do not match header (missing {missing}, unknown {extra})")
        for name, value in values.items():
            if not 0 <= value < (1 << widths[name]):
                raise VectorTableError(f"line {number}: {name}={value} does not fit in {widths[name]} bits")
        return values

    @classmethod
    def _row(cls, line, number, inputs, outputs):
        sides = line.split('->')
        if len(sides) != 2:
            raise VectorTableError(f"line {number}: row needs exactly one '->'")
        return VectorRow(
            inputs=cls._side(sides[0], inputs, number),
            expected=cls._side(sides[1], outputs, number),
            line=number,
        )

    def to_text(self):
        def ports(items):
            return ' '.join(f"{name}[{width}]" for name, width in items)

        def values(items, row_values):
            return ' '.join(f"{name}={row_values[name]:#x}" if width > 1 else f"{name}={row_values[name]}"
                            for name, width in items)

        lines = [f"ports: in {ports(self.inputs)} -> out {ports(self.outputs)}"]
        for row in self.rows:
            lines.append(f"{values(self.inputs, row.inputs)} -> {values(self.outputs, row.expected)}")
        return '\n'.join(lines) + '\n'


@dataclass(frozen=True)
class RowResult:
    index: int
    passed: bool
    expected: Dict[str, int]
    actual: Dict[str, int]


@dataclass(frozen=True)
class FunctionalResult:
    passed: bool
    rows: Tuple[RowResult, ...]

    @property
    def failures(self):
        return [row for row in self.rows if not row.passed]

    def describe(self):
        if not self.rows:
            return "no vectors"
        if self.passed:
            return f"{len(self.rows)}/{len(self.rows)} vectors passed"
        lines = [f"{len(self.failures)}/{len(self.rows)} vectors failed"]
        for row in self.failures:
            got = ' '.join(f"{k}={v:#x}" for k, v in row.actual.items())
            want = ' '.join(f"{k}={v:#x}" for k, v in row.expected.items())
            lines.append(f"MISMATCH row {row.index + 1}: expected {want}, got {got}")
        return '\n'.join(lines)


def check_ports(module, table):
    """Raise PortMismatch unless the header names exactly the module's ports at their widths."""
    declared = {p.name: (p.kind, p.width) for p in module.ports}
    header = {name: ('input', w) for name, w in table.inputs}
    header.update({name: ('output', w) for name, w in table.outputs})
    if declared != header:
        problems = []
        for name in sorted(set(declared) | set(header)):
            want, got = declared.get(name), header.get(name)
            if want != got:
                problems.append(f"{name}: module {want or 'absent'}, table {got or 'absent'}")
        raise PortMismatch("vector table header disagrees with ports: " + '; '.join(problems))


def simulate_vectors(module, table, netlist=None):
    """Run every row on the elaborated netlist."""
    check_ports(module, table)
    netlist = netlist or elaborate(module)
    vectors = {name: [row.inputs[name] for row in table.rows] for name, _ in table.inputs}
    actual = netlist.simulate(vectors) if table.rows else {}
    results = []
    for index, row in enumerate(table.rows):
        got = {name: actual[name][index] for name, _ in table.outputs}
        results.append(RowResult(index, got == row.expected, dict(row.expected), got))
    return FunctionalResult(passed=all(r.passed for r in results), rows=tuple(results))


def render_verilog_testbench(table, module_name):
    """Self-checking Verilog testbench: one `if (` check per row, PASS/FAIL at the end."""
    def literal(width, value):
        return f"{width}'h{value:x}"

    outs = '{' + ', '.join(name for name, _ in table.outputs) + '}'
    lines = ['`timescale 1ns/1ps', 'module tb;']
    lines += [f"  reg [{w - 1}:0] {name};" for name, w in table.inputs]
    lines += [f"  wire [{w - 1}:0] {name};" for name, w in table.outputs]
    lines.append('  integer errors = 0;')
    connections = ', '.join(f".{name}({name})" for name in table.header)
    lines.append(f"  {module_name} dut({connections});")
    lines.append('  initial begin')
    for index, row in enumerate(table.rows, start=1):
        drive = ' '.join(f"{name} = {literal(w, row.inputs[name])};" for name, w in table.inputs)
        expected = '{' + ', '.join(literal(w, row.expected[name]) for name, w in table.outputs) + '}'
        lines.append(f"    {drive}")
        lines.append('    #1;')
        lines.append(f"    if ({outs} !== {expected}) begin")
        lines.append('      errors = errors + 1;')
        lines.append(f'      $display("MISMATCH row {index}: got %h expected %h", {outs}, {expected});')
        lines.append('    end')
    lines.append('    $display("%0s", errors == 0 ? "PASS" : "FAIL");')
    lines.append('    $finish;')
    lines.append('  end')
    lines.append('endmodule')
    return '\n'.join(lines) + '\n'
