"""
Syntax tree of the combinational Verilog subset.

Expression nodes are frozen and compare structurally; the source offset
(`loc`) is excluded from equality so identical subexpressions hash alike.
A node's `width` is 0 straight out of the parser and holds the evaluation
width once the sizing pass has run.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

BITWISE_OPS = ('&', '|', '^')
ARITH_OPS = ('+', '-', '*')
SHIFT_OPS = ('<<', '>>')
COMPARE_OPS = ('<', '<=', '>', '>=')
EQUALITY_OPS = ('==', '!=')

INPUT = 'input'
OUTPUT = 'output'

# width of a literal written without a size
UNSIZED_WIDTH = 32


@dataclass(frozen=True)
class Const:
    value: int
    size: Optional[int]  # None for unsized literals
    width: int = 0
    loc: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Ref:
    name: str
    msb: Optional[int] = None
    lsb: Optional[int] = None
    width: int = 0
    loc: int = field(default=-1, compare=False)

    @property
    def is_select(self):
        return self.msb is not None


@dataclass(frozen=True)
class Unary:
    op: str
    operand: 'Expr'
    width: int = 0
    loc: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: 'Expr'
    right: 'Expr'
    width: int = 0
    loc: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Ternary:
    cond: 'Expr'
    then: 'Expr'
    other: 'Expr'
    width: int = 0
    loc: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Concat:
    parts: Tuple['Expr', ...]
    width: int = 0
    loc: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Replicate:
    count: int
    parts: Tuple['Expr', ...]
    width: int = 0
    loc: int = field(default=-1, compare=False)


Expr = Union[Const, Ref, Unary, Binary, Ternary, Concat, Replicate]


def children(node):
    """Direct subexpressions of a node, in source order."""
    if isinstance(node, Unary):
        return (node.operand,)
    if isinstance(node, Binary):
        return (node.left, node.right)
    if isinstance(node, Ternary):
        return (node.cond, node.then, node.other)
    if isinstance(node, (Concat, Replicate)):
        return node.parts
    return ()


def walk(node):
    """Yield every node of an expression tree, parents first."""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(children(current)))


@dataclass(frozen=True)
class Signal:
    """A declared port or net with a descending `[msb:lsb]` range."""
    name: str
    kind: str  # 'input', 'output' or 'wire'
    msb: int = 0
    lsb: int = 0
    loc: int = field(default=-1, compare=False)

    @property
    def width(self):
        return self.msb - self.lsb + 1

    @property
    def is_port(self):
        return self.kind in (INPUT, OUTPUT)


@dataclass(frozen=True)
class Assign:
    """`assign {targets} = expr;` with targets listed most significant first."""
    targets: Tuple[Ref, ...]
    expr: Expr
    loc: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class MiniModule:
    name: str
    ports: Tuple[Signal, ...]
    nets: Tuple[Signal, ...]
    assigns: Tuple[Assign, ...]

    def signal(self, name):
        for sig in self.ports + self.nets:
            if sig.name == name:
                return sig
        raise KeyError(name)

    @property
    def signals(self):
        return {sig.name: sig for sig in self.ports + self.nets}

    @property
    def inputs(self):
        return tuple(p for p in self.ports if p.kind == INPUT)

    @property
    def outputs(self):
        return tuple(p for p in self.ports if p.kind == OUTPUT)

    @property
    def input_bits(self):
        return sum(p.width for p in self.inputs)
