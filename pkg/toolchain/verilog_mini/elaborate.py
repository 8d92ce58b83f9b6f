"""
Lowering of a checked MiniModule to 2-input gates.

Bit vectors are lists of net ids, least significant bit first. Gates are
created through a GateBuilder that folds constants, removes double
inversions and hashes structurally identical gates within one assign.
"""

import logging

from ..exceptions import ElaborationError
from .netlist import AND2, CONST0, CONST1, NOT, OR2, XOR2, Gate, GateNetlist
from .nodes import Binary, Concat, Const, Ref, Replicate, Ternary, Unary
from .semantics import schedule, select_offsets, target_bits
from .sizing import self_width, size_assign

logger = logging.getLogger(__name__)

MAX_WIDTH = 256

_CONSTS = (CONST0, CONST1)


class GateBuilder:
    """Allocates nets and gates for one netlist."""

    def __init__(self):
        self.gates = []
        self._next = 2
        self._drivers = {}
        self._shared = {}
        self._by_assign = {}

    def new_net(self):
        net = self._next
        self._next += 1
        return net

    def start_assign(self, index):
        # sharing is per assign, kept across the bits of a split assign
        self._shared = self._by_assign.setdefault(index, {})

    def _gate(self, kind, *fanins):
        if kind != NOT:
            fanins = tuple(sorted(fanins))
        key = (kind, fanins)
        if key in self._shared:
            return self._shared[key]
        net = self.new_net()
        gate = Gate(kind, fanins, net)
        self.gates.append(gate)
        self._drivers[net] = gate
        self._shared[key] = net
        return net

    def not_(self, a):
        if a in _CONSTS:
            return CONST1 if a == CONST0 else CONST0
        driver = self._drivers.get(a)
        if driver is not None and driver.kind == NOT:
            return driver.fanins[0]
        return self._gate(NOT, a)

    def and_(self, a, b):
        if CONST0 in (a, b):
            return CONST0
        if a == CONST1:
            return b
        if b == CONST1 or a == b:
            return a
        return self._gate(AND2, a, b)

    def or_(self, a, b):
        if CONST1 in (a, b):
            return CONST1
        if a == CONST0:
            return b
        if b == CONST0 or a == b:
            return a
        return self._gate(OR2, a, b)

    def xor_(self, a, b):
        if a == b:
            return CONST0
        if a == CONST0:
            return b
        if b == CONST0:
            return a
        if a == CONST1:
            return self.not_(b)
        if b == CONST1:
            return self.not_(a)
        return self._gate(XOR2, a, b)

    def mux(self, sel, one, zero):
        """MUX2 built as NOT + 2 AND2 + OR2."""
        if sel == CONST1 or one == zero:
            return one
        if sel == CONST0:
            return zero
        return self.or_(self.and_(sel, one), self.and_(self.not_(sel), zero))

    def reduce(self, op, bits):
        """Balanced reduction tree."""
        bits = list(bits)
        while len(bits) > 1:
            paired = [op(bits[i], bits[i + 1]) for i in range(0, len(bits) - 1, 2)]
            if len(bits) % 2:
                paired.append(bits[-1])
            bits = paired
        return bits[0]

    def add(self, a, b, carry=CONST0):
        """Ripple-carry adder; full adder cells share p = a ^ b."""
        total = []
        for x, y in zip(a, b):
            p = self.xor_(x, y)
            total.append(self.xor_(p, carry))
            carry = self.or_(self.and_(x, y), self.and_(p, carry))
        return total, carry


def _extend(bits, width):
    bits = list(bits[:width])
    return bits + [CONST0] * (width - len(bits))


class _Lowering:

    def __init__(self, builder, module, env):
        self.b = builder
        self.signals = module.signals
        self.env = env

    def lower(self, node):
        if node.width > MAX_WIDTH:
            raise ElaborationError(f"expression width {node.width} exceeds the {MAX_WIDTH}-bit limit")
        return _extend(self._lower(node), node.width)

    def _lower(self, node):
        b = self.b
        if isinstance(node, Const):
            return [CONST1 if (node.value >> i) & 1 else CONST0 for i in range(node.width)]
        if isinstance(node, Ref):
            bits = self.env[node.name]
            offsets = select_offsets(node, self.signals[node.name])
            return bits[offsets.start:offsets.stop]
        if isinstance(node, Unary):
            return [b.not_(x) for x in self.lower(node.operand)]
        if isinstance(node, Ternary):
            cond = b.reduce(b.or_, self.lower(node.cond))
            then, other = self.lower(node.then), self.lower(node.other)
            return [b.mux(cond, t, o) for t, o in zip(then, other)]
        if isinstance(node, (Concat, Replicate)):
            bits = []
            for part in reversed(node.parts):
                bits.extend(self.lower(part))
            if isinstance(node, Replicate):
                bits = bits * node.count
            return bits
        return self._binary(node)

    def _sum(self, node):
        """a + b, fusing a 1-bit third operand of (a + b) + c into the carry-in."""
        b = self.b
        for inner, single in ((node.left, node.right), (node.right, node.left)):
            if isinstance(inner, Binary) and inner.op == '+' and self_width(single, self.signals) == 1:
                bits = self.lower(single)
                # only a zero-extended bit can ride in as the carry
                if all(bit == CONST0 for bit in bits[1:]):
                    return b.add(self.lower(inner.left), self.lower(inner.right), bits[0])[0]
        return b.add(self.lower(node.left), self.lower(node.right))[0]

    def _less(self, left, right):
        """left < right via the carry out of left + ~right + 1."""
        b = self.b
        _, carry = b.add(left, [b.not_(x) for x in right], CONST1)
        return b.not_(carry)

    def _shift(self, value, amount, left):
        b = self.b
        width = len(value)
        for k, sel in enumerate(amount):
            step = 1 << k if k < width.bit_length() + 1 else width
            if step >= width:
                shifted = [CONST0] * width
            elif left:
                shifted = [CONST0] * step + value[:width - step]
            else:
                shifted = value[step:] + [CONST0] * step
            value = [b.mux(sel, s, v) for s, v in zip(shifted, value)]
        return value

    def _multiply(self, a, y):
        b = self.b
        width = len(a)
        acc = [CONST0] * width
        for i, bit in enumerate(y[:width]):
            if bit == CONST0:
                continue
            row = [CONST0] * i + [b.and_(a[j], bit) for j in range(width - i)]
            acc, _ = b.add(acc, row)
        return acc

    def _binary(self, node):
        b = self.b
        op = node.op
        if op == '+':
            return self._sum(node)
        if op in ('<<', '>>'):
            return self._shift(self.lower(node.left), self.lower(node.right), op == '<<')
        left, right = self.lower(node.left), self.lower(node.right)
        if op == '-':
            return b.add(left, [b.not_(x) for x in right], CONST1)[0]
        if op == '*':
            return self._multiply(left, right)
        if op == '&':
            return [b.and_(x, y) for x, y in zip(left, right)]
        if op == '|':
            return [b.or_(x, y) for x, y in zip(left, right)]
        if op == '^':
            return [b.xor_(x, y) for x, y in zip(left, right)]
        if op in ('==', '!='):
            diff = [b.xor_(x, y) for x, y in zip(left, right)]
            if op == '!=':
                return [b.reduce(b.or_, diff)]
            return [b.reduce(b.and_, [b.not_(d) for d in diff])]
        if op == '<':
            return [self._less(left, right)]
        if op == '>':
            return [self._less(right, left)]
        if op == '<=':
            return [b.not_(self._less(right, left))]
        if op == '>=':
            return [b.not_(self._less(left, right))]
        raise ElaborationError(f"unsupported operator {op}")


def _sweep(gates, outputs):
    """Drop gates that no output depends on; order is preserved."""
    by_net = {g.output: g for g in gates}
    live, stack = set(), list(outputs)
    while stack:
        net = stack.pop()
        gate = by_net.get(net)
        if gate is None or net in live:
            continue
        live.add(net)
        stack.extend(gate.fanins)
    return tuple(g for g in gates if g.output in live)


def elaborate(module):
    """Lower a checked module to a GateNetlist."""
    builder = GateBuilder()
    env = {}
    inputs = []
    for port in module.inputs:
        env[port.name] = [builder.new_net() for _ in range(port.width)]
        inputs.extend(env[port.name])
    for sig in module.outputs + module.nets:
        env[sig.name] = [CONST0] * sig.width

    lowering = _Lowering(builder, module, env)
    signals = module.signals
    for index, positions in schedule(module):
        assign = module.assigns[index]
        builder.start_assign(index)
        bits = lowering.lower(size_assign(assign, signals))
        driven = target_bits(assign, signals)
        for position in positions or range(len(driven)):
            name, offset = driven[position]
            env[name][offset] = bits[position]

    outputs = []
    for port in module.outputs:
        outputs.extend(env[port.name])

    gates = _sweep(builder.gates, outputs)
    logger.debug(f"elaborated {module.name}: {len(gates)} gates")
    return GateNetlist(
        input_ports=tuple((p.name, p.width) for p in module.inputs),
        output_ports=tuple((p.name, p.width) for p in module.outputs),
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        gates=gates,
    )
