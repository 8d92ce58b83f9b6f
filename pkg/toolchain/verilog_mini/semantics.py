"""Static checks run after parsing: declarations, drivers and combinational loops."""

from functools import lru_cache
from graphlib import CycleError, TopologicalSorter

from pyparsing import col, lineno

from ..exceptions import VerilogSyntaxError
from .nodes import ARITH_OPS, BITWISE_OPS, INPUT, Concat, Const, Ref, Replicate, Ternary, Unary, walk
from .sizing import size_assign

WHOLE = -1


def _error(source, loc, message):
    if source is None or loc < 0:
        return VerilogSyntaxError(message)
    return VerilogSyntaxError(message, lineno(loc, source), col(loc, source))


def select_offsets(ref, signal):
    """Bit offsets (relative to the declared lsb) covered by a reference."""
    if not ref.is_select:
        return range(signal.width)
    return range(ref.lsb - signal.lsb, ref.msb - signal.lsb + 1)


def _check_ref(source, ref, signals):
    signal = signals.get(ref.name)
    if signal is None:
        raise _error(source, ref.loc, f"'{ref.name}' is not declared")
    if ref.is_select:
        if ref.msb < ref.lsb:
            raise _error(source, ref.loc, f"ascending part-select on '{ref.name}'")
        if ref.lsb < signal.lsb or ref.msb > signal.msb:
            raise _error(source, ref.loc, f"select [{ref.msb}:{ref.lsb}] is outside '{ref.name}'[{signal.msb}:{signal.lsb}]")
    return signal


def read_refs(expr):
    return [node for node in walk(expr) if isinstance(node, Ref)]


def target_bits(assign, signals):
    """(name, offset) of every bit an assign drives, least significant first."""
    bits = []
    for target in reversed(assign.targets):
        bits.extend((target.name, offset) for offset in select_offsets(target, signals[target.name]))
    return bits


def _fit(support, width):
    support = list(support[:width])
    return support + [frozenset()] * (width - len(support))


def _running(support):
    seen, out = frozenset(), []
    for bits in support:
        seen = seen | bits
        out.append(seen)
    return out


def _union(support):
    return frozenset().union(*support)


def bit_support(node, signals):
    """
    For each result bit of a sized expression (lsb first), the signal bits it
    may depend on. Arithmetic is approximated by everything at or below the bit.
    """
    width = node.width
    if isinstance(node, Const):
        return [frozenset()] * width
    if isinstance(node, Ref):
        offsets = select_offsets(node, signals[node.name])
        return _fit([frozenset({(node.name, offset)}) for offset in offsets], width)
    if isinstance(node, Unary):
        return _fit(bit_support(node.operand, signals), width)
    if isinstance(node, Ternary):
        cond = _union(bit_support(node.cond, signals))
        then = _fit(bit_support(node.then, signals), width)
        other = _fit(bit_support(node.other, signals), width)
        return [cond | t | o for t, o in zip(then, other)]
    if isinstance(node, (Concat, Replicate)):
        bits = []
        for part in reversed(node.parts):
            bits.extend(bit_support(part, signals))
        if isinstance(node, Replicate):
            bits = bits * node.count
        return _fit(bits, width)

    left = bit_support(node.left, signals)
    right = bit_support(node.right, signals)
    if node.op in BITWISE_OPS:
        return [l | r for l, r in zip(_fit(left, width), _fit(right, width))]
    if node.op in ARITH_OPS:
        return [l | r for l, r in zip(_running(_fit(left, width)), _running(_fit(right, width)))]
    if node.op == '<<':
        amount = _union(right)
        return [bits | amount for bits in _running(_fit(left, width))]
    if node.op == '>>':
        amount = _union(right)
        return [bits | amount for bits in _running(_fit(left, width)[::-1])[::-1]]
    return _fit([_union(left) | _union(right)], width)


def _on_cycle(reads, index):
    stack, seen = list(reads[index]), set()
    while stack:
        current = stack.pop()
        if current == index:
            return True
        if current not in seen:
            seen.add(current)
            stack.extend(reads[current])
    return False


@lru_cache(maxsize=256)
def schedule(module):
    """
    Evaluation steps as (assign index, positions). positions is None to commit
    every target bit, else the one target-bit position (lsb first) to commit.

    Assigns stay whole unless they sit on an assign-level cycle; those are
    evaluated one target bit at a time. Raises CycleError on a bit-level loop.
    """
    signals = module.signals
    targets = [target_bits(assign, signals) for assign in module.assigns]
    supports = [
        _fit(bit_support(size_assign(assign, signals), signals), len(bits))
        for assign, bits in zip(module.assigns, targets)
    ]
    driver = {bit: index for index, bits in enumerate(targets) for bit in bits}
    reads = [{driver[bit] for bit in _union(support) if bit in driver} for support in supports]

    steps, owner = [], {}
    for index, bits in enumerate(targets):
        if _on_cycle(reads, index):
            for position, bit in enumerate(bits):
                steps.append(((index, position), supports[index][position]))
                owner[bit] = (index, position)
        else:
            steps.append(((index, WHOLE), _union(supports[index])))
            owner.update((bit, (index, WHOLE)) for bit in bits)

    sorter = TopologicalSorter()
    for step, support in steps:
        preds = {owner[bit] for bit in support if bit in owner}
        if step in preds:
            raise CycleError("a bit depends on itself", [step, step])
        sorter.add(step, *sorted(preds))
    return tuple((index, None if position == WHOLE else (position,)) for index, position in sorter.static_order())


def _step_names(module, signals, step):
    index, position = step
    if position == WHOLE:
        return [target.name for target in module.assigns[index].targets]
    return [target_bits(module.assigns[index], signals)[position][0]]


def check_module(module, source=None):
    signals = module.signals
    driven = {name: set() for name in signals}

    for assign in module.assigns:
        for target in assign.targets:
            signal = _check_ref(source, target, signals)
            if signal.kind == INPUT:
                raise _error(source, target.loc, f"cannot assign to input '{target.name}'")
            for offset in select_offsets(target, signal):
                if offset in driven[target.name]:
                    raise _error(source, target.loc, f"'{target.name}[{offset + signal.lsb}]' has multiple drivers")
                driven[target.name].add(offset)
        for node in walk(assign.expr):
            if isinstance(node, Ref):
                _check_ref(source, node, signals)
            elif isinstance(node, (Concat, Replicate)):
                for part in node.parts:
                    if isinstance(part, Const) and part.size is None:
                        raise _error(source, part.loc, "unsized constant in concatenation")

    for port in module.outputs:
        missing = set(range(port.width)) - driven[port.name]
        if missing:
            bit = min(missing) + port.lsb
            raise _error(source, port.loc, f"output '{port.name}[{bit}]' is never driven")

    for assign in module.assigns:
        for ref in read_refs(assign.expr):
            signal = signals[ref.name]
            if signal.kind == INPUT:
                continue
            missing = set(select_offsets(ref, signal)) - driven[ref.name]
            if missing:
                bit = min(missing) + signal.lsb
                raise _error(source, ref.loc, f"'{ref.name}[{bit}]' is read but never driven")

    try:
        schedule(module)
    except CycleError as exc:
        cycle = exc.args[1]
        names = sorted({name for step in cycle for name in _step_names(module, signals, step)})
        raise _error(source, module.assigns[cycle[0][0]].loc, f"combinational loop through {', '.join(names)}") from None
