"""Direct evaluation of sized expression trees on Python integers."""

from .nodes import Binary, Concat, Const, Ref, Replicate, Ternary, Unary
from .semantics import schedule, target_bits
from .sizing import size_assign


def _mask(width):
    return (1 << width) - 1


def eval_expr(node, env, signals):
    mask = _mask(node.width)
    if isinstance(node, Const):
        return node.value & mask
    if isinstance(node, Ref):
        signal = signals[node.name]
        value = env[node.name]
        if node.is_select:
            value = (value >> (node.lsb - signal.lsb)) & _mask(node.msb - node.lsb + 1)
        return value & mask
    if isinstance(node, Unary):
        return ~eval_expr(node.operand, env, signals) & mask
    if isinstance(node, Ternary):
        chosen = node.then if eval_expr(node.cond, env, signals) else node.other
        return eval_expr(chosen, env, signals) & mask
    if isinstance(node, (Concat, Replicate)):
        value = 0
        count = node.count if isinstance(node, Replicate) else 1
        for _ in range(count):
            for part in node.parts:
                value = (value << part.width) | eval_expr(part, env, signals)
        return value & mask

    left = eval_expr(node.left, env, signals)
    right = eval_expr(node.right, env, signals)
    op = node.op
    if op == '+':
        result = left + right
    elif op == '-':
        result = left - right
    elif op == '*':
        result = left * right
    elif op == '&':
        result = left & right
    elif op == '|':
        result = left | right
    elif op == '^':
        result = left ^ right
    elif op == '<<':
        result = left << right if right < node.width else 0
    elif op == '>>':
        result = left >> right
    elif op == '<':
        result = int(left < right)
    elif op == '<=':
        result = int(left <= right)
    elif op == '>':
        result = int(left > right)
    elif op == '>=':
        result = int(left >= right)
    elif op == '==':
        result = int(left == right)
    elif op == '!=':
        result = int(left != right)
    else:
        raise ValueError(f"unknown operator {op}")
    return result & mask


def evaluate_module(module, inputs):
    """Evaluate every assign in dependency order; return output port values."""
    signals = module.signals
    env = {p.name: inputs[p.name] & _mask(p.width) for p in module.inputs}
    env.update((sig.name, 0) for sig in module.outputs + module.nets)
    for index, positions in schedule(module):
        assign = module.assigns[index]
        value = eval_expr(size_assign(assign, signals), env, signals)
        bits = target_bits(assign, signals)
        for position in positions or range(len(bits)):
            name, offset = bits[position]
            bit = (value >> position) & 1
            env[name] = (env[name] & ~(1 << offset)) | (bit << offset)
    return {p.name: env[p.name] for p in module.outputs}
