"""
Expression width inference (context-determined, unsigned).

Arithmetic and bitwise operands take the context width; shift amounts,
ternary conditions, comparison operands and concatenation parts are
self-determined. Both the reference evaluator and the gate lowering consume
the sized trees produced here, so they always agree on widths.
"""

from dataclasses import replace

from .nodes import (
    ARITH_OPS,
    BITWISE_OPS,
    COMPARE_OPS,
    EQUALITY_OPS,
    SHIFT_OPS,
    UNSIZED_WIDTH,
    Binary,
    Concat,
    Const,
    Ref,
    Replicate,
    Ternary,
    Unary,
)


def self_width(node, signals):
    if isinstance(node, Const):
        return node.size or UNSIZED_WIDTH
    if isinstance(node, Ref):
        if node.is_select:
            return node.msb - node.lsb + 1
        return signals[node.name].width
    if isinstance(node, Unary):
        return self_width(node.operand, signals)
    if isinstance(node, Binary):
        if node.op in ARITH_OPS or node.op in BITWISE_OPS:
            return max(self_width(node.left, signals), self_width(node.right, signals))
        if node.op in SHIFT_OPS:
            return self_width(node.left, signals)
        return 1
    if isinstance(node, Ternary):
        return max(self_width(node.then, signals), self_width(node.other, signals))
    if isinstance(node, Concat):
        return sum(self_width(p, signals) for p in node.parts)
    if isinstance(node, Replicate):
        return node.count * sum(self_width(p, signals) for p in node.parts)
    raise TypeError(f"unknown node {node!r}")


def size_expr(node, width, signals):
    """Return a copy of `node` evaluated at `width` bits, children sized recursively."""
    if isinstance(node, (Const, Ref)):
        return replace(node, width=width)
    if isinstance(node, Unary):
        return replace(node, operand=size_expr(node.operand, width, signals), width=width)
    if isinstance(node, Binary):
        if node.op in ARITH_OPS or node.op in BITWISE_OPS:
            left = size_expr(node.left, width, signals)
            right = size_expr(node.right, width, signals)
        elif node.op in SHIFT_OPS:
            left = size_expr(node.left, width, signals)
            right = size_expr(node.right, self_width(node.right, signals), signals)
        elif node.op in COMPARE_OPS or node.op in EQUALITY_OPS:
            inner = max(self_width(node.left, signals), self_width(node.right, signals))
            left = size_expr(node.left, inner, signals)
            right = size_expr(node.right, inner, signals)
        else:
            raise TypeError(f"unknown operator {node.op}")
        return replace(node, left=left, right=right, width=width)
    if isinstance(node, Ternary):
        return replace(
            node,
            cond=size_expr(node.cond, self_width(node.cond, signals), signals),
            then=size_expr(node.then, width, signals),
            other=size_expr(node.other, width, signals),
            width=width,
        )
    if isinstance(node, (Concat, Replicate)):
        parts = tuple(size_expr(p, self_width(p, signals), signals) for p in node.parts)
        return replace(node, parts=parts, width=width)
    raise TypeError(f"unknown node {node!r}")


def target_width(assign, signals):
    return sum(self_width(t, signals) for t in assign.targets)


def size_assign(assign, signals):
    """Sized expression of an assign: the context is max(lhs, rhs) width."""
    width = max(target_width(assign, signals), self_width(assign.expr, signals))
    return size_expr(assign.expr, width, signals)
