"""Left-corner memory depth of binary trees.

The root has depth 1 and side L. A left child inherits its parent's depth,
plus one when the parent is itself a right child; a right child keeps the
parent's depth. Only nodes dominating two or more terminals count toward
the depth of a tree, so right- and left-branching trees both have depth 1
and every nested center embedding adds one level.
"""

from __future__ import annotations

from dataclasses import dataclass

from .treebank import Tree

L, R = "L", "R"


@dataclass(frozen=True)
class NodeDepth:
    start: int
    end: int
    label: str
    depth: int
    side: str


def _check_binary(node: Tree) -> None:
    if node.is_preterminal:
        return
    if len(node.children) != 2 or any(c.is_leaf for c in node.children):
        raise ValueError(f"node {node.label!r} is not binary")


def annotate_depths(tree: Tree) -> list[NodeDepth]:
    """Depth and side of every internal node, pre-order."""
    out: list[NodeDepth] = []
    stack = [(tree, 0, 1, L)]
    while stack:
        node, start, depth, side = stack.pop()
        _check_binary(node)
        width = len(node)
        out.append(NodeDepth(start, start + width, node.label, depth, side))
        if node.is_preterminal:
            continue
        left, right = node.children
        left_depth = depth + 1 if side == R else depth
        stack.append((right, start + len(left), depth, R))
        stack.append((left, start, left_depth, L))
    return out


def tree_depth(tree: Tree) -> int:
    return max(
        (n.depth for n in annotate_depths(tree) if n.end - n.start >= 2),
        default=1,
    )


def check_bound(tree: Tree, D: int) -> bool:
    if D < 1:
        raise ValueError(f"depth bound must be >= 1, got {D}")
    return tree_depth(tree) <= D
