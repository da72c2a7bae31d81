"""Read, merge and render call-tree profiles written by the monitor.

Profiles from several processes are merged by region name, summing
counts and times along matching call paths.  The tree view prints one
line per call-path node; the flat view aggregates per region and sorts
by exclusive time, which is where optimization candidates surface.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import LibwrapError


@dataclass
class ProfileNode:
    name: str
    count: int = 0
    incl_ns: int = 0
    excl_ns: int = 0
    children: dict[str, "ProfileNode"] = field(default_factory=dict)


def load_profile(path) -> ProfileNode:
    """Parse one monitor profile file into a name-keyed call tree."""
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise LibwrapError(f"cannot read profile {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise LibwrapError(f"profile {path} is not valid JSON: {exc}") from exc
    try:
        regions = {r["id"]: r["name"] for r in data["regions"]}
        return _node_from_json(data["calltree"], regions, name="<root>")
    except (KeyError, TypeError) as exc:
        raise LibwrapError(f"profile {path} has an unexpected shape: {exc}") from exc


def _node_from_json(obj, regions, name) -> ProfileNode:
    node = ProfileNode(
        name=name,
        count=int(obj.get("count", 0)),
        incl_ns=int(obj.get("incl_ns", 0)),
        excl_ns=int(obj.get("excl_ns", 0)),
    )
    for child in obj.get("children", ()):
        child_name = regions.get(child.get("region"), f"<region {child.get('region')}>")
        merge_into(node.children, _node_from_json(child, regions, child_name))
    return node


def merge_into(children: dict, node: ProfileNode) -> None:
    existing = children.get(node.name)
    if existing is None:
        children[node.name] = node
        return
    existing.count += node.count
    existing.incl_ns += node.incl_ns
    existing.excl_ns += node.excl_ns
    for child in node.children.values():
        merge_into(existing.children, child)


def merge_profiles(roots) -> ProfileNode:
    merged = ProfileNode(name="<root>")
    for root in roots:
        merged.count += root.count
        merged.incl_ns += root.incl_ns
        merged.excl_ns += root.excl_ns
        for child in root.children.values():
            merge_into(merged.children, child)
    return merged


def region_counts(root: ProfileNode) -> dict[str, int]:
    """Total call count per region name, summed over all call paths."""
    totals: dict[str, int] = {}

    def visit(node):
        for child in node.children.values():
            totals[child.name] = totals.get(child.name, 0) + child.count
            visit(child)

    visit(root)
    return totals


def render_tree(root: ProfileNode) -> str:
    """Indented call tree; times in seconds."""
    lines = [f"{'region':<44} {'calls':>10} {'incl(s)':>12} {'excl(s)':>12}"]

    def visit(node, depth):
        for child in _ordered(node.children):
            label = "  " * depth + child.name
            lines.append(
                f"{label:<44} {child.count:>10} "
                f"{child.incl_ns / 1e9:>12.6f} {child.excl_ns / 1e9:>12.6f}"
            )
            visit(child, depth + 1)

    visit(root, 0)
    if len(lines) == 1:
        lines.append("(no recorded calls)")
    return "\n".join(lines)


def render_flat(root: ProfileNode) -> str:
    """Per-region totals sorted by exclusive time, busiest first."""
    totals: dict[str, list] = {}

    def visit(node):
        for child in node.children.values():
            entry = totals.setdefault(child.name, [0, 0])
            entry[0] += child.count
            entry[1] += child.excl_ns
            visit(child)

    visit(root)
    lines = [f"{'region':<44} {'calls':>10} {'excl(s)':>12}"]
    for name, (count, excl) in sorted(
        totals.items(), key=lambda kv: (-kv[1][1], kv[0])
    ):
        lines.append(f"{name:<44} {count:>10} {excl / 1e9:>12.6f}")
    if len(lines) == 1:
        lines.append("(no recorded calls)")
    return "\n".join(lines)


def _ordered(children: dict):
    return children.values()
