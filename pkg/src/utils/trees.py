"""Utils for handling nested dict."""

from typing import Any, Callable, TypeVar


Tree = TypeVar("Tree", bound=dict)


def tree_filter(
    data: Tree,
    criteria_fn: Callable[[Any], bool] = lambda x: x is not None,
) -> Tree:
    """Keep only leaves for which criteria is True.

    Filters out None leaves if criteria is not specified.
    """
    output: Tree = {}  # type: ignore[reportAssignType]
    for k, v in data.items():
        if isinstance(v, dict):
            output[k] = tree_filter(v, criteria_fn=criteria_fn)
        elif criteria_fn(v):
            output[k] = v

    return output


def _step(node: Any, key: str) -> tuple[Any, str | int]:
    """Resolve one path component against a dict or a list."""
    if isinstance(node, list):
        try:
            index = int(key)
        except ValueError as exc:
            raise KeyError(f"list index expected, got {key!r}") from exc
        if not -len(node) <= index < len(node):
            raise KeyError(f"index {index} out of range")
        return node, index

    if isinstance(node, dict):
        if key not in node:
            raise KeyError(key)
        return node, key

    raise KeyError(f"cannot descend into {type(node).__name__} at {key!r}")


def tree_get(data: dict, path: str) -> Any:
    """Return the leaf at a dotted path, e.g. ``"initial.modes.0.u"``."""
    node: Any = data
    for key in path.split("."):
        parent, resolved = _step(node, key)
        node = parent[resolved]
    return node


def tree_set(data: dict, path: str, value: Any) -> None:
    """Set the leaf at a dotted path in place.

    Every component but the last must already exist, so that a misspelled
    path fails loudly instead of creating a new branch.
    """
    *parents, last = path.split(".")
    node: Any = data
    for key in parents:
        parent, resolved = _step(node, key)
        node = parent[resolved]

    if isinstance(node, list):
        parent, resolved = _step(node, last)
        parent[resolved] = value
    elif isinstance(node, dict):
        node[last] = value
    else:
        raise KeyError(f"cannot set {last!r} on {type(node).__name__}")
