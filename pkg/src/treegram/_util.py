from __future__ import annotations

from typing import Callable, Hashable, Iterable, Iterator, TypeVar

T = TypeVar("T", bound=Hashable)


class NameSupply:
    """Deterministic fresh nonterminal names that avoid a set of taken names."""

    def __init__(self, taken: Iterable[str] = (), prefix: str = "_N") -> None:
        self.taken = set(taken)
        self.prefix = prefix
        self.counter = 0

    def fresh(self, base: str | None = None) -> str:
        if base is not None:
            name = base
            k = 0
            while name in self.taken:
                k += 1
                name = f"{base}{k}"
            self.taken.add(name)
            return name
        while True:
            self.counter += 1
            name = f"{self.prefix}{self.counter}"
            if name not in self.taken:
                self.taken.add(name)
                return name

    def reserve(self, name: str) -> None:
        self.taken.add(name)


def postorder(roots: Iterable[T], children: Callable[[T], Iterable[T]]) -> list[T]:
    """Iterative DFS post-order over a DAG, visiting every node once."""
    seen: set[T] = set()
    out: list[T] = []
    for root in roots:
        if root in seen:
            continue
        seen.add(root)
        stack: list[tuple[T, Iterator[T]]] = [(root, iter(children(root)))]
        while stack:
            node, it = stack[-1]
            for child in it:
                if child not in seen:
                    seen.add(child)
                    stack.append((child, iter(children(child))))
                    break
            else:
                stack.pop()
                out.append(node)
    return out
