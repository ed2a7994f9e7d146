"""Symbol registry shared by every polynomial in the toolkit."""

from __future__ import annotations

PHASE = ("x", "y", "z", "w")
PHASE_QP = ("q1", "p1", "q2", "p2")
CHART_COORDS = tuple(f"{v}{j}" for j in (1, 2, 3) for v in ("x", "y", "z", "w"))
TIMES = ("t", "s")
PARAMS = ("alpha1", "alpha2", "alpha3")
FAMILY = ("a", "a1", "a2", "a3")

DEFAULT_NAMES = PHASE + PHASE_QP + CHART_COORDS + TIMES + PARAMS + FAMILY


class VarRegistry:
    """Fixed, ordered list of symbol names.

    The position of a name is its variable index; the order is also the
    variable order of the graded-lexicographic monomial order.
    """

    def __init__(self, names):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError("duplicate symbol names in registry")
        for n in names:
            if not n or not (n[0].isalpha() and n.replace("_", "a").isalnum()):
                raise ValueError(f"invalid symbol name {n!r}")
        self.names = names
        self._index = {n: i for i, n in enumerate(names)}

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self._index

    def __iter__(self):
        return iter(self.names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownSymbolError(name) from None

    def __repr__(self):
        return f"VarRegistry({', '.join(self.names)})"


class UnknownSymbolError(KeyError):
    def __init__(self, name):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"unknown symbol {self.name!r}"


REGISTRY = VarRegistry(DEFAULT_NAMES)
