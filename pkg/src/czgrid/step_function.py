"""
Step functions on dyadic windows

A Window is a grid set (the root) together with a partition of it by grid
sets (the leaves). Leaves are kept in depth-first order so that every node
of the window tree owns a contiguous slice of them. A StepFunction holds one
value per leaf and vanishes outside the root.
"""
import logging
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .errors import InvalidFunctionError
from .geometry import GroupPoint
from .grid import DyadicGrid, DyadicSetId
from .schemas.function import LeafValue, StepFunctionModel

logger = logging.getLogger(__name__)


class Window:
    """
    A root grid set partitioned into leaf grid sets

    Raises:
        InvalidFunctionError: If the leaves do not partition the root
    """

    def __init__(self, grid: DyadicGrid, root: DyadicSetId, leaves: Iterable[DyadicSetId]):
        self.grid = grid
        self.root = root
        leaf_set = set(leaves)
        if not leaf_set:
            raise InvalidFunctionError("A window needs at least one leaf")

        internal: Set[DyadicSetId] = set()
        for leaf in leaf_set:
            if leaf.half != root.half or leaf.level > root.level:
                raise InvalidFunctionError(f"Leaf {leaf} is not below root {root}")
            node = leaf
            while node.level < root.level:
                node = grid.parent_id(node)
                internal.add(node)
            if node != root:
                raise InvalidFunctionError(f"Leaf {leaf} is not below root {root}")

        overlap = leaf_set & internal
        if overlap:
            raise InvalidFunctionError(f"Leaves overlap: {sorted(overlap)[0]} contains another leaf")

        self._children: Dict[DyadicSetId, List[DyadicSetId]] = {}
        self._span: Dict[DyadicSetId, Tuple[int, int]] = {}
        order: List[DyadicSetId] = []
        self._collect(root, leaf_set, internal, order)

        self.leaves: Tuple[DyadicSetId, ...] = tuple(order)
        self._leaf_index = {leaf: i for i, leaf in enumerate(self.leaves)}
        self.exact_measures: Tuple[Fraction, ...] = tuple(grid.measure(leaf) for leaf in self.leaves)
        self.measures = np.array([float(m) for m in self.exact_measures])
        self.measures.setflags(write=False)

    def _collect(
        self,
        node: DyadicSetId,
        leaf_set: Set[DyadicSetId],
        internal: Set[DyadicSetId],
        order: List[DyadicSetId],
    ) -> None:
        start = len(order)
        if node in leaf_set:
            order.append(node)
        elif node in internal:
            kids = self.grid.children(node)
            missing = [k for k in kids if k not in leaf_set and k not in internal]
            if missing:
                raise InvalidFunctionError(f"Leaves do not cover {missing[0]} under {node}")
            self._children[node] = kids
            for kid in kids:
                self._collect(kid, leaf_set, internal, order)
        self._span[node] = (start, len(order))

    # Construction

    @classmethod
    def uniform(cls, grid: DyadicGrid, root: DyadicSetId, base_level: int) -> "Window":
        """All descendants of root at base_level as leaves"""
        return cls(grid, root, grid.descendants(root, base_level))

    @classmethod
    def refined_to(cls, grid: DyadicGrid, root: DyadicSetId, targets: Iterable[DyadicSetId]) -> "Window":
        """The coarsest window under root in which every target is a node"""
        marks: Set[DyadicSetId] = set()
        for target in targets:
            if target.half != root.half or target.level > root.level:
                raise InvalidFunctionError(f"Target {target} is not below root {root}")
            node = target
            while node.level < root.level:
                node = grid.parent_id(node)
                marks.add(node)
            if node != root:
                raise InvalidFunctionError(f"Target {target} is not below root {root}")

        leaves: List[DyadicSetId] = []
        stack = [root]
        while stack:
            node = stack.pop()
            if node in marks:
                stack.extend(grid.children(node))
            else:
                leaves.append(node)
        return cls(grid, root, leaves)

    def lifted_to(self, ancestor: DyadicSetId) -> "Window":
        """The window rooted at an ancestor of root; new leaves are the siblings along the way"""
        if not self.grid.is_ancestor(ancestor, self.root):
            raise InvalidFunctionError(f"{ancestor} is not an ancestor of {self.root}")
        leaves = list(self.leaves)
        node = self.root
        while node != ancestor:
            parent = self.grid.parent_id(node)
            leaves.extend(k for k in self.grid.children(parent) if k != node)
            node = parent
        return Window(self.grid, ancestor, leaves)

    def lifted(self, levels: int = 1) -> "Window":
        if levels < 0:
            raise InvalidFunctionError(f"Cannot lift by {levels} levels")
        return self.lifted_to(self.grid.ancestor(self.root, self.root.level + levels))

    # Tree queries

    @property
    def size(self) -> int:
        return len(self.leaves)

    @property
    def level(self) -> int:
        return self.root.level

    def nodes(self) -> List[DyadicSetId]:
        """Every node of the window tree in depth-first order"""
        return list(self._span)

    def is_node(self, set_id: DyadicSetId) -> bool:
        return set_id in self._span

    def is_leaf(self, set_id: DyadicSetId) -> bool:
        return set_id in self._leaf_index

    def span(self, set_id: DyadicSetId) -> Optional[Tuple[int, int]]:
        return self._span.get(set_id)

    def leaf_index(self, set_id: DyadicSetId) -> Optional[int]:
        return self._leaf_index.get(set_id)

    def node_children(self, set_id: DyadicSetId) -> List[DyadicSetId]:
        """Children inside the window tree; empty for leaves"""
        return self._children.get(set_id, [])

    def leaf_containing(self, p: GroupPoint) -> Optional[DyadicSetId]:
        node = self.root
        if not self.grid.resolve(node).contains(p):
            return None
        while node in self._children:
            node = next(k for k in self._children[node] if self.grid.resolve(k).contains(p))
        return node

    def same_partition(self, other: "Window") -> bool:
        return self is other or (self.root == other.root and self.leaves == other.leaves)

    def __repr__(self) -> str:
        return f"Window(root={self.root}, leaves={self.size})"


class StepFunction:
    """
    Piecewise-constant function, one value per window leaf, zero outside the root

    Example:
        >>> f = StepFunction.constant(window, 1.0)
        >>> f.integral(window.root) == float(grid.measure(window.root))
        True
    """

    def __init__(self, window: Window, values: Union[Sequence[float], np.ndarray]):
        array = np.array(values, dtype=float)
        if array.shape != (window.size,):
            raise InvalidFunctionError(
                f"Expected {window.size} values for {window}, got shape {array.shape}"
            )
        if not np.all(np.isfinite(array)):
            raise InvalidFunctionError("Step function values must be finite")
        array.setflags(write=False)
        self.window = window
        self.values = array

    # Construction

    @classmethod
    def constant(cls, window: Window, c: float) -> "StepFunction":
        return cls(window, np.full(window.size, float(c)))

    @classmethod
    def indicator(cls, window: Window, set_id: DyadicSetId) -> "StepFunction":
        """χ of a node of the window"""
        span = window.span(set_id)
        if span is None:
            raise InvalidFunctionError(f"{set_id} is not a node of {window}")
        values = np.zeros(window.size)
        values[span[0] : span[1]] = 1.0
        return cls(window, values)

    @classmethod
    def from_mapping(cls, window: Window, mapping: Mapping[DyadicSetId, float]) -> "StepFunction":
        values = np.zeros(window.size)
        for set_id, value in mapping.items():
            index = window.leaf_index(set_id)
            if index is None:
                raise InvalidFunctionError(f"{set_id} is not a leaf of {window}")
            values[index] = value
        return cls(window, values)

    def lifted_to(self, ancestor: DyadicSetId) -> "StepFunction":
        """The same function on a window rooted at an ancestor"""
        if ancestor == self.window.root:
            return self
        window = self.window.lifted_to(ancestor)
        known = self.as_dict()
        return StepFunction(window, [known.get(leaf, 0.0) for leaf in window.leaves])

    def lifted(self, levels: int = 1) -> "StepFunction":
        """The same function on the window lifted by `levels`, zero on the new leaves"""
        return self.lifted_to(self.window.lifted(levels).root)

    # Evaluation

    def value(self, leaf: DyadicSetId) -> float:
        index = self.window.leaf_index(leaf)
        if index is None:
            raise InvalidFunctionError(f"{leaf} is not a leaf of {self.window}")
        return float(self.values[index])

    def value_at(self, p: GroupPoint) -> float:
        leaf = self.window.leaf_containing(p)
        return 0.0 if leaf is None else self.value(leaf)

    def integral(self, set_id: DyadicSetId) -> float:
        """∫ f over a grid set, with f extended by zero outside the root"""
        window = self.window
        span = window.span(set_id)
        if span is not None:
            start, stop = span
            return float(np.dot(self.values[start:stop], window.measures[start:stop]))

        root = window.root
        grid = window.grid
        if set_id.half != root.half:
            return 0.0
        if set_id.level >= root.level:
            if grid.ancestor(root, set_id.level) == set_id:
                return float(np.dot(self.values, window.measures))
            return 0.0

        node = set_id
        while node.level < root.level:
            node = grid.parent_id(node)
            index = window.leaf_index(node)
            if index is not None:
                return float(self.values[index]) * float(grid.measure(set_id))
        return 0.0

    def average(self, set_id: DyadicSetId) -> float:
        return self.integral(set_id) / float(self.window.grid.measure(set_id))

    def lp_norm(self, p: float) -> float:
        """(Σ |v|^p ρ(leaf))^{1/p}; the sup of |v| for p = inf"""
        if p == float("inf"):
            return float(np.max(np.abs(self.values)))
        if not p > 0:
            raise InvalidFunctionError(f"p must lie in (0, inf], got {p}")
        return float(np.dot(np.abs(self.values) ** p, self.window.measures) ** (1.0 / p))

    def distribution(self, alpha: float) -> float:
        """ρ({|f| > α})"""
        if alpha < 0:
            raise InvalidFunctionError(f"alpha must be >= 0, got {alpha}")
        return float(np.sum(self.window.measures[np.abs(self.values) > alpha]))

    def total(self) -> float:
        return float(np.dot(self.values, self.window.measures))

    # Arithmetic

    def _check_window(self, other: "StepFunction") -> None:
        if not self.window.same_partition(other.window):
            raise InvalidFunctionError("Step functions live on different windows")

    def __add__(self, other: "StepFunction") -> "StepFunction":
        self._check_window(other)
        return StepFunction(self.window, self.values + other.values)

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        self._check_window(other)
        return StepFunction(self.window, self.values - other.values)

    def __mul__(self, scalar: float) -> "StepFunction":
        return StepFunction(self.window, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "StepFunction":
        return StepFunction(self.window, -self.values)

    def __abs__(self) -> "StepFunction":
        return StepFunction(self.window, np.abs(self.values))

    # Export

    def as_dict(self) -> Dict[DyadicSetId, float]:
        return {leaf: float(v) for leaf, v in zip(self.window.leaves, self.values)}

    def to_model(self) -> StepFunctionModel:
        return StepFunctionModel(
            n=self.window.grid.n,
            root=self.window.root.text(),
            leaves=[LeafValue(id=leaf.text(), value=float(v)) for leaf, v in self.as_dict().items()],
        )

    @classmethod
    def from_model(cls, grid: DyadicGrid, model: StepFunctionModel) -> "StepFunction":
        if model.n != grid.n:
            raise InvalidFunctionError(f"Function has n={model.n}, grid has n={grid.n}")
        ids = [DyadicSetId.from_text(leaf.id) for leaf in model.leaves]
        window = Window(grid, DyadicSetId.from_text(model.root), ids)
        return cls.from_mapping(window, {i: leaf.value for i, leaf in zip(ids, model.leaves)})

    def __repr__(self) -> str:
        return f"StepFunction({self.window!r})"


def integral(f: StepFunction, set_id: DyadicSetId) -> float:
    return f.integral(set_id)


def average(f: StepFunction, set_id: DyadicSetId) -> float:
    return f.average(set_id)


def lp_norm(f: StepFunction, p: float) -> float:
    return f.lp_norm(p)


def distribution(f: StepFunction, alpha: float) -> float:
    return f.distribution(alpha)


def random_step_function(
    window: Window, density: float, rng: np.random.Generator
) -> StepFunction:
    """Values uniform on [−1, 1] kept with probability `density`, zero otherwise"""
    if not 0 < density <= 1:
        raise InvalidFunctionError(f"density must lie in (0, 1], got {density}")
    values = rng.uniform(-1.0, 1.0, size=window.size)
    mask = rng.random(window.size) < density
    return StepFunction(window, values * mask)
