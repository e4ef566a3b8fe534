"""
The dyadic grid {D_j} on S = R^n ⋊ R

Each half of S is covered by a chain of CZ sets R_0 ⊂ R_1 ⊂ … grown by the
parent constructions (horizontal first, vertical when the horizontal side
condition fails). Level j consists of

    N_j   all lattice translates of the cube of R_j times the interval of R_j
    Ñ_ℓ   for every vertical step ℓ >= j, the translates of the sibling added
          at that step, subdivided ℓ − j times by the canonical split

Levels below 0 come from splitting D_0.
"""
import itertools
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .czset import (
    CZSet,
    DyadicCube,
    ParentKind,
    admissible_exponents,
    can_extend_horizontally,
    intersects,
    parent,
    split,
)
from .errors import (
    CZGridError,
    DimensionMismatchError,
    GridConfigurationError,
    HorizonError,
    InvalidSetIdError,
)
from .geometry import GroupPoint
from .schemas.report import ChainEntryRecord, LocatedIdRecord

logger = logging.getLogger(__name__)


class Half(str, Enum):
    """Ω₁ = R^n × [0, ∞) and Ω₂ = R^n × (−∞, 0)"""

    UPPER = "omega1"
    LOWER = "omega2"


class Band(str, Enum):
    N = "N"
    TILDE = "Ntilde"


# (t_0, r_0, vertical parent kind) of each chain
_SEEDS = {
    Half.UPPER: (Fraction(1), Fraction(1), ParentKind.VERTICAL_UP),
    Half.LOWER: (Fraction(-1), Fraction(1), ParentKind.VERTICAL_DOWN),
}

_RADIUS_GROWTH = {
    ParentKind.HORIZONTAL: 1,
    ParentKind.VERTICAL_UP: 2,
    ParentKind.VERTICAL_DOWN: 3,
}


@dataclass(frozen=True)
class ChainEntry:
    """R_j = [0, 2^k)^n × [t − r, t + r); `ext` is the step from R_j to R_{j+1}"""

    half: Half
    j: int
    k: int
    t: Fraction
    r: Fraction
    ext: ParentKind

    @property
    def side(self) -> Fraction:
        return Fraction(2) ** self.k

    @property
    def is_vertical(self) -> bool:
        return self.ext != ParentKind.HORIZONTAL

    @property
    def next_r(self) -> Fraction:
        return self.r * _RADIUS_GROWTH[self.ext]

    def strip_bounds(self) -> Tuple[Fraction, Fraction]:
        return self.t - self.r, self.t + self.r

    def tilde_params(self) -> Tuple[Fraction, Fraction]:
        """(t, r) of the sibling added by the vertical step at this entry"""
        if self.ext == ParentKind.VERTICAL_UP:
            return self.t + 2 * self.r, self.r
        if self.ext == ParentKind.VERTICAL_DOWN:
            return self.t - 3 * self.r, 2 * self.r
        raise InvalidSetIdError(f"Entry {self.j} of {self.half.value} has no vertical sibling")

    def tilde_bounds(self) -> Tuple[Fraction, Fraction]:
        t, r = self.tilde_params()
        return t - r, t + r

    def czset(self, cell: Sequence[int]) -> CZSet:
        return CZSet(DyadicCube(self.k, tuple(cell)), self.t, self.r)

    def to_record(self, n: int) -> ChainEntryRecord:
        return ChainEntryRecord(
            half=self.half.value,
            j=self.j,
            k=self.k,
            t=str(self.t),
            r=str(self.r),
            ext=self.ext.value,
            set=self.czset((0,) * n).text(),
        )


def build_chain(half: Half, length: int) -> List[ChainEntry]:
    """
    First `length` entries of the chain of one half

    The seed is the smallest admissible side for (t_0, r_0); every step is
    horizontal while e^t e^{2r} <= L < e^t e^{8r}/2 holds, vertical otherwise.
    """
    t, r, vertical = _SEEDS[half]
    R = CZSet(DyadicCube(min(admissible_exponents(t, r)), (0,)), t, r)
    entries: List[ChainEntry] = []
    for j in range(length):
        kind = ParentKind.HORIZONTAL if can_extend_horizontally(R.cube.k, R.t, R.r) else vertical
        entries.append(ChainEntry(half, j, R.cube.k, R.t, R.r, kind))
        R, _ = parent(R, kind)
    return entries


@dataclass(frozen=True, order=True)
class DyadicSetId:
    """
    Address of a grid set

    strip is the chain index ℓ of the originating N_ℓ or Ñ_ℓ set, cell the
    lattice position of its cube and path the child indices of the
    canonical splits below it. N cells at levels >= 0 have an empty path;
    lower levels hang below strip 0.
    """

    half: Half
    strip: int
    band: Band
    cell: Tuple[int, ...]
    path: Tuple[int, ...] = ()

    @property
    def level(self) -> int:
        return self.strip - len(self.path)

    @property
    def n(self) -> int:
        return len(self.cell)

    def child(self, index: int) -> "DyadicSetId":
        return replace(self, path=self.path + (index,))

    def text(self) -> str:
        cell = ",".join(str(c) for c in self.cell)
        path = ".".join(str(i) for i in self.path)
        return f"{self.half.value}:{self.band.value}:{self.strip}:{cell}:{path}"

    @classmethod
    def from_text(cls, text: str) -> "DyadicSetId":
        try:
            half, band, strip, cell, path = text.split(":")
            return cls(
                Half(half),
                int(strip),
                Band(band),
                tuple(int(c) for c in cell.split(",")),
                tuple(int(i) for i in path.split(".")) if path else (),
            )
        except ValueError as e:
            raise InvalidSetIdError(f"Malformed set id: {text!r}") from e

    def __str__(self) -> str:
        return self.text()


def level(set_id: DyadicSetId) -> int:
    return set_id.level


class DyadicGrid:
    """
    Lazily resolved dyadic grid with an explicit horizon

    Navigation is restricted to levels [j_lo, j_hi]; the chains are built
    far enough that every |t| < t_extent is covered. Queries beyond either
    range raise HorizonError instead of growing the grid.

    Example:
        >>> grid = build_grid(n=1, j_lo=-8, j_hi=12)
        >>> grid.resolve(grid.locate(GroupPoint((0.0,), 0.0), 0)).text()
        '1 5 0 1 1'
    """

    def __init__(self, n: int, j_lo: int, j_hi: int, t_extent: float = 8.0):
        if n < 1:
            raise GridConfigurationError(f"Dimension must be >= 1, got {n}")
        if not j_lo <= 0 <= j_hi:
            raise GridConfigurationError(f"Need j_lo <= 0 <= j_hi, got [{j_lo}, {j_hi}]")
        if t_extent <= 0:
            raise GridConfigurationError(f"t_extent must be positive, got {t_extent}")

        self.n = n
        self.j_lo = j_lo
        self.j_hi = j_hi
        self.t_extent = t_extent
        self._chains: Dict[Half, List[ChainEntry]] = {
            half: self._grow_chain(half) for half in Half
        }
        self._resolved: Dict[DyadicSetId, CZSet] = {}

        for half, chain in self._chains.items():
            logger.info(
                f"Built {half.value} chain: {len(chain)} entries, "
                f"|t| < {float(self.coverage(half))}, "
                f"{sum(e.is_vertical for e in chain)} vertical steps"
            )

    def _grow_chain(self, half: Half) -> List[ChainEntry]:
        length = self.j_hi + 2
        while True:
            chain = build_chain(half, length)
            if 2 * chain[-1].next_r >= self.t_extent:
                return chain
            logger.debug(f"Extending {half.value} chain beyond {length} entries")
            length *= 2

    # Chains

    def chain(self, half: Half) -> Tuple[ChainEntry, ...]:
        return tuple(self._chains[half])

    def entry(self, half: Half, j: int) -> ChainEntry:
        chain = self._chains[half]
        if not 0 <= j < len(chain):
            raise HorizonError(
                f"Chain entry {j} of {half.value} is not built (have {len(chain)})",
                required_level=j,
            )
        return chain[j]

    def coverage(self, half: Half) -> Fraction:
        """Vertical reach of the built chain: |t| < coverage"""
        return 2 * self._chains[half][-1].next_r

    def extended(
        self, j_lo: Optional[int] = None, j_hi: Optional[int] = None, t_extent: Optional[float] = None
    ) -> "DyadicGrid":
        """A grid with a wider horizon; ids and sets agree with this one"""
        return DyadicGrid(
            self.n,
            min(self.j_lo, j_lo if j_lo is not None else self.j_lo),
            max(self.j_hi, j_hi if j_hi is not None else self.j_hi),
            max(self.t_extent, t_extent if t_extent is not None else self.t_extent),
        )

    # Sets

    def _check_dims(self, n: int) -> None:
        if n != self.n:
            raise DimensionMismatchError(f"Dimension mismatch: grid has n={self.n}, got {n}")

    def _top_set(self, set_id: DyadicSetId) -> CZSet:
        entry = self.entry(set_id.half, set_id.strip)
        if set_id.band == Band.N:
            if set_id.path and set_id.strip != 0:
                raise InvalidSetIdError(f"N cells only carry a path below strip 0: {set_id}")
            return entry.czset(set_id.cell)
        t, r = entry.tilde_params()
        return CZSet(DyadicCube(entry.k, set_id.cell), t, r)

    def resolve(self, set_id: DyadicSetId) -> CZSet:
        """The CZ set addressed by set_id"""
        cached = self._resolved.get(set_id)
        if cached is not None:
            return cached
        self._check_dims(set_id.n)
        if set_id.strip < 0:
            raise InvalidSetIdError(f"Negative strip in {set_id}")

        if not set_id.path:
            result = self._top_set(set_id)
        else:
            pieces = split(self.resolve(replace(set_id, path=set_id.path[:-1])))
            index = set_id.path[-1]
            if not 0 <= index < len(pieces):
                raise InvalidSetIdError(f"Child index {index} out of range in {set_id}")
            result = pieces[index]

        self._resolved[set_id] = result
        return result

    def measure(self, set_id: DyadicSetId) -> Fraction:
        return self.resolve(set_id).measure()

    def children(self, set_id: DyadicSetId) -> List[DyadicSetId]:
        """
        The ids one level down partitioning set_id

        Below an N cell at a chain level the pieces follow the chain step;
        everywhere else they follow the canonical split.
        """
        if set_id.level - 1 < self.j_lo:
            raise HorizonError(
                f"Level {set_id.level - 1} is below the grid horizon {self.j_lo}",
                required_level=set_id.level - 1,
            )
        if set_id.band == Band.N and not set_id.path and set_id.strip >= 1:
            half, cell = set_id.half, set_id.cell
            below = self.entry(half, set_id.strip - 1)
            tilde = DyadicSetId(half, below.j, Band.TILDE, cell)
            same = DyadicSetId(half, below.j, Band.N, cell)
            if below.ext == ParentKind.HORIZONTAL:
                return [
                    DyadicSetId(half, below.j, Band.N, tuple(2 * c + o for c, o in zip(cell, off)))
                    for off in itertools.product((0, 1), repeat=self.n)
                ]
            if below.ext == ParentKind.VERTICAL_UP:
                return [same, tilde]
            return [tilde, same]

        count = len(split(self.resolve(set_id)))
        return [set_id.child(i) for i in range(count)]

    def parent_id(self, set_id: DyadicSetId) -> DyadicSetId:
        """The unique id one level up containing set_id"""
        if set_id.level + 1 > self.j_hi:
            raise HorizonError(
                f"Level {set_id.level + 1} is above the grid horizon {self.j_hi}",
                required_level=set_id.level + 1,
            )
        if set_id.path:
            return replace(set_id, path=set_id.path[:-1])
        entry = self.entry(set_id.half, set_id.strip)
        if set_id.band == Band.N and entry.ext == ParentKind.HORIZONTAL:
            cell = tuple(c // 2 for c in set_id.cell)
            return DyadicSetId(set_id.half, set_id.strip + 1, Band.N, cell)
        return DyadicSetId(set_id.half, set_id.strip + 1, Band.N, set_id.cell)

    def ancestor(self, set_id: DyadicSetId, target_level: int) -> DyadicSetId:
        if target_level < set_id.level:
            raise InvalidSetIdError(f"Level {target_level} is below {set_id}")
        node = set_id
        while node.level < target_level:
            node = self.parent_id(node)
        return node

    def is_ancestor(self, ancestor: DyadicSetId, set_id: DyadicSetId) -> bool:
        """True iff set_id ⊆ ancestor (equality included)"""
        if ancestor.half != set_id.half or ancestor.level < set_id.level:
            return False
        return self.ancestor(set_id, ancestor.level) == ancestor

    def descendants(self, set_id: DyadicSetId, target_level: int) -> List[DyadicSetId]:
        """All ids at target_level below set_id, in depth-first order"""
        if target_level > set_id.level:
            raise InvalidSetIdError(f"Level {target_level} is above {set_id}")
        if target_level == set_id.level:
            return [set_id]
        return [d for c in self.children(set_id) for d in self.descendants(c, target_level)]

    # Point location

    def _check_level(self, j: int) -> None:
        if not self.j_lo <= j <= self.j_hi:
            raise HorizonError(
                f"Level {j} outside the grid horizon [{self.j_lo}, {self.j_hi}]; extend the grid",
                required_level=j,
            )

    def _band_ranges(
        self, half: Half, j0: int
    ) -> Iterator[Tuple[Fraction, Fraction, ChainEntry, Band]]:
        """Vertical bands of level j0 >= 0 from t = 0 outwards"""
        chain = self._chains[half]
        first = self.entry(half, j0)
        lo, hi = first.strip_bounds()
        yield lo, hi, first, Band.N
        for entry in chain[j0:]:
            if entry.is_vertical:
                lo, hi = entry.tilde_bounds()
                yield lo, hi, entry, Band.TILDE

    def _strip_containing(self, p: GroupPoint, j0: int) -> DyadicSetId:
        half = Half.UPPER if p.t >= 0 else Half.LOWER
        for lo, hi, entry, band in self._band_ranges(half, j0):
            if lo <= p.t < hi:
                cell = DyadicCube.containing(p.x, entry.k).m
                return DyadicSetId(half, entry.j, band, cell)
        raise HorizonError(
            f"t={p.t} lies beyond the built vertical range |t| < {float(self.coverage(half))}; "
            f"extend the grid with a larger t_extent"
        )

    def locate(self, p: GroupPoint, j: int) -> DyadicSetId:
        """The unique level-j id whose set contains p"""
        self._check_dims(p.n)
        self._check_level(j)
        node = self._strip_containing(p, max(j, 0))
        while node.level > j:
            for child in self.children(node):
                if self.resolve(child).contains(p):
                    node = child
                    break
            else:
                raise CZGridError(f"No child of {node} contains {p}")
        return node

    def enumerate_level(self, j: int, window: Union[CZSet, DyadicSetId]) -> List[DyadicSetId]:
        """All level-j ids whose sets intersect window, in depth-first order"""
        self._check_level(j)
        if isinstance(window, DyadicSetId):
            window = self.resolve(window)
        self._check_dims(window.n)

        j0 = max(j, 0)
        roots: List[DyadicSetId] = []
        for half in Half:
            if half == Half.UPPER and window.top <= 0:
                continue
            if half == Half.LOWER and window.bottom >= 0:
                continue
            reached = False
            for lo, hi, entry, band in self._band_ranges(half, j0):
                if hi > window.bottom and lo < window.top:
                    roots.extend(self._cells_over(window, half, entry, band))
                if (half == Half.UPPER and hi >= window.top) or (
                    half == Half.LOWER and lo <= window.bottom
                ):
                    reached = True
                    break
            if not reached:
                raise HorizonError(
                    f"Window {window.text()} reaches beyond the built vertical range; extend the grid"
                )

        found: List[DyadicSetId] = []
        stack = list(reversed(roots))
        while stack:
            node = stack.pop()
            if not intersects(self.resolve(node), window):
                continue
            if node.level == j:
                found.append(node)
            else:
                stack.extend(reversed(self.children(node)))
        return found

    def _cells_over(
        self, window: CZSet, half: Half, entry: ChainEntry, band: Band
    ) -> List[DyadicSetId]:
        side = entry.side
        ranges = [
            range(math.floor(lo / side), math.ceil(hi / side))
            for lo, hi in zip(window.cube.lower(), window.cube.upper())
        ]
        return [DyadicSetId(half, entry.j, band, cell) for cell in itertools.product(*ranges)]

    # Dumps

    def chain_records(self) -> List[ChainEntryRecord]:
        return [e.to_record(self.n) for half in Half for e in self._chains[half]]

    def located_record(self, p: GroupPoint, j: int) -> LocatedIdRecord:
        set_id = self.locate(p, j)
        return LocatedIdRecord(
            x=list(p.x), t=p.t, level=set_id.level, id=set_id.text(), set=self.resolve(set_id).text()
        )


def build_grid(n: int, j_lo: int, j_hi: int, t_extent: float = 8.0) -> DyadicGrid:
    """Build the canonical grid of dimension n navigable on levels [j_lo, j_hi]"""
    return DyadicGrid(n, j_lo, j_hi, t_extent)
