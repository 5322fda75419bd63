"""
Tree space on five leaves
Ten splits, fifteen quadrants and the Petersen link at the origin
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Tuple

import networkx as nx

from cat0.errors import DomainError, IncompatibleSplits, MalformedInput
from cat0.models import TreeIn, parse_tree
from cat0.services.single_vertex import (
    ORIGIN,
    Cone,
    ConePoint,
    LinkPoint,
    SingleVertexComplex,
    cube_point,
    geodesic,
)

logger = logging.getLogger(__name__)

LEAVES: FrozenSet[int] = frozenset(range(1, 6))


@dataclass(frozen=True)
class Split:
    """Bipartition of the leaves; `side` is the part holding leaf 1"""
    side: Tuple[int, ...]

    @property
    def other(self) -> Tuple[int, ...]:
        return tuple(sorted(LEAVES - set(self.side)))

    def parts(self) -> Tuple[FrozenSet[int], FrozenSet[int]]:
        return frozenset(self.side), frozenset(self.other)

    def __str__(self):
        return "".join(map(str, self.side)) + "|" + "".join(map(str, self.other))

    @classmethod
    def of(cls, part) -> "Split":
        part = frozenset(part)
        if not part < LEAVES or not 2 <= len(part) <= 3:
            raise MalformedInput(f"Not a split side of 1..5: {sorted(part)}")
        side = part if 1 in part else LEAVES - part
        return cls(tuple(sorted(side)))

    @classmethod
    def parse(cls, text: str) -> "Split":
        try:
            left, right = text.split("|")
            a, b = {int(ch) for ch in left}, {int(ch) for ch in right}
        except ValueError as e:
            raise MalformedInput(f"Bad split {text!r}") from e
        if a & b or a | b != LEAVES or len(left) != len(a) or len(right) != len(b):
            raise MalformedInput(f"Split {text!r} is not a bipartition of 1..5")
        return cls.of(a)


def all_splits() -> List[Split]:
    return sorted({Split.of(p) for p in combinations(sorted(LEAVES), 2)}, key=str)


def splits_compatible(s1: Split, s2: Split) -> bool:
    if s1 == s2:
        raise DomainError(f"Split {s1} compared with itself")
    return any(not (a & b) for a in s1.parts() for b in s2.parts())


@dataclass(frozen=True)
class TreeShape:
    splits: Tuple[Split, Split]

    @property
    def id(self) -> str:
        return f"{self.splits[0]}+{self.splits[1]}"


def tree_shapes() -> List[TreeShape]:
    return [TreeShape((a, b)) for a, b in combinations(all_splits(), 2) if splits_compatible(a, b)]


@lru_cache
def build_t5() -> SingleVertexComplex:
    """One ray per split, one right-angled cone per tree shape"""
    rays = [str(s) for s in all_splits()]
    cones = {}
    for shape in tree_shapes():
        a, b = shape.splits
        cones[shape.id] = Cone(shape.id, (str(a), str(b)), math.pi / 2)
    t5 = SingleVertexComplex(rays, cones)
    logger.debug(f"Built T5 with {len(rays)} rays and {len(cones)} quadrants")
    return t5


def is_petersen(c: SingleVertexComplex) -> bool:
    g = nx.Graph(c.link.graph)
    return nx.is_isomorphic(g, nx.petersen_graph())


def nonplanarity_witness(c: SingleVertexComplex) -> Optional[nx.Graph]:
    """Kuratowski subgraph of the link, or None when the link is planar"""
    planar, certificate = nx.check_planarity(nx.Graph(c.link.graph), counterexample=True)
    return None if planar else certificate


@dataclass(frozen=True)
class Tree5:
    lengths: Tuple[Tuple[Split, float], ...]

    @classmethod
    def from_lengths(cls, lengths: Dict[str, float]) -> "Tree5":
        parsed = {}
        for text, length in lengths.items():
            s = Split.parse(text)
            if s in parsed:
                raise MalformedInput(f"Split {s} given twice")
            if length < 0:
                raise MalformedInput(f"Negative length on split {s}")
            parsed[s] = float(length)
        return cls(tuple(sorted(parsed.items(), key=lambda kv: str(kv[0]))))

    @classmethod
    def from_model(cls, model: TreeIn) -> "Tree5":
        return cls.from_lengths({s.split: s.length for s in model.splits})

    def positive(self) -> List[Tuple[Split, float]]:
        return [(s, w) for s, w in self.lengths if w > 0]


def load_tree(data) -> Tree5:
    return Tree5.from_model(parse_tree(data))


def tree_to_point(t: Tree5, t5: Optional[SingleVertexComplex] = None) -> ConePoint:
    """Zero interior lengths collapse onto a ray or the origin"""
    t5 = t5 or build_t5()
    edges = t.positive()
    if not edges:
        return ORIGIN
    if len(edges) == 1:
        s, w = edges[0]
        return ConePoint(LinkPoint(node=str(s)), w)
    (s1, w1), (s2, w2) = sorted(edges, key=lambda e: str(e[0]))
    if not splits_compatible(s1, s2):
        raise IncompatibleSplits(f"Splits {s1} and {s2} cannot share a tree")
    cone = TreeShape((s1, s2)).id
    return cube_point(t5, cone, w1, w2)


def bhv_distance(t1: Tree5, t2: Tree5) -> float:
    t5 = build_t5()
    return geodesic(t5, tree_to_point(t1, t5), tree_to_point(t2, t5)).length
