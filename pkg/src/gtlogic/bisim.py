"""Graded bisimulation: partition refinement, ratio checks and bounded games."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Optional

import numpy as np

from .graphs import LabeledGraph, disjoint_union

GAME_BUDGET = 2_000_000
VARIANTS = ("down-only", "up-down", "up-ungraded-down-graded")


@dataclass(frozen=True)
class TypePartition:
    n1: int
    n2: int
    classes: tuple  # class id per vertex of g1 then g2, ids by first occurrence
    counts: tuple  # counts[t] = (multiplicity in g1, multiplicity in g2)

    def cls(self, side: int, v: int) -> int:
        return self.classes[v if side == 1 else self.n1 + v]

    @property
    def n_classes(self) -> int:
        return len(self.counts)

    def realized(self, side: int) -> set:
        return {t for t, c in enumerate(self.counts) if c[side - 1] > 0}

    def table(self) -> str:
        lines = ["class  count_g1  count_g2  vertices_g1  vertices_g2"]
        for t, (a, b) in enumerate(self.counts):
            v1 = [v for v in range(self.n1) if self.classes[v] == t]
            v2 = [v for v in range(self.n2) if self.classes[self.n1 + v] == t]
            lines.append(f"{t:5d}  {a:8d}  {b:8d}  {v1}  {v2}")
        return "\n".join(lines)


@dataclass(frozen=True)
class RatioWitness:
    q: Fraction

    def __str__(self):
        return f"q = {self.q}"


@dataclass(frozen=True)
class GameConfig:
    c: int
    rounds: int
    variant: str = "down-only"

    def __post_init__(self):
        if self.c < 0 or self.rounds < 0:
            raise ValueError("c and rounds must be >= 0")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")


class BudgetExceeded(RuntimeError):
    pass


def _canon(keys) -> list:
    ids = {}
    return [ids.setdefault(k, len(ids)) for k in keys]


def refine(adj: np.ndarray, lab: np.ndarray, cap: int = None, rounds: int = None) -> list:
    """Class ids per vertex after refining label classes by out-neighbor class counts.

    cap truncates counts (c-graded), rounds bounds the number of refinement
    steps; both default to the unbounded coarsest stable partition.
    """
    n = adj.shape[0]
    succ = [np.flatnonzero(adj[v]).tolist() for v in range(n)]
    cls = _canon(tuple(row) for row in np.asarray(lab).tolist())
    step = 0
    while rounds is None or step < rounds:
        keys = []
        for v in range(n):
            cnt = {}
            for u in succ[v]:
                cnt[cls[u]] = cnt.get(cls[u], 0) + 1
            if cap is not None:
                cnt = {t: min(k, cap) for t, k in cnt.items()}
            keys.append((cls[v], tuple(sorted(cnt.items()))))
        new = _canon(keys)
        step += 1
        if max(new) == max(cls):
            cls = new
            if rounds is None:
                break
            continue
        cls = new
    return cls


def graded_partition(g1: LabeledGraph, g2: LabeledGraph = None, cap: int = None,
                     rounds: int = None) -> TypePartition:
    g2 = g1 if g2 is None else g2
    u = disjoint_union(g1, g2)
    cls = refine(u.adjacency(), u.label_matrix(), cap, rounds)
    k = max(cls) + 1
    counts = [[0, 0] for _ in range(k)]
    for v, t in enumerate(cls):
        counts[t][0 if v < g1.n else 1] += 1
    return TypePartition(g1.n, g2.n, tuple(cls), tuple(map(tuple, counts)))


def check_graded_bisim(g1, v1, g2, v2) -> bool:
    p = graded_partition(g1, g2)
    return p.cls(1, v1) == p.cls(2, v2)


def check_global(g1, v1, g2, v2) -> bool:
    p = graded_partition(g1, g2)
    return p.cls(1, v1) == p.cls(2, v2) and p.realized(1) == p.realized(2)


def _common_ratio(pairs) -> Optional[Fraction]:
    pairs = [(a, b) for a, b in pairs if a or b]
    if not pairs or any(a == 0 or b == 0 for a, b in pairs):
        return None
    q = Fraction(pairs[0][0], pairs[0][1])
    return q if all(Fraction(a, b) == q for a, b in pairs) else None


def check_ratio(g1, v1, g2, v2) -> Optional[RatioWitness]:
    """q with count_1(t) = q * count_2(t) for every class t, if (v1, v2) share a class."""
    p = graded_partition(g1, g2)
    if p.cls(1, v1) != p.cls(2, v2):
        return None
    q = _common_ratio(p.counts)
    return RatioWitness(q) if q is not None else None


def label_ratio(g1, v1, g2, v2) -> Optional[RatioWitness]:
    """The ratio condition on label sets rather than bisimulation classes."""
    ell = max(g1.label_count, g2.label_count)
    m1 = g1.with_label_count(ell).label_matrix()
    m2 = g2.with_label_count(ell).label_matrix()
    if not np.array_equal(m1[v1], m2[v2]):
        return None
    keys = {}
    for side, m in ((0, m1), (1, m2)):
        for row in m:
            keys.setdefault(row.tobytes(), [0, 0])[side] += 1
    q = _common_ratio(keys.values())
    return RatioWitness(q) if q is not None else None


# -- games --------------------------------------------------------------------

def _lists(g: LabeledGraph):
    succ = [[] for _ in range(g.n)]
    pred = [[] for _ in range(g.n)]
    for u, v in g.edges:
        succ[u].append(v)
        pred[v].append(u)
    return succ, pred


def _subsets(items, c):
    for k in range(1, min(c, len(items)) + 1):
        yield from combinations(items, k)


def game_cost(g1, g2, cfg: GameConfig) -> int:
    """Rough count of (position, round, spoiler set) work items."""
    deg = max([len(g.successors(v)) + len(g.predecessors(v)) for g in (g1, g2) for v in range(g.n)] + [1])
    sets = sum(_binom(deg, k) for k in range(1, min(cfg.c, deg) + 1)) or 1
    return g1.n * g2.n * max(cfg.rounds, 1) * sets * 2 * deg


def _binom(n, k):
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out


def play_game(g1: LabeledGraph, v1: int, g2: LabeledGraph, v2: int, cfg: GameConfig,
              budget: int = GAME_BUDGET) -> bool:
    """True iff duplicator wins the c-graded game of cfg.rounds rounds from (v1, v2)."""
    if game_cost(g1, g2, cfg) > budget:
        raise BudgetExceeded("game too large for the solver budget")
    ell = max(g1.label_count, g2.label_count)
    lab1 = [r.tobytes() for r in g1.with_label_count(ell).label_matrix()]
    lab2 = [r.tobytes() for r in g2.with_label_count(ell).label_matrix()]
    s1, p1 = _lists(g1)
    s2, p2 = _lists(g2)
    c = cfg.c

    @lru_cache(maxsize=None)
    def win(a, b, r):
        if lab1[a] != lab2[b]:
            return False
        if r == 0:
            return True
        graded = [(s1[a], s2[b])]
        if cfg.variant == "up-down":
            graded.append((p1[a], p2[b]))
        for n1, n2 in graded:
            # spoiler proposes S on side 1; duplicator needs |S| vertices of
            # side 2 each matched by some vertex of S
            for S in _subsets(n1, c):
                good = sum(1 for y in n2 if any(win(x, y, r - 1) for x in S))
                if good < len(S):
                    return False
            for S in _subsets(n2, c):
                good = sum(1 for x in n1 if any(win(x, y, r - 1) for y in S))
                if good < len(S):
                    return False
        if cfg.variant == "up-ungraded-down-graded":
            for x in p1[a]:
                if not any(win(x, y, r - 1) for y in p2[b]):
                    return False
            for y in p2[b]:
                if not any(win(x, y, r - 1) for x in p1[a]):
                    return False
        return True

    return win(v1, v2, cfg.rounds)


def bounded_equivalent(g1, v1, g2, v2, c: int, rounds: int) -> bool:
    """Down-only c-graded equivalence via capped refinement (a second route)."""
    p = graded_partition(g1, g2, cap=c, rounds=rounds)
    return p.cls(1, v1) == p.cls(2, v2)
