"""Labeled directed graphs and small corpora of them."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

EXHAUSTIVE_MAX_N = 3
EXHAUSTIVE_MAX_LABELS = 2


@dataclass(frozen=True)
class LabeledGraph:
    n: int
    edges: tuple  # sorted (u, v) pairs, self-loops allowed
    labels: tuple  # labels[i] = frozenset of vertices carrying p_i

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a graph needs at least one vertex")
        edges = tuple(sorted({(int(u), int(v)) for u, v in self.edges}))
        for u, v in edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range")
        labels = tuple(frozenset(int(v) for v in s) for s in self.labels)
        for s in labels:
            if any(not 0 <= v < self.n for v in s):
                raise ValueError("labeled vertex out of range")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "labels", labels)

    @property
    def label_count(self) -> int:
        return len(self.labels)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.uint8)
        for u, v in self.edges:
            a[u, v] = 1
        return a

    def label_matrix(self) -> np.ndarray:
        m = np.zeros((self.n, len(self.labels)), dtype=np.uint8)
        for i, s in enumerate(self.labels):
            for v in s:
                m[v, i] = 1
        return m

    def successors(self, v) -> list:
        return [b for a, b in self.edges if a == v]

    def predecessors(self, v) -> list:
        return [a for a, b in self.edges if b == v]

    def with_label_count(self, ell: int) -> "LabeledGraph":
        """Pad (or check) the alphabet to ell labels."""
        if ell < len(self.labels) and any(self.labels[ell:]):
            raise ValueError("cannot drop a used label")
        labs = tuple(self.labels[:ell]) + (frozenset(),) * max(0, ell - len(self.labels))
        return LabeledGraph(self.n, self.edges, labs)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "edges": [list(e) for e in self.edges],
            "labels": {f"p{i}": sorted(s) for i, s in enumerate(self.labels)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "LabeledGraph":
        raw = d.get("labels", {})
        idx = {}
        for name in raw:
            if not (name.startswith("p") and name[1:].isdigit()):
                raise ValueError(f"bad label id {name!r}")
            idx[int(name[1:])] = raw[name]
        ell = max(idx, default=-1) + 1
        labels = tuple(frozenset(idx.get(i, ())) for i in range(ell))
        return cls(int(d["n"]), tuple(tuple(e) for e in d.get("edges", [])), labels)

    @classmethod
    def from_json(cls, text: str) -> "LabeledGraph":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_arrays(cls, adj, lab) -> "LabeledGraph":
        adj = np.asarray(adj)
        lab = np.asarray(lab)
        edges = tuple(map(tuple, np.argwhere(adj).tolist()))
        labels = tuple(frozenset(np.flatnonzero(lab[:, i]).tolist()) for i in range(lab.shape[1]))
        return cls(adj.shape[0], edges, labels)


@dataclass(frozen=True)
class PointedGraph:
    graph: LabeledGraph
    vertex: int

    def __post_init__(self):
        if not 0 <= self.vertex < self.graph.n:
            raise ValueError("vertex out of range")


def load_graph(path) -> LabeledGraph:
    with open(path) as fh:
        return LabeledGraph.from_json(fh.read())


def save_graph(g: LabeledGraph, path):
    with open(path, "w") as fh:
        fh.write(g.to_json())


def parse_word(text: str) -> list:
    out = []
    for tok in text.split():
        if not (tok.startswith("p") and tok[1:].isdigit()):
            raise ValueError(f"bad label id {tok!r}")
        out.append(int(tok[1:]))
    return out


def word_graph(word: Sequence, label_count: int = None) -> LabeledGraph:
    if isinstance(word, str):
        word = parse_word(word)
    word = list(word)
    if not word:
        raise ValueError("word must be non-empty")
    ell = max(word) + 1 if label_count is None else label_count
    labels = tuple(frozenset(i for i, a in enumerate(word) if a == j) for j in range(ell))
    return LabeledGraph(len(word), tuple((i, i + 1) for i in range(len(word) - 1)), labels)


def disjoint_copies(g: LabeledGraph, q: int) -> LabeledGraph:
    """Copy i of vertex v becomes i * n + v."""
    if q < 1:
        raise ValueError("q must be >= 1")
    n = g.n
    edges = tuple((i * n + u, i * n + v) for i in range(q) for u, v in g.edges)
    labels = tuple(frozenset(i * n + v for i in range(q) for v in s) for s in g.labels)
    return LabeledGraph(q * n, edges, labels)


def disjoint_union(g1: LabeledGraph, g2: LabeledGraph) -> LabeledGraph:
    ell = max(g1.label_count, g2.label_count)
    g1, g2 = g1.with_label_count(ell), g2.with_label_count(ell)
    off = g1.n
    edges = g1.edges + tuple((u + off, v + off) for u, v in g2.edges)
    labels = tuple(a | frozenset(v + off for v in b) for a, b in zip(g1.labels, g2.labels))
    return LabeledGraph(g1.n + g2.n, edges, labels)


def permute(g: LabeledGraph, perm: Sequence[int]) -> LabeledGraph:
    """Relabel vertex v as perm[v]."""
    edges = tuple((perm[u], perm[v]) for u, v in g.edges)
    labels = tuple(frozenset(perm[v] for v in s) for s in g.labels)
    return LabeledGraph(g.n, edges, labels)


# -- enumeration ---------------------------------------------------------------

def _bits(count: int, width: int) -> np.ndarray:
    codes = np.arange(count, dtype=np.int64)[:, None]
    return ((codes >> np.arange(width)) & 1).astype(np.uint8)


def exhaustive_arrays(n: int, label_count: int):
    """All (adjacency, labeling) pairs on n vertices as stacked arrays.

    Order: edge mask outer, label mask inner; bit n*u+v of the edge mask is
    edge (u, v) and bit L*v+i of the label mask is p_i at v.
    """
    if n > EXHAUSTIVE_MAX_N or label_count > EXHAUSTIVE_MAX_LABELS:
        raise ValueError("exhaustive enumeration limited to n <= 3 and <= 2 labels")
    adj = _bits(1 << (n * n), n * n).reshape(-1, n, n)
    lab = _bits(1 << (n * label_count), n * label_count).reshape(-1, n, label_count)
    A = np.repeat(adj, len(lab), axis=0)
    L = np.tile(lab, (len(adj), 1, 1))
    return A, L


def random_arrays(rng: np.random.Generator, n: int, count: int, label_count: int,
                  edge_prob: float = 0.5, label_prob: float = 0.5):
    A = (rng.random((count, n, n)) < edge_prob).astype(np.uint8)
    L = (rng.random((count, n, label_count)) < label_prob).astype(np.uint8)
    return A, L


def enumerate_graphs(n_max: int, label_count: int, mode="exhaustive", seed: int = 0,
                     count: int = 100, n_min: int = 1, edge_prob: float = 0.5) -> Iterator[LabeledGraph]:
    """Stream graphs with n_min..n_max vertices.

    mode "exhaustive" yields every (edges, labeling) pair once; mode "random"
    draws count graphs from a generator seeded with seed.
    """
    if mode == "exhaustive":
        if n_max > EXHAUSTIVE_MAX_N or label_count > EXHAUSTIVE_MAX_LABELS:
            raise ValueError("exhaustive enumeration limited to n <= 3 and <= 2 labels")
        for n in range(n_min, n_max + 1):
            A, L = exhaustive_arrays(n, label_count)
            for a, l in zip(A, L):
                yield LabeledGraph.from_arrays(a, l)
    elif mode == "random":
        rng = np.random.default_rng(seed)
        for _ in range(count):
            n = int(rng.integers(n_min, n_max + 1))
            A, L = random_arrays(rng, n, 1, label_count, edge_prob)
            yield LabeledGraph.from_arrays(A[0], L[0])
    else:
        raise ValueError(f"unknown mode {mode!r}")


def stack(graphs: Sequence[LabeledGraph]):
    """Stack same-size graphs into (B,n,n) and (B,n,L) arrays."""
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ValueError("graphs differ in size")
    ell = max(g.label_count for g in graphs)
    A = np.stack([g.adjacency() for g in graphs])
    L = np.stack([g.with_label_count(ell).label_matrix() for g in graphs])
    return A, L
