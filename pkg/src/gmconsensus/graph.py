"""Weighted digraphs, Laplacians, structural predicates and Perron vectors.

An edge ``(j, i, w)`` means node ``j`` influences node ``i`` with weight
``w_ij``; it fills entry ``W[i, j]`` of the weighted adjacency matrix, so the
in-degree ``d_i`` is the i-th row sum of ``W`` and ``L = D - W`` has zero row
sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateEdge,
    InvalidDegree,
    InvalidGraph,
    NoConvergence,
    NonPositiveWeight,
    NotStronglyConnected,
    ParseError,
    ZeroInDegree,
)

DATA_DIR = Path(__file__).parent / "data"


def _frozen(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WeightedDigraph:
    n: int
    edges: tuple = field(default=())

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidGraph(f"node count must be a positive integer, got {self.n!r}")
        clean = []
        seen = set()
        for e in self.edges:
            tail, head, w = e
            tail, head, w = int(tail), int(head), float(w)
            if not (0 <= tail < self.n and 0 <= head < self.n):
                raise InvalidGraph(f"edge {tail}->{head} has a node id outside [0, {self.n})")
            if tail == head:
                raise InvalidGraph(f"self-loop at node {tail}")
            if not w > 0 or not np.isfinite(w):
                raise NonPositiveWeight(f"edge {tail}->{head} has weight {w}")
            if (tail, head) in seen:
                raise DuplicateEdge(f"duplicate edge {tail}->{head}")
            seen.add((tail, head))
            clean.append((tail, head, w))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "edges", tuple(clean))

    @property
    def num_edges(self):
        return len(self.edges)

    @cached_property
    def adjacency(self):
        """Weighted adjacency ``W`` with ``W[i, j] = w_ij`` for edge j -> i."""
        W = np.zeros((self.n, self.n))
        for tail, head, w in self.edges:
            W[head, tail] = w
        return _frozen(W)

    @cached_property
    def in_degree(self):
        return _frozen(self.adjacency.sum(axis=1))

    @cached_property
    def out_degree(self):
        return _frozen(self.adjacency.sum(axis=0))

    @cached_property
    def edge_arrays(self):
        """(tails, heads, weights) as numpy arrays, handy for edge-wise sums."""
        if not self.edges:
            return (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0))
        t, h, w = zip(*self.edges)
        return (_frozen(np.array(t, dtype=np.int64)), _frozen(np.array(h, dtype=np.int64)),
                _frozen(np.array(w, dtype=float)))

    def successors(self, node):
        return [h for t, h, _ in self.edges if t == node]

    def is_symmetric(self, tol=0.0):
        W = self.adjacency
        return bool(np.all(np.abs(W - W.T) <= tol))


def laplacian(g: WeightedDigraph) -> np.ndarray:
    """``L = D - W``. The diagonal is assembled from the row sums of ``W``,
    so ``L @ 1`` vanishes up to the summation order only."""
    W = g.adjacency
    L = -W.copy()
    L[np.diag_indices(g.n)] = W.sum(axis=1)
    return L


def normalized_laplacian(g: WeightedDigraph) -> np.ndarray:
    d = g.in_degree
    zero = np.flatnonzero(d <= 0)
    if zero.size:
        raise ZeroInDegree(int(zero[0]))
    Lhat = -g.adjacency / d[:, None]
    Lhat[np.diag_indices(g.n)] = 1.0
    return Lhat


def is_balanced(g: WeightedDigraph, tol: float = 1e-12) -> bool:
    return bool(np.all(np.abs(g.in_degree - g.out_degree) <= tol))


def strongly_connected_components(g: WeightedDigraph):
    """Tarjan's algorithm, iterative so deep graphs do not hit the recursion limit."""
    adj = [[] for _ in range(g.n)]
    for tail, head, _ in g.edges:
        adj[tail].append(head)

    index = [-1] * g.n
    low = [0] * g.n
    on_stack = [False] * g.n
    stack = []
    components = []
    counter = 0

    for root in range(g.n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            for k in range(pos, len(adj[v])):
                w = adj[v][k]
                if index[w] == -1:
                    work.append((v, k + 1))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return components


def is_strongly_connected(g: WeightedDigraph) -> bool:
    return len(strongly_connected_components(g)) == 1


def perron_left_vector(g: WeightedDigraph, tol: float = 1e-12, max_iter: int = 10**6) -> np.ndarray:
    """Normalized positive left null vector of the Laplacian.

    Left power iteration on the row-stochastic ``P = I - L / (2 max_i d_i)``,
    which is primitive for strongly connected graphs because its diagonal
    is at least 1/2.
    """
    if not is_strongly_connected(g):
        raise NotStronglyConnected("Perron vector needs a strongly connected graph")
    n = g.n
    if n == 1:
        return np.ones(1)
    L = laplacian(g)
    P = np.eye(n) - L / (2.0 * g.in_degree.max())
    q = np.full(n, 1.0 / n)
    for it in range(1, max_iter + 1):
        q_new = q @ P
        q_new /= q_new.sum()
        step = np.abs(q_new - q).max()
        q = q_new
        if step < tol / 10 and np.abs(q @ L).max() <= tol:
            return q
    raise NoConvergence(f"Perron iteration did not converge in {max_iter} steps", max_iter)


def generate_complete(n: int, normalized: bool = True) -> WeightedDigraph:
    if n < 2:
        raise InvalidDegree("complete graph needs n >= 2")
    w = 1.0 / (n - 1) if normalized else 1.0
    return WeightedDigraph(n, tuple((j, i, w) for j in range(n) for i in range(n) if i != j))


def generate_regular(n: int, d: int, normalized: bool = True, seed=None) -> WeightedDigraph:
    """Circulant (n, d)-regular digraph: node i feeds i+1, ..., i+d (mod n).

    A seed permutes the node labels; ``seed=None`` keeps the identity labelling.
    """
    if not 2 <= d < n:
        raise InvalidDegree(f"need 2 <= d < n, got n={n}, d={d}")
    perm = np.arange(n) if seed is None else np.random.default_rng(seed).permutation(n)
    w = 1.0 / d if normalized else 1.0
    edges = [(int(perm[i]), int(perm[(i + k) % n]), w) for i in range(n) for k in range(1, d + 1)]
    return WeightedDigraph(n, tuple(edges))


def random_strongly_connected(n, rng, p=0.3, weight_range=(0.5, 2.0)):
    """Random digraph made strongly connected by a random Hamiltonian cycle,
    plus each remaining ordered pair with probability ``p``."""
    rng = np.random.default_rng(rng)
    lo, hi = weight_range
    if n == 1:
        return WeightedDigraph(1)
    order = rng.permutation(n)
    pairs = {(int(order[k]), int(order[(k + 1) % n])) for k in range(n)}
    for j in range(n):
        for i in range(n):
            if i != j and (j, i) not in pairs and rng.random() < p:
                pairs.add((j, i))
    pairs = sorted(pairs)
    weights = rng.uniform(lo, hi, size=len(pairs))
    return WeightedDigraph(n, tuple((j, i, float(w)) for (j, i), w in zip(pairs, weights)))


def random_balanced(n, rng, cycles=3, weight_range=(0.5, 2.0)):
    """Balanced strongly connected digraph built as a sum of weighted directed cycles.

    Every directed cycle is balanced, and so is any positive combination of
    them; the first cycle is Hamiltonian, which gives strong connectivity.
    """
    rng = np.random.default_rng(rng)
    lo, hi = weight_range
    W = np.zeros((n, n))
    for c in range(cycles):
        if c == 0:
            nodes = rng.permutation(n)
        else:
            k = int(rng.integers(2, n + 1))
            nodes = rng.choice(n, size=k, replace=False)
        w = rng.uniform(lo, hi)
        for a, b in zip(nodes, np.roll(nodes, -1)):
            W[b, a] += w
    edges = [(j, i, float(W[i, j])) for i in range(n) for j in range(n) if W[i, j] > 0]
    return WeightedDigraph(n, tuple(edges))


def random_symmetric_connected(n, rng, p=0.4, weight_range=(0.5, 2.0)):
    """Undirected connected graph (random spanning tree plus extra edges) as a symmetric digraph."""
    rng = np.random.default_rng(rng)
    lo, hi = weight_range
    order = rng.permutation(n)
    und = {}
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(0, k)])
        und[(min(a, b), max(a, b))] = rng.uniform(lo, hi)
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in und and rng.random() < p:
                und[(a, b)] = rng.uniform(lo, hi)
    edges = []
    for (a, b), w in sorted(und.items()):
        edges += [(a, b, float(w)), (b, a, float(w))]
    return WeightedDigraph(n, tuple(edges))


def parse_edge_list(text: str) -> WeightedDigraph:
    n = None
    edges = []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 1:
                raise ParseError("first line must hold the node count", lineno)
            try:
                n = int(parts[0])
            except ValueError:
                raise ParseError(f"bad node count {parts[0]!r}", lineno) from None
            if n < 1:
                raise ParseError("node count must be positive", lineno)
            continue
        if len(parts) != 3:
            raise ParseError("expected 'tail head weight'", lineno)
        try:
            tail, head, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"cannot read edge {line!r}", lineno) from None
        if not (0 <= tail < n and 0 <= head < n):
            raise ParseError(f"node id out of range [0, {n})", lineno)
        if tail == head:
            raise ParseError(f"self-loop at node {tail}", lineno)
        if not w > 0 or not np.isfinite(w):
            raise NonPositiveWeight(f"non-positive weight {w}", lineno)
        if (tail, head) in seen:
            raise DuplicateEdge(f"edge {tail}->{head} already given on line {seen[tail, head]}", lineno)
        seen[tail, head] = lineno
        edges.append((tail, head, w))
    if n is None:
        raise ParseError("empty edge list")
    return WeightedDigraph(n, tuple(edges))


def serialize_edge_list(g: WeightedDigraph) -> str:
    lines = [str(g.n)] + [f"{t} {h} {w!r}" for t, h, w in g.edges]
    return "\n".join(lines) + "\n"


def load_edge_list(path) -> WeightedDigraph:
    return parse_edge_list(Path(path).read_text())


def fig1b_graph() -> WeightedDigraph:
    """Strongly connected, unbalanced 5-node reference digraph."""
    return load_edge_list(DATA_DIR / "fig1b.edges")


def fig1a_balanced_graph() -> WeightedDigraph:
    """Balanced 5-node reference digraph (with the single-weight repair noted in the file)."""
    return load_edge_list(DATA_DIR / "fig1a_balanced.edges")
