import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import sparse as sp

from asymcap.helpers import GRAPH_SCHEMA_VERSION

# attempts to swap away parallel edges before giving up
MAX_REPAIR_ROUNDS = 1000


@dataclass
class SparseGraph:
    """
    Bipartite parity-check graph. Edges are stored check-major: ``edge_check`` is non-decreasing and
    ``check_edges[c]`` lists the edge indices of check ``c`` padded with the dummy index ``num_edges``.
    """

    n: int
    m: int
    edge_var: np.ndarray
    edge_check: np.ndarray
    variable_degree: int
    check_degree: int
    remainder: int = 0
    seed: Optional[int] = None
    check_edges: np.ndarray = field(init=False, repr=False)
    var_incidence: sp.csr_matrix = field(init=False, repr=False)
    check_incidence: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        self.edge_var = np.asarray(self.edge_var, dtype=np.int64)
        self.edge_check = np.asarray(self.edge_check, dtype=np.int64)
        order = np.argsort(self.edge_check, kind='stable')
        self.edge_var = self.edge_var[order]
        self.edge_check = self.edge_check[order]

        degrees = np.bincount(self.edge_check, minlength=self.m)
        width = int(degrees.max()) if degrees.size else 0
        starts = np.concatenate([[0], np.cumsum(degrees)[:-1]]) if self.m else np.zeros(0, dtype=np.int64)
        slots = np.arange(self.num_edges) - np.repeat(starts, degrees)
        padded = np.full((self.m, width), self.num_edges, dtype=np.int64)
        padded[self.edge_check, slots] = np.arange(self.num_edges)
        self.check_edges = padded

        ones = np.ones(self.num_edges)
        edges = np.arange(self.num_edges)
        self.var_incidence = sp.csr_matrix((ones, (edges, self.edge_var)), shape=(self.num_edges, self.n))
        self.check_incidence = sp.csr_matrix((ones, (edges, self.edge_check)), shape=(self.num_edges, self.m))

    @property
    def num_edges(self) -> int:
        return int(self.edge_var.size)

    def variable_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_var, minlength=self.n)

    def check_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_check, minlength=self.m)

    def has_parallel_edges(self) -> bool:
        keys = self.edge_check * self.n + self.edge_var
        return np.unique(keys).size != keys.size

    def to_dict(self) -> dict:
        return {
            'schema_version': GRAPH_SCHEMA_VERSION,
            'n': self.n,
            'm': self.m,
            'variable_degree': self.variable_degree,
            'check_degree': self.check_degree,
            'remainder': self.remainder,
            'seed': self.seed,
            'checks': [self.edge_var[self.edge_check == c].tolist() for c in range(self.m)],
        }

    def to_json(self, filepath: Path):
        with filepath.open('w') as f:
            f.write(json.dumps(self.to_dict()))

    @staticmethod
    def from_dict(data: dict) -> 'SparseGraph':
        if data.get('schema_version') != GRAPH_SCHEMA_VERSION:
            raise ValueError(f'Unsupported graph schema version {data.get("schema_version")}')
        checks = data['checks']
        edge_check = np.repeat(np.arange(len(checks)), [len(c) for c in checks])
        edge_var = np.concatenate([np.asarray(c, dtype=np.int64) for c in checks]) if checks else np.zeros(0)
        return SparseGraph(n=data['n'], m=data['m'], edge_var=edge_var, edge_check=edge_check,
                           variable_degree=data['variable_degree'], check_degree=data['check_degree'],
                           remainder=data['remainder'], seed=data['seed'])

    @staticmethod
    def read(filepath: Path) -> 'SparseGraph':
        with filepath.open() as f:
            return SparseGraph.from_dict(json.load(f))


def build_graph(n: int, m: int, variable_degree: int, seed: int) -> SparseGraph:
    """
    Random graph with every variable of degree ``variable_degree`` and ``m`` checks whose degrees differ by at most
    one: the first ``remainder`` checks take one socket more than the others.
    """
    if n <= 0 or m <= 0 or variable_degree <= 0:
        raise ValueError(f'Graph sizes must be positive, got n={n}, m={m}, l={variable_degree}')
    if variable_degree > m:
        raise ValueError(f'Variable degree {variable_degree} exceeds the number of checks {m}')
    num_edges = n * variable_degree
    base, remainder = divmod(num_edges, m)
    if base == 0:
        raise ValueError(f'{m} checks cannot all be connected with {num_edges} edges')

    rng = np.random.default_rng(seed)
    degrees = np.full(m, base)
    degrees[:remainder] += 1
    edge_check = np.repeat(np.arange(m), degrees)
    edge_var = rng.permutation(np.repeat(np.arange(n), variable_degree))
    __remove_parallel_edges(edge_var, edge_check, n, rng)
    return SparseGraph(n=n, m=m, edge_var=edge_var, edge_check=edge_check, variable_degree=variable_degree,
                       check_degree=base + (1 if remainder else 0), remainder=remainder, seed=seed)


def build_regular_graph(n: int, l: int, r: int, seed: int) -> SparseGraph:  # noqa: E741
    """(l, r)-regular graph with n·l/r checks."""
    if (n * l) % r != 0:
        raise ValueError(f'n·l = {n * l} is not divisible by r = {r}')
    return build_graph(n, n * l // r, l, seed)


def __remove_parallel_edges(edge_var: np.ndarray, edge_check: np.ndarray, n: int, rng: np.random.Generator):
    # swaps the variable end of a repeated edge with a random edge until every (check, variable) pair is unique
    for _ in range(MAX_REPAIR_ROUNDS):
        keys = edge_check * n + edge_var
        _, first = np.unique(keys, return_index=True)
        repeated = np.setdiff1d(np.arange(keys.size), first)
        if repeated.size == 0:
            return
        for edge in repeated:
            other = int(rng.integers(keys.size))
            edge_var[edge], edge_var[other] = edge_var[other], edge_var[edge]
    raise RuntimeError('Could not remove parallel edges from the random graph')


def select_checks(g: SparseGraph, checks: Sequence[int]) -> SparseGraph:
    """Sub-graph with the given checks (renumbered in the given order) and all variables."""
    checks = np.asarray(checks, dtype=np.int64)
    renumber = np.full(g.m, -1, dtype=np.int64)
    renumber[checks] = np.arange(checks.size)
    keep = renumber[g.edge_check] >= 0
    return SparseGraph(n=g.n, m=int(checks.size), edge_var=g.edge_var[keep], edge_check=renumber[g.edge_check[keep]],
                       variable_degree=g.variable_degree, check_degree=g.check_degree, remainder=g.remainder,
                       seed=g.seed)


def syndrome(g: SparseGraph, x: np.ndarray) -> np.ndarray:
    """P·x over GF(2) for one word or a batch of words along the first axis."""
    x = np.asarray(x, dtype=np.uint8)
    if x.shape[-1] != g.n:
        raise ValueError(f'Expected words of length {g.n}, got {x.shape[-1]}')
    on_edges = np.concatenate([x[..., g.edge_var], np.zeros(x.shape[:-1] + (1,), dtype=np.uint8)], axis=-1)
    return (on_edges[..., g.check_edges].sum(axis=-1) % 2).astype(np.uint8)


def to_dense(g: SparseGraph) -> np.ndarray:
    h = np.zeros((g.m, g.n), dtype=np.uint8)
    h[g.edge_check, g.edge_var] = 1
    return h


def gf2_solve(h: np.ndarray, s: np.ndarray) -> Optional[np.ndarray]:
    """One solution of h·x = s over GF(2) by Gaussian elimination, or None if the system is inconsistent."""
    a = np.concatenate([np.asarray(h, dtype=bool), np.asarray(s, dtype=bool)[:, None]], axis=1)
    rows, cols = h.shape
    pivots = []
    row = 0
    for col in range(cols):
        if row == rows:
            break
        candidates = np.flatnonzero(a[row:, col])
        if candidates.size == 0:
            continue
        pivot = row + candidates[0]
        a[[row, pivot]] = a[[pivot, row]]
        others = np.flatnonzero(a[:, col])
        others = others[others != row]
        a[others] ^= a[row]
        pivots.append(col)
        row += 1

    if np.any(a[row:, -1]):
        return None
    x = np.zeros(cols, dtype=np.uint8)
    for i, col in enumerate(pivots):
        x[col] = a[i, -1]
    return x
