"""Finite weighted graphs and their isoperimetric / spectral constants.

A weighted graph carries a strictly positive measure ``m(i)`` on each vertex.
The measure of an edge ``{i, j}`` is always ``max(m(i), m(j))`` and is never
stored independently.  The boundary of a vertex set consists of the edges with
exactly one endpoint inside.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import CapacityError, DomainError

#: Largest vertex count for which subset enumeration is attempted.
DEFAULT_ENUM_CAP = 22

#: Vertex count above which the spectral gap switches to a sparse solver.
DENSE_EIG_LIMIT = 3000


class WeightedGraph:
    """Finite simple graph with positive vertex measures.

    Parameters
    ----------
    vertices : iterable of ``(id, measure)`` pairs
    edges : iterable of ``(i, j)`` id pairs, unordered, no self loops
    """

    def __init__(self, vertices, edges=()):
        ids = []
        measures = []
        for vid, m in vertices:
            m = float(m)
            if not m > 0.0 or not math.isfinite(m):
                raise DomainError(f"vertex {vid!r} has non-positive measure {m}")
            ids.append(vid)
            measures.append(m)
        if not ids:
            raise DomainError("graph must have at least one vertex")
        if len(set(ids)) != len(ids):
            raise DomainError("duplicate vertex ids")
        self.ids = tuple(ids)
        self.measures = np.asarray(measures, dtype=float)
        self._index = {vid: k for k, vid in enumerate(ids)}
        seen = set()
        norm_edges = []
        for i, j in edges:
            if i not in self._index or j not in self._index:
                raise DomainError(f"edge ({i!r}, {j!r}) references unknown vertex")
            if i == j:
                raise DomainError(f"self loop at vertex {i!r}")
            key = (min(self._index[i], self._index[j]),
                   max(self._index[i], self._index[j]))
            if key in seen:
                continue
            seen.add(key)
            norm_edges.append(key)
        norm_edges.sort()
        # positions into self.ids, shape (E, 2)
        self.edge_pos = np.asarray(norm_edges, dtype=int).reshape(-1, 2)
        self.edges = tuple((self.ids[a], self.ids[b]) for a, b in norm_edges)

    def __len__(self):
        return len(self.ids)

    def index(self, vid):
        return self._index[vid]

    def edge_measure(self, i, j):
        """m(i, j) = max(m(i), m(j)); the edge must exist."""
        a, b = self._index[i], self._index[j]
        if (min(a, b), max(a, b)) not in {tuple(e) for e in self.edge_pos}:
            raise DomainError(f"({i!r}, {j!r}) is not an edge")
        return float(max(self.measures[a], self.measures[b]))

    @property
    def edge_measures(self):
        """Array of max-endpoint measures aligned with ``edge_pos``."""
        if len(self.edge_pos) == 0:
            return np.zeros(0)
        return np.maximum(self.measures[self.edge_pos[:, 0]],
                          self.measures[self.edge_pos[:, 1]])

    @property
    def total_measure(self):
        return float(self.measures.sum())

    def adjacency(self):
        n = len(self)
        if len(self.edge_pos) == 0:
            return sp.csr_matrix((n, n))
        a, b = self.edge_pos[:, 0], self.edge_pos[:, 1]
        data = np.ones(len(a))
        return sp.csr_matrix(
            (np.r_[data, data], (np.r_[a, b], np.r_[b, a])), shape=(n, n))

    def is_connected(self):
        ncomp, _ = connected_components(self.adjacency(), directed=False)
        return ncomp == 1

    def with_edges(self, extra_edges):
        """New graph with additional edges (same vertices)."""
        return WeightedGraph(zip(self.ids, self.measures),
                             list(self.edges) + list(extra_edges))

    def scaled(self, a):
        """New graph with all vertex measures multiplied by ``a > 0``."""
        if not a > 0:
            raise DomainError("scale factor must be positive")
        return WeightedGraph(zip(self.ids, self.measures * a), self.edges)


# ---------------------------------------------------------------------------
# subset enumeration


def _enum_tables(g: WeightedGraph, cap: int):
    """Per-subset measures and boundary measures, indexed by bitmask - 1."""
    n = len(g)
    if n > cap:
        raise CapacityError(f"{n} vertices exceeds enumeration cap {cap}")
    masks = np.arange(1, 1 << n, dtype=np.int64)
    m_sub = np.zeros(len(masks))
    for pos in range(n):
        m_sub += np.where((masks >> pos) & 1 == 1, g.measures[pos], 0.0)
    bnd = np.zeros(len(masks))
    w = g.edge_measures
    for k in range(len(g.edge_pos)):
        a, b = g.edge_pos[k]
        cut = ((masks >> int(a)) ^ (masks >> int(b))) & 1
        bnd += np.where(cut == 1, w[k], 0.0)
    return masks, m_sub, bnd


def cheeger_constant(g: WeightedGraph, cap: int = DEFAULT_ENUM_CAP) -> float:
    """inf m(boundary U) / m(U) over subsets with 0 < m(U) <= m(V)/2.

    Exact, by subset enumeration.  Returns 0 iff the graph is disconnected.
    Raises CapacityError above ``cap`` vertices.
    """
    if len(g) == 1:
        return math.inf  # no admissible subset: m(U) <= m/2 forces U empty
    _, m_sub, bnd = _enum_tables(g, cap)
    half = g.total_measure / 2.0
    ok = m_sub <= half * (1 + 1e-12)
    if not ok.any():
        return math.inf
    return float(np.min(bnd[ok] / m_sub[ok]))


def isoperimetric_constant(g: WeightedGraph, nu: float = math.inf,
                           mode: str = "dirichlet",
                           subsets: Iterable[Iterable] | None = None,
                           cap: int = DEFAULT_ENUM_CAP) -> float:
    """Best constant in the discrete isoperimetric inequality.

    ``dirichlet``: sup m(U)^((nu-1)/nu) / m(boundary U) over nonempty U.
    ``neumann``:   sup m(U) / m(boundary U) over 0 < m(U) <= m(V)/2
    (the reciprocal of the Cheeger constant).

    Subsets with empty boundary (e.g. the whole vertex set, or a full
    connected component) make the supremum infinite.  ``subsets`` restricts
    the supremum to an explicit family of vertex-id collections.
    """
    if mode not in ("dirichlet", "neumann"):
        raise DomainError(f"unknown mode {mode!r}")
    if not (nu > 1):
        raise DomainError("nu must exceed 1")
    expo = 1.0 if math.isinf(nu) else (nu - 1.0) / nu
    if subsets is not None:
        best = 0.0
        for s in subsets:
            cut = subset_cut(g, s)
            msub, mbnd = cut.interior_measure, cut.boundary_measure
            if mode == "neumann" and msub > g.total_measure / 2.0 * (1 + 1e-12):
                continue
            ratio = math.inf if mbnd == 0 else (
                msub ** expo if mode == "dirichlet" else msub) / mbnd
            best = max(best, ratio)
        return best
    _, m_sub, bnd = _enum_tables(g, cap)
    if mode == "neumann":
        keep = m_sub <= g.total_measure / 2.0 * (1 + 1e-12)
        m_sub, bnd = m_sub[keep], bnd[keep]
        if len(m_sub) == 0:
            return 0.0
        num = m_sub
    else:
        num = m_sub ** expo
    if np.any(bnd == 0):
        return math.inf
    return float(np.max(num / bnd))


@dataclass(frozen=True)
class SubsetCut:
    subset: frozenset
    interior_measure: float
    boundary_measure: float


def subset_cut(g: WeightedGraph, subset) -> SubsetCut:
    """Measure of a vertex set and of its edge boundary."""
    pos = frozenset(g.index(v) for v in subset)
    msub = float(sum(g.measures[p] for p in pos))
    mbnd = 0.0
    w = g.edge_measures
    for k in range(len(g.edge_pos)):
        a, b = g.edge_pos[k]
        if (a in pos) != (b in pos):
            mbnd += float(w[k])
    return SubsetCut(frozenset(subset), msub, mbnd)


# ---------------------------------------------------------------------------
# spectral gap


def laplacian(g: WeightedGraph) -> sp.csr_matrix:
    """Edge Laplacian: quadratic form sum m(i,j) |f(i)-f(j)|^2."""
    n = len(g)
    if len(g.edge_pos) == 0:
        return sp.csr_matrix((n, n))
    a, b = g.edge_pos[:, 0], g.edge_pos[:, 1]
    w = g.edge_measures
    rows = np.r_[a, b, a, b]
    cols = np.r_[b, a, a, b]
    data = np.r_[-w, -w, w, w]
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def spectral_gap(g: WeightedGraph) -> float:
    """Smallest nonzero eigenvalue of L f = lambda M f, M = diag(m).

    Equals the infimum of sum m(i,j)|f(i)-f(j)|^2 / sum m(i)|f(i)-mean|^2
    over nonconstant f.  Returns 0 for disconnected graphs and +inf for a
    single vertex (no nonconstant test functions).
    """
    n = len(g)
    if n == 1:
        return math.inf
    if not g.is_connected():
        return 0.0
    L = laplacian(g)
    if n <= DENSE_EIG_LIMIT:
        w = scipy.linalg.eigh(L.toarray(), np.diag(g.measures),
                              eigvals_only=True)
        return float(max(w[1], 0.0))
    # large graphs: LOBPCG on the complement of constants
    M = sp.diags(g.measures)
    rng = np.random.default_rng(0)
    X = rng.standard_normal((n, 1))
    Y = np.ones((n, 1))
    vals, _ = sp.linalg.lobpcg(L, X, B=M, Y=Y, largest=False,
                               tol=1e-10, maxiter=500)
    return float(max(vals[0], 0.0))


def degree_bound_m0(g: WeightedGraph) -> float:
    """max over vertices of (1/m(i)) * sum over incident edges of m(i,j)."""
    tot = np.zeros(len(g))
    w = g.edge_measures
    for k in range(len(g.edge_pos)):
        a, b = g.edge_pos[k]
        tot[a] += w[k]
        tot[b] += w[k]
    return float(np.max(tot / g.measures))


@dataclass(frozen=True)
class CheegerGapReport:
    h: float
    gap: float
    m0: float
    lower_ok: bool   # h^2 / (8 m0) <= gap
    upper_ok: bool   # gap <= h  (reported, can fail: two-vertex graph)


def cheeger_gap_report(g: WeightedGraph,
                       cap: int = DEFAULT_ENUM_CAP) -> CheegerGapReport:
    """Cheeger constant, spectral gap, and the comparison between them.

    The lower bound h^2/(8 m0) <= gap is a theorem for connected graphs;
    ``upper_ok`` merely records whether gap <= h held (it fails e.g. for the
    two-vertex graph, where gap = 2 and h = 1).
    """
    h = cheeger_constant(g, cap=cap)
    gap = spectral_gap(g)
    m0 = degree_bound_m0(g) if len(g.edge_pos) else math.inf
    if math.isinf(h) or math.isinf(gap):
        lower_ok = True
        upper_ok = gap <= h
    else:
        lo = h * h / (8.0 * m0) if m0 > 0 else 0.0
        lower_ok = lo <= gap * (1 + 1e-9) + 1e-12
        upper_ok = gap <= h * (1 + 1e-9) + 1e-12
    return CheegerGapReport(h, gap, m0, bool(lower_ok), bool(upper_ok))


# ---------------------------------------------------------------------------
# JSON wire format


def graph_to_json(g: WeightedGraph) -> str:
    doc = {
        "vertices": [{"id": vid, "measure": float(m)}
                     for vid, m in zip(g.ids, g.measures)],
        "edges": [[i, j] for i, j in g.edges],
    }
    return json.dumps(doc, sort_keys=True, indent=2)


def graph_from_json(text: str) -> WeightedGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"malformed graph JSON: {exc}") from exc
    try:
        vertices = [(v["id"], v["measure"]) for v in doc["vertices"]]
        edges = [tuple(e) for e in doc.get("edges", [])]
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed graph JSON: {exc}") from exc
    return WeightedGraph(vertices, edges)


def random_connected_graph(rng: np.random.Generator, max_vertices: int = 12,
                           measure_range=(0.1, 10.0)) -> WeightedGraph:
    """Seeded random connected graph: random spanning tree plus extra edges."""
    n = int(rng.integers(2, max_vertices + 1))
    measures = rng.uniform(*measure_range, size=n)
    edges = set()
    order = rng.permutation(n)
    for k in range(1, n):
        a = int(order[k])
        b = int(order[int(rng.integers(0, k))])
        edges.add((min(a, b), max(a, b)))
    n_extra = int(rng.integers(0, n))
    for _ in range(n_extra):
        a, b = rng.integers(0, n, size=2)
        if a != b:
            edges.add((min(int(a), int(b)), max(int(a), int(b))))
    return WeightedGraph(enumerate(measures), sorted(edges))
