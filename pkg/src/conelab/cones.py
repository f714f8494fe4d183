"""Finite-volume discretizations of metric cones C(S) with g = dr^2 + r^2 g_S.

A cone is discretized as a product of a radial subdivision and a mesh of the
link S.  Each vertex carries the measure of its grid cell; each edge carries
the conductance (dual face measure over distance) of the finite-volume
Laplacian, so that

    sum_edges c_e |f(i) - f(j)|^2  ~  int |grad f|^2 dmu.

Distances between vertices use the exact cone metric: with d_S the link
distance, d((r1,x),(r2,y)) = sqrt(r1^2 + r2^2 - 2 r1 r2 cos(min(d_S, pi))).
On flat model cones this is the true distance at every resolution, which is
what the heat-kernel and Green comparisons require.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .covering import Cell, GoodCovering
from .errors import DomainError, UnsupportedError


# ---------------------------------------------------------------------------
# links


@dataclass(frozen=True)
class CircleLink:
    """Circle of circumference ``length``; the cone over it is a 2d cone of
    total angle ``length`` (flat plane when length = 2*pi)."""
    length: float
    dim: int = 1

    def __post_init__(self):
        if not self.length > 0:
            raise DomainError("circle length must be positive")


@dataclass(frozen=True)
class GraphLink:
    """Generic (n-1)-dimensional link given as a measured conductance mesh.

    ``measures`` are the cell volumes on (S, g_S), ``conductances`` the
    coefficients of a Dirichlet form approximating int_S |grad f|^2, and
    ``lengths`` the geodesic edge lengths.  ``directions`` (optional unit
    vectors) switch the link distance from Dijkstra to exact arccos form.
    """
    measures: tuple
    edges: tuple          # pairs of node indices
    conductances: tuple
    lengths: tuple
    dim: int = 2
    directions: Optional[tuple] = None

    def __post_init__(self):
        if len(self.measures) == 0:
            raise DomainError("link needs at least one node")
        if any(m <= 0 for m in self.measures):
            raise DomainError("link cell measures must be positive")
        if self.dim < 1:
            raise DomainError("link dimension must be >= 1")


def sphere_link(n_theta: int, n_phi: int) -> GraphLink:
    """Latitude/longitude finite-volume mesh of the round unit 2-sphere.

    Cells are centered at theta_i = (i+1/2) pi/n_theta, phi_j = j 2pi/n_phi;
    the first and last rings own the polar caps.  Geodesic distances come
    from the stored unit direction vectors.
    """
    if n_theta < 2 or n_phi < 3:
        raise DomainError("sphere mesh too coarse")
    dth = math.pi / n_theta
    dph = 2.0 * math.pi / n_phi
    measures, directions = [], []
    for i in range(n_theta):
        lo = 0.0 if i == 0 else i * dth
        hi = math.pi if i == n_theta - 1 else (i + 1) * dth
        cell = (math.cos(lo) - math.cos(hi)) * dph
        th = (i + 0.5) * dth
        for j in range(n_phi):
            ph = j * dph
            measures.append(cell)
            directions.append((math.sin(th) * math.cos(ph),
                               math.sin(th) * math.sin(ph),
                               math.cos(th)))
    edges, cond, lengths = [], [], []
    idx = lambda i, j: i * n_phi + (j % n_phi)
    for i in range(n_theta):
        th = (i + 0.5) * dth
        for j in range(n_phi):
            # parallel edge
            edges.append((idx(i, j), idx(i, j + 1)))
            cond.append(dth / (math.sin(th) * dph))
            lengths.append(math.sin(th) * dph)
            # meridian edge
            if i + 1 < n_theta:
                edges.append((idx(i, j), idx(i + 1, j)))
                cond.append(math.sin((i + 1) * dth) * dph / dth)
                lengths.append(dth)
    return GraphLink(tuple(measures), tuple(edges), tuple(cond),
                     tuple(lengths), dim=2, directions=tuple(directions))


def _link_mesh(link, angular_steps):
    """Uniform internal representation: measures, edges, conductances, and a
    full link geodesic distance matrix."""
    if isinstance(link, CircleLink):
        if angular_steps is None or angular_steps < 3:
            raise DomainError("circle links need angular_steps >= 3")
        A = int(angular_steps)
        dth = link.length / A
        theta = (np.arange(A) + 0.5) * dth
        measures = np.full(A, dth)
        edges = np.array([(a, (a + 1) % A) for a in range(A)])
        cond = np.full(A, 1.0 / dth)
        diff = np.abs(theta[:, None] - theta[None, :])
        dist = np.minimum(diff, link.length - diff)
        return measures, edges, cond, dist
    if isinstance(link, GraphLink):
        A = len(link.measures)
        measures = np.asarray(link.measures, dtype=float)
        edges = np.asarray(link.edges, dtype=int).reshape(-1, 2)
        cond = np.asarray(link.conductances, dtype=float)
        if link.directions is not None:
            D = np.asarray(link.directions, dtype=float)
            dist = np.arccos(np.clip(D @ D.T, -1.0, 1.0))
        else:
            lengths = np.asarray(link.lengths, dtype=float)
            W = sp.csr_matrix((lengths, (edges[:, 0], edges[:, 1])),
                              shape=(A, A))
            dist = dijkstra(W + W.T, directed=False)
            if not np.all(np.isfinite(dist)):
                raise DomainError("link graph must be connected")
        return measures, edges, cond, dist
    raise DomainError(f"unknown link type {type(link).__name__}")


# ---------------------------------------------------------------------------
# the cone


@dataclass
class BallVolume:
    volume: float
    clipped: bool


class DiscretizedCone:
    """Product discretization of a truncated cone over a link."""

    def __init__(self, link, r_min, r_max, radial_steps, angular_steps=None,
                 spacing="uniform"):
        if r_min < 0 or r_min >= r_max:
            raise DomainError("need 0 <= r_min < r_max")
        if radial_steps < 2:
            raise DomainError("radial_steps must be >= 2")
        if spacing not in ("uniform", "geometric"):
            raise DomainError(f"unknown spacing {spacing!r}")
        if r_min == 0 and spacing == "geometric":
            raise DomainError("geometric spacing requires r_min > 0")
        if r_min == 0 and not isinstance(link, CircleLink):
            raise UnsupportedError(
                "apex vertices are only supported over circle links")
        self.link = link
        self.r_min, self.r_max = float(r_min), float(r_max)
        self.radial_steps = int(radial_steps)
        self.spacing = spacing
        lm, ledges, lcond, ldist = _link_mesh(link, angular_steps)
        self._link_measures = lm
        self._link_dist = ldist
        A = len(lm)
        self.link_nodes = A
        n = link.dim + 1
        self.dimension = n
        K = self.radial_steps

        if r_min == 0:
            ring_r = (np.arange(1, K + 1)) * (self.r_max / K)
            faces_lo = np.r_[0.5, np.arange(1, K) + 0.5] * (self.r_max / K)
            faces_lo[0] = 0.5 * self.r_max / K
            cell_lo = np.r_[0.5 * self.r_max / K,
                            (np.arange(2, K + 1) - 0.5) * (self.r_max / K)]
            cell_hi = np.r_[(np.arange(1, K) + 0.5) * (self.r_max / K),
                            self.r_max]
            self.apex = 0
            apex_hi = 0.5 * self.r_max / K
        else:
            if spacing == "uniform":
                faces = np.linspace(self.r_min, self.r_max, K + 1)
            else:
                faces = self.r_min * (self.r_max / self.r_min) ** (
                    np.arange(K + 1) / K)
            ring_r = 0.5 * (faces[:-1] + faces[1:])
            cell_lo, cell_hi = faces[:-1], faces[1:]
            self.apex = None

        self.ring_radii = ring_r
        self._cell_lo, self._cell_hi = cell_lo, cell_hi
        off = 1 if self.apex is not None else 0
        nv = off + K * A
        self.n_vertices = nv

        radii = np.empty(nv)
        link_index = np.empty(nv, dtype=int)
        measures = np.empty(nv)
        ring_of = np.empty(nv, dtype=int)
        if self.apex is not None:
            radii[0] = 0.0
            link_index[0] = -1
            ring_of[0] = -1
            measures[0] = lm.sum() * apex_hi ** n / n
        shell = (cell_hi ** n - cell_lo ** n) / n  # int r^(n-1) dr per ring
        for k in range(K):
            s = off + k * A
            radii[s:s + A] = ring_r[k]
            link_index[s:s + A] = np.arange(A)
            ring_of[s:s + A] = k
            measures[s:s + A] = lm * shell[k]
        self.radii = radii
        self.link_index = link_index
        self.ring_of = ring_of
        self.measures = measures

        edges, cond, elen = [], [], []
        # radial edges between consecutive rings, across the shared face
        for k in range(K - 1):
            f = cell_hi[k]
            dr = ring_r[k + 1] - ring_r[k]
            for a in range(A):
                edges.append((off + k * A + a, off + (k + 1) * A + a))
                cond.append(f ** (n - 1) * lm[a] / dr)
                elen.append(dr)
        if self.apex is not None:
            f = apex_hi
            for a in range(A):
                edges.append((0, off + a))
                cond.append(f ** (n - 1) * lm[a] / ring_r[0])
                elen.append(ring_r[0])
        # tangential edges within each ring
        width = cell_hi - cell_lo
        for k in range(K):
            r = ring_r[k]
            for e in range(len(ledges)):
                u, v = ledges[e]
                edges.append((off + k * A + int(u), off + k * A + int(v)))
                cond.append(lcond[e] * r ** (n - 3) * width[k])
                elen.append(r * (ldist[int(u), int(v)]
                                 if ldist[int(u), int(v)] > 0 else 0.0))
        self.edges = np.asarray(edges, dtype=int)
        self.conductances = np.asarray(cond, dtype=float)
        self.edge_lengths = np.asarray(elen, dtype=float)
        self.is_outer = ring_of == K - 1
        self.is_inner = (ring_of == 0) if r_min > 0 else np.zeros(nv, bool)

    # -- geometry ---------------------------------------------------------
    def base_point(self) -> int:
        """The apex when present, else a vertex on the innermost ring."""
        return self.apex if self.apex is not None else 0 if self.ring_of[0] == 0 else int(np.argmin(self.radii))

    @property
    def total_measure(self) -> float:
        return float(self.measures.sum())

    @property
    def max_edge_length(self) -> float:
        return float(self.edge_lengths.max())

    def distances_from(self, v: int) -> np.ndarray:
        """Exact cone distances from vertex v to every vertex."""
        r1 = self.radii[v]
        r = self.radii
        if v == self.apex:
            return r.copy()
        dS = self._link_dist[self.link_index[v], self.link_index].copy()
        ang = np.minimum(dS, math.pi)
        d = np.sqrt(np.maximum(
            r1 * r1 + r * r - 2.0 * r1 * r * np.cos(ang), 0.0))
        if self.apex is not None:
            d[self.apex] = r1
        d[v] = 0.0
        return d

    def distance(self, u: int, v: int) -> float:
        return float(self.distances_from(u)[v])

    def boundary_distance(self, v: int) -> float:
        """Distance from v to the truncation boundary of the grid."""
        d = self.r_max - self.radii[v]
        if self.r_min > 0:
            d = min(d, self.radii[v] - self.r_min)
        return float(d)

    # -- measures of balls --------------------------------------------------
    def ball_volume(self, v: int, r: float) -> BallVolume:
        if r <= 0:
            raise DomainError("ball radius must be positive")
        d = self.distances_from(v)
        vol = float(self.measures[d <= r * (1 + 1e-12)].sum())
        clipped = r > self.boundary_distance(v) * (1 + 1e-12)
        return BallVolume(vol, bool(clipped))


def build_cone(link, r_min, r_max, radial_steps, angular_steps=None,
               spacing="uniform") -> DiscretizedCone:
    """Convenience constructor for :class:`DiscretizedCone`."""
    return DiscretizedCone(link, r_min, r_max, radial_steps,
                           angular_steps=angular_steps, spacing=spacing)


# ---------------------------------------------------------------------------
# ball classification and parameter bookkeeping


def classify_ball(cone: DiscretizedCone, v: int, r: float,
                  epsilon: float = 0.5, base: int | None = None) -> str:
    """'anchored' if centered at the base point, 'remote' if
    r <= epsilon * d(o, x) / 2, else 'neither'."""
    if not 0 < epsilon:
        raise DomainError("epsilon must be positive")
    o = cone.base_point() if base is None else base
    if v == o:
        return "anchored"
    d = cone.distance(o, v)
    return "remote" if r <= 0.5 * epsilon * d * (1 + 1e-12) else "neither"


def combine_parameter(epsilon: float, delta0: float) -> float:
    """Remote-to-anchored combination parameter delta = epsilon delta0^2 / 8."""
    if not (0 < epsilon <= 1) or not (0 < delta0 <= 1):
        raise DomainError("epsilon and delta0 must lie in (0, 1]")
    return epsilon * delta0 ** 2 / 8.0


@dataclass
class DoublingRecord:
    vertex: int
    radius: float
    ratio: float
    case: str
    clipped: bool


@dataclass
class DoublingScan:
    records: list
    ratio_max: float
    worst: Optional[DoublingRecord]
    n_clipped: int


def doubling_scan(cone: DiscretizedCone, n_samples: int = 100,
                  r_bounds=(0.5, 1.5), seed: int = 0, epsilon: float = 0.5,
                  anchored: bool = False, workers: int = 1) -> DoublingScan:
    """Sample balls and record V(x, 2r)/V(x, r); clipped doubles excluded.

    With ``anchored=True`` all samples are centered at the base point.
    Deterministic for a fixed seed; ``workers`` only chunks the evaluation.
    """
    rng = np.random.default_rng(seed)
    lo, hi = r_bounds
    if not 0 < lo < hi:
        raise DomainError("need 0 < r_lo < r_hi")
    records, n_clipped = [], 0
    tries = 0
    while len(records) < n_samples and tries < 50 * n_samples:
        tries += 1
        r = float(rng.uniform(lo, hi))
        if anchored:
            v = cone.base_point()
        else:
            v = int(rng.integers(0, cone.n_vertices))
        b2 = cone.ball_volume(v, 2 * r)
        if b2.clipped:
            n_clipped += 1
            continue
        b1 = cone.ball_volume(v, r)
        case = classify_ball(cone, v, r, epsilon=epsilon)
        records.append(DoublingRecord(v, r, b2.volume / b1.volume, case,
                                      False))
    worst = max(records, key=lambda rec: rec.ratio) if records else None
    return DoublingScan(records, worst.ratio if worst else math.nan, worst,
                        n_clipped)


# ---------------------------------------------------------------------------
# nets and coverings on a cone


def separated_net(cone: DiscretizedCone, region, s: float) -> list:
    """Greedy maximal s-separated subset of ``region`` (vertex indices).

    Pairwise distances are >= s and every region vertex lies within s of the
    net.  Deterministic: vertices are visited in index order.
    """
    if s <= 0:
        raise DomainError("separation must be positive")
    region = sorted(int(v) for v in region)
    if not region:
        raise DomainError("region is empty")
    mindist = np.full(cone.n_vertices, np.inf)
    net = []
    for v in region:
        if mindist[v] >= s:
            net.append(v)
            mindist = np.minimum(mindist, cone.distances_from(v))
    return net


def net_covering(cone: DiscretizedCone, region, s: float,
                 buffer_factor: float = 3.0) -> GoodCovering:
    """Good covering of ``region`` by balls around a maximal s-separated net.

    U_i = B(x_i, s) and U*_i = U#_i = B(x_i, buffer_factor*s + h) where h is
    the longest grid edge; the slack h makes the witness k(i,j) = i valid on
    a discrete grid (cells that touch have centers within 2s + h).
    """
    net = separated_net(cone, region, s)
    dists = [cone.distances_from(x) for x in net]
    in_U = np.zeros(cone.n_vertices, dtype=bool)
    for d in dists:
        in_U |= d <= s * (1 + 1e-12)
    # grid slack: touching cells have centers within 2s + (longest edge
    # incident to a small ball), so that much is added to the buffer radius
    touch_edge = in_U[cone.edges[:, 0]] | in_U[cone.edges[:, 1]]
    h = float(cone.edge_lengths[touch_edge].max()) if touch_edge.any() else 0.0
    big = buffer_factor * s + h
    atoms_needed = set(int(v) for v in region)
    cells = []
    for d in dists:
        U = frozenset(np.flatnonzero(d <= s * (1 + 1e-12)).tolist())
        Us = frozenset(np.flatnonzero(d <= big * (1 + 1e-12)).tolist())
        cells.append(Cell(U, Us, Us))
        atoms_needed |= Us
        atoms_needed |= U
    Asharp = frozenset().union(*(c.Usharp for c in cells))
    atoms_needed |= Asharp
    atom_measures = {int(a): float(cone.measures[a]) for a in atoms_needed}
    adjacency = [(int(a), int(b)) for a, b in cone.edges
                 if int(a) in atoms_needed and int(b) in atoms_needed]
    return GoodCovering(atom_measures, cells, frozenset(int(v) for v in region),
                        Asharp, adjacency)


def annular_covering(cone: DiscretizedCone, R: float, kappa: float,
                     levels: int) -> GoodCovering:
    """Covering by the disk D_R and annuli A_i = A(kappa^(i-1) R, kappa^i R),
    with buffers U*_i = U#_i = union of the neighbors at distance <= 1.

    The outermost annulus must fit inside the truncated grid.
    """
    if kappa <= 1:
        raise DomainError("kappa must exceed 1")
    if levels < 1:
        raise DomainError("need at least one annulus")
    outer = R * kappa ** levels
    if outer > cone.r_max * (1 + 1e-12):
        raise DomainError(
            f"annuli reach radius {outer:g} beyond the grid r_max {cone.r_max:g}")
    r = cone.radii
    bands = []
    bands.append(np.flatnonzero(r <= R))          # A_0 = D_R
    for i in range(1, levels + 1):
        lo, hi = R * kappa ** (i - 1), R * kappa ** i
        bands.append(np.flatnonzero((r > lo) & (r <= hi)))
    for i, b in enumerate(bands):
        if len(b) == 0:
            raise DomainError(f"annulus {i} contains no grid vertices")
    cells = []
    for i in range(len(bands)):
        U = frozenset(bands[i].tolist())
        nbrs = range(max(0, i - 1), min(len(bands), i + 2))
        Us = frozenset(np.concatenate([bands[j] for j in nbrs]).tolist())
        cells.append(Cell(U, Us, Us))
    A = frozenset(np.concatenate(bands).tolist())
    Asharp = frozenset().union(*(c.Usharp for c in cells))
    atoms = sorted(Asharp)
    atom_measures = {int(a): float(cone.measures[a]) for a in atoms}
    aset = set(atoms)
    adjacency = [(int(a), int(b)) for a, b in cone.edges
                 if int(a) in aset and int(b) in aset]
    return GoodCovering(atom_measures, cells, A, Asharp, adjacency)


# ---------------------------------------------------------------------------
# radius field


@dataclass
class RadiusField:
    values: np.ndarray
    base: int

    def equivalence_constant(self, cone: DiscretizedCone) -> float:
        """Smallest c >= 1 with rho/c <= sqrt(1 + d(o, x)^2) <= c rho."""
        d = cone.distances_from(self.base)
        ref = np.sqrt(1.0 + d * d)
        return float(max((self.values / ref).max(), (ref / self.values).max()))


def radius_field(cone: DiscretizedCone, base: int | None = None) -> RadiusField:
    """Regularized radius rho = max(1, r); rho >= 1 everywhere and rho = r on
    the exact-cone region {r >= 1}."""
    o = cone.base_point() if base is None else base
    return RadiusField(np.maximum(1.0, cone.radii.copy()), o)


# ---------------------------------------------------------------------------
# JSON wire format


def cone_from_json(text: str, base_dir: str | None = None) -> DiscretizedCone:
    """Build a cone from its JSON description.

    {"link": {"kind": "circle", "length": 6.2832}
           | {"kind": "sphere", "n_theta": 12, "n_phi": 24}
           | {"kind": "graph", "nodes": [...], "edges": [...], "dim": 2},
     "r_min": 0.0, "r_max": 8.0, "radial_steps": 256, "angular_steps": 256,
     "spacing": "uniform"}
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"malformed cone JSON: {exc}") from exc
    try:
        spec = doc["link"]
        kind = spec["kind"]
        if kind == "circle":
            link = CircleLink(float(spec["length"]))
        elif kind == "sphere":
            link = sphere_link(int(spec["n_theta"]), int(spec["n_phi"]))
        elif kind == "graph":
            nodes = spec["nodes"]
            edges = [(e["i"], e["j"]) for e in spec["edges"]]
            lengths = [float(e["length"]) for e in spec["edges"]]
            cond = [float(e.get("conductance",
                                max(nodes[e["i"]]["measure"],
                                    nodes[e["j"]]["measure"]) / e["length"]))
                    for e in spec["edges"]]
            link = GraphLink(tuple(float(nd["measure"]) for nd in nodes),
                             tuple(edges), tuple(cond), tuple(lengths),
                             dim=int(spec.get("dim", 2)))
        else:
            raise DomainError(f"unknown link kind {kind!r}")
        return build_cone(link, float(doc["r_min"]), float(doc["r_max"]),
                          int(doc["radial_steps"]),
                          angular_steps=doc.get("angular_steps"),
                          spacing=doc.get("spacing", "uniform"))
    except (KeyError, TypeError, IndexError) as exc:
        raise DomainError(f"malformed cone JSON: {exc}") from exc
