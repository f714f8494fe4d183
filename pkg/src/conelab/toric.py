"""Toric Gorenstein cones: cross-sections, triangulations and the volume
invariant of compactly supported Kahler classes.

Lattice geometry (Gorenstein covectors, lattice points, triangulations,
determinants, support function convexity) is done in exact integer/rational
arithmetic; only the final volume evaluations use floating point.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import (DomainError, InternalFault, PreconditionError,
                     UnsupportedError)

Vec = tuple


# ---------------------------------------------------------------------------
# exact integer linear algebra


def _smith_normal_form(A):
    """Return (D, U, V) with U A V = D diagonal, U, V unimodular.

    Plain elimination over the integers; fine for the tiny matrices that
    arise from fans (a handful of rays in dimension <= 3).
    """
    A = [list(map(int, row)) for row in A]
    rows, cols = len(A), len(A[0])
    U = [[int(i == j) for j in range(rows)] for i in range(rows)]
    V = [[int(i == j) for j in range(cols)] for i in range(cols)]

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for r in A:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]

    def add_row(dst, src, q):
        A[dst] = [a + q * b for a, b in zip(A[dst], A[src])]
        U[dst] = [a + q * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, q):
        for r in A:
            r[dst] += q * r[src]
        for r in V:
            r[dst] += q * r[src]

    t = 0
    while t < min(rows, cols):
        # find a pivot
        piv = None
        for i in range(t, rows):
            for j in range(t, cols):
                if A[i][j] != 0:
                    if piv is None or abs(A[i][j]) < abs(A[piv[0]][piv[1]]):
                        piv = (i, j)
        if piv is None:
            break
        swap_rows(t, piv[0])
        swap_cols(t, piv[1])
        done = False
        while not done:
            done = True
            for i in range(t + 1, rows):
                if A[i][t] != 0:
                    add_row(i, t, -(A[i][t] // A[t][t]))
                    if A[i][t] != 0:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, cols):
                if A[t][j] != 0:
                    add_col(j, t, -(A[t][j] // A[t][t]))
                    if A[t][j] != 0:
                        swap_cols(t, j)
                        done = False
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-x for x in U[t]]
        t += 1
    return A, U, V


def integer_solve(A, b):
    """Solve A x = b over the integers; return (x, None) or (None, reason)."""
    D, U, V = _smith_normal_form(A)
    rows, cols = len(D), len(D[0])
    c = [sum(U[i][k] * b[k] for k in range(rows)) for i in range(rows)]
    y = [0] * cols
    for i in range(rows):
        d = D[i][i] if i < cols else 0
        if d == 0:
            if c[i] != 0:
                return None, f"inconsistent: row {i} requires 0 = {c[i]}"
        else:
            if c[i] % d != 0:
                return None, (f"no integral solution: row {i} requires "
                              f"{c[i]} divisible by {d}")
            y[i] = c[i] // d
    x = [sum(V[i][k] * y[k] for k in range(cols)) for i in range(cols)]
    return tuple(x), None


def _kernel_basis(A):
    """Integer basis of the kernel lattice of A (rows = equations)."""
    D, _, V = _smith_normal_form(A)
    rows, cols = len(D), len(D[0])
    rank = sum(1 for i in range(min(rows, cols)) if D[i][i] != 0)
    return [tuple(V[i][k] for i in range(cols)) for k in range(rank, cols)]


def _frac_solve(A, b):
    """Exact solve of a square rational system; None if singular."""
    n = len(A)
    M = [[Fraction(A[i][j]) for j in range(n)] + [Fraction(b[i])]
         for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        inv = M[col][col]
        M[col] = [x / inv for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return tuple(M[i][n] for i in range(n))


def _det(M):
    """Exact determinant of a small integer/rational matrix."""
    n = len(M)
    M = [[Fraction(x) for x in row] for row in M]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            det = -det
        det *= M[col][col]
        inv = M[col][col]
        M[col] = [x / inv for x in M[col]]
        for r in range(col + 1, n):
            if M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return det


def _primitive(v):
    g = 0
    for x in v:
        g = math.gcd(g, abs(int(x)))
    return g


# ---------------------------------------------------------------------------
# cone data and the Gorenstein covector


@dataclass(frozen=True)
class ToricConeData:
    """Rational polyhedral cone given by its primitive ray generators."""
    dim: int
    rays: tuple

    def __post_init__(self):
        if self.dim < 2:
            raise DomainError("dimension must be >= 2")
        if len(self.rays) < self.dim:
            raise DomainError("need at least dim rays")
        for u in self.rays:
            if len(u) != self.dim:
                raise DomainError(f"ray {u} has wrong dimension")
            if _primitive(u) != 1:
                raise DomainError(f"ray {u} is not primitive")
        if len(set(self.rays)) != len(self.rays):
            raise DomainError("duplicate rays")
        # pointedness: the rays must lie in an open half space
        from scipy.optimize import linprog
        A = -np.asarray(self.rays, dtype=float)
        res = linprog(np.zeros(self.dim), A_ub=A,
                      b_ub=-np.ones(len(self.rays)),
                      bounds=[(None, None)] * self.dim, method="highs")
        if not res.success:
            raise DomainError("rays do not span a strictly convex cone")


@dataclass(frozen=True)
class GorensteinResult:
    gamma: Optional[Vec]
    certificate: Optional[str]
    unique: bool


def gorenstein_covector(cone: ToricConeData) -> GorensteinResult:
    """Integer covector gamma with <gamma, u_j> = 1 for every ray, if any.

    When absent, ``certificate`` names the obstruction.  The covector is
    unique iff the rays span the ambient space over Q.
    """
    A = [list(u) for u in cone.rays]
    x, reason = integer_solve(A, [1] * len(cone.rays))
    rank = cone.dim - len(_kernel_basis(A))
    if x is None:
        return GorensteinResult(None, reason, rank == cone.dim)
    return GorensteinResult(tuple(int(v) for v in x), None, rank == cone.dim)


# ---------------------------------------------------------------------------
# cross-section polytope


def _hull2d(points):
    """Convex hull of integer points (monotone chain), counterclockwise."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    def cross(o, a, b):
        return ((a[0] - o[0]) * (b[1] - o[1])
                - (a[1] - o[1]) * (b[0] - o[0]))
    lo, hi = [], []
    for p in pts:
        while len(lo) >= 2 and cross(lo[-2], lo[-1], p) <= 0:
            lo.pop()
        lo.append(p)
    for p in reversed(pts):
        while len(hi) >= 2 and cross(hi[-2], hi[-1], p) <= 0:
            hi.pop()
        hi.append(p)
    return lo[:-1] + hi[:-1]


def _on_segment(p, a, b):
    cross = ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]))
    if cross != 0:
        return False
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


@dataclass
class CrossSection:
    gamma: Vec
    origin: Vec                 # lattice point with <gamma, origin> = 1
    basis: tuple                # lattice basis of ker(gamma)
    rays: tuple                 # the defining rays (all on the gamma=1 level)
    dim: int                    # dimension of the polytope (lattice rank)
    points2d: tuple             # all lattice points, hyperplane coordinates
    boundary2d: tuple
    interior2d: tuple

    def to_ambient(self, q) -> Vec:
        v = list(self.origin)
        for c, bvec in zip(q, self.basis):
            for i in range(len(v)):
                v[i] += c * bvec[i]
        return tuple(v)


def cross_section(cone: ToricConeData, gamma) -> CrossSection:
    """Lattice polytope cut out of the cone by the level <gamma, .> = 1.

    Its vertices are the rays (all of which must satisfy <gamma, u> = 1) and
    its lattice points are enumerated and classified as boundary or interior.
    Polytopes of dimension > 2 are out of scope.
    """
    gamma = tuple(int(g) for g in gamma)
    for u in cone.rays:
        if sum(g * x for g, x in zip(gamma, u)) != 1:
            raise PreconditionError(f"<gamma, {u}> != 1")
    kernel = _kernel_basis([list(gamma)])
    origin = cone.rays[0]
    m = cone.dim

    def to2d(x):
        diff = [x[i] - origin[i] for i in range(m)]
        B = [[kernel[k][i] for k in range(len(kernel))] for i in range(m)]
        # solve B q = diff over the rationals; the kernel basis makes the
        # solution integral for lattice points on the level set
        sol = _lstsq_exact(B, diff)
        return tuple(int(c) for c in sol)

    verts2d = [to2d(u) for u in cone.rays]
    rank = _point_rank(verts2d)
    if rank > 2:
        raise UnsupportedError("cross-sections of dimension > 2 are out of scope")
    if rank == 0:
        pts = [verts2d[0]]
        boundary, interior = pts, []
    elif rank == 1:
        pts, boundary, interior = _segment_points(verts2d)
    else:
        pts, boundary, interior = _polygon_points(verts2d)
    return CrossSection(gamma, origin, tuple(kernel), cone.rays, rank,
                        tuple(pts), tuple(boundary), tuple(interior))


def _lstsq_exact(B, diff):
    """Solve the overdetermined consistent system B q = diff exactly."""
    m, k = len(B), len(B[0]) if B and B[0] else (len(B), 0)
    k = len(B[0]) if B else 0
    if k == 0:
        return ()
    # pick k independent rows
    rows = []
    for i in range(m):
        rows.append(i)
        sub = [[Fraction(B[r][c]) for c in range(k)] for r in rows]
        if _rank_frac(sub) < len(rows):
            rows.pop()
        if len(rows) == k:
            break
    A = [[B[r][c] for c in range(k)] for r in rows]
    b = [diff[r] for r in rows]
    sol = _frac_solve(A, b)
    if sol is None:
        raise InternalFault("kernel basis is degenerate")
    # consistency check on the remaining rows
    for r in range(m):
        lhs = sum(Fraction(B[r][c]) * sol[c] for c in range(k))
        if lhs != diff[r]:
            raise PreconditionError("point does not lie on the level set")
    return sol


def _rank_frac(M):
    M = [row[:] for row in M]
    rank = 0
    n_rows, n_cols = len(M), len(M[0]) if M else 0
    for col in range(n_cols):
        piv = next((r for r in range(rank, n_rows) if M[r][col] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = M[rank][col]
        M[rank] = [x / inv for x in M[rank]]
        for r in range(n_rows):
            if r != rank and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[rank])]
        rank += 1
    return rank


def _point_rank(pts):
    if len(pts) <= 1:
        return 0
    base = pts[0]
    M = [[Fraction(p[i] - base[i]) for i in range(len(base))] for p in pts[1:]]
    return _rank_frac(M)


def _segment_points(verts2d):
    # all points are collinear in Z^2 (or Z^1); walk the primitive direction
    pts = sorted(set(verts2d))
    a, b = pts[0], pts[-1]
    d = tuple(x - y for x, y in zip(b, a))
    g = _primitive(d)
    step = tuple(x // g for x in d)
    points = [tuple(a[i] + k * step[i] for i in range(len(a)))
              for k in range(g + 1)]
    return points, [points[0], points[-1]], points[1:-1]


def _polygon_points(verts2d):
    hull = _hull2d(verts2d)
    xs = [p[0] for p in verts2d]
    ys = [p[1] for p in verts2d]
    points, boundary, interior = [], [], []
    edges = list(zip(hull, hull[1:] + hull[:1]))
    def inside(p):
        for a, b in edges:
            cr = ((b[0] - a[0]) * (p[1] - a[1])
                  - (b[1] - a[1]) * (p[0] - a[0]))
            if cr < 0:
                return None
            if cr == 0 and _on_segment(p, a, b):
                return "boundary"
        return "interior"
    for x in range(min(xs), max(xs) + 1):
        for y in range(min(ys), max(ys) + 1):
            where = inside((x, y))
            if where == "boundary":
                points.append((x, y))
                boundary.append((x, y))
            elif where == "interior":
                points.append((x, y))
                interior.append((x, y))
    return points, boundary, interior


# ---------------------------------------------------------------------------
# maximal (unimodular) triangulation


@dataclass
class FanTriangulation:
    cone: ToricConeData
    section: CrossSection
    rays: tuple         # ambient lattice points: boundary first, then interior
    n_boundary: int
    simplices: tuple    # tuples of ray indices (m per simplex)
    maximal: bool       # no simplex contains lattice points beyond vertices
    basic: bool         # every simplex has determinant +-1

    @property
    def interior_rays(self):
        return self.rays[self.n_boundary:]


def _tri_extra_points(tri, all_pts):
    """Lattice points of ``all_pts`` inside the closed triangle, not vertices."""
    a, b, c = tri
    out = []
    for p in all_pts:
        if p in (a, b, c):
            continue
        d1 = _orient(a, b, p)
        d2 = _orient(b, c, p)
        d3 = _orient(c, a, p)
        if (d1 >= 0 and d2 >= 0 and d3 >= 0) or (d1 <= 0 and d2 <= 0 and d3 <= 0):
            out.append(p)
    return sorted(out)


def _orient(a, b, p):
    return ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]))


def maximal_triangulation(section: CrossSection,
                          cone: ToricConeData) -> FanTriangulation:
    """Triangulate the cross-section using every lattice point as a vertex.

    In dimension <= 2 such a maximal triangulation is automatically basic
    (each simplex spans the lattice, determinant +-1), which is verified.
    Higher dimensions are out of scope.
    """
    if section.dim > 2:
        raise UnsupportedError("triangulation beyond dimension 2 is out of scope")
    pts = list(section.points2d)
    if section.dim == 0:
        raise DomainError("cross-section is a single point")
    if section.dim == 1:
        ordered = sorted(pts)
        simpl2d = [(ordered[k], ordered[k + 1]) for k in range(len(ordered) - 1)]
    else:
        hull = _hull2d(pts)
        if _orient(hull[0], hull[1], hull[2]) < 0:
            hull = hull[::-1]
        stack = [(hull[0], hull[k], hull[k + 1])
                 for k in range(1, len(hull) - 1)]
        simpl2d = []
        while stack:
            tri = stack.pop()
            extras = _tri_extra_points(tri, pts)
            if not extras:
                simpl2d.append(tri)
                continue
            q = extras[0]
            a, b, c = tri
            if _orient(a, b, q) == 0:
                stack += [(a, q, c), (q, b, c)]
            elif _orient(b, c, q) == 0:
                stack += [(b, q, a), (q, c, a)]
            elif _orient(c, a, q) == 0:
                stack += [(c, q, b), (q, a, b)]
            else:
                stack += [(a, b, q), (b, c, q), (c, a, q)]
        simpl2d.sort()
    boundary = sorted(section.boundary2d)
    interior = sorted(section.interior2d)
    coords = boundary + interior
    index = {p: k for k, p in enumerate(coords)}
    rays = tuple(section.to_ambient(p) for p in coords)
    simplices = tuple(tuple(index[p] for p in s) for s in simpl2d)
    maximal = all(not _tri_extra_points(s, pts) for s in simpl2d) \
        if section.dim == 2 else True
    basic = all(abs(_det([rays[i] for i in s])) == 1 for s in simplices)
    return FanTriangulation(cone, section, rays, len(boundary), simplices,
                            bool(maximal), bool(basic))


# ---------------------------------------------------------------------------
# support functions and Kahler classes


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10 ** 12)
    if isinstance(x, str):
        return Fraction(x)
    raise DomainError(f"cannot interpret support value {x!r}")


def _support_values(tri: FanTriangulation, values):
    if isinstance(values, dict):
        vals = []
        for u in tri.rays:
            if u in values:
                vals.append(_as_fraction(values[u]))
            elif tuple(u) in values:
                vals.append(_as_fraction(values[tuple(u)]))
            else:
                raise DomainError(f"missing support value for ray {u}")
        return vals
    vals = [_as_fraction(x) for x in values]
    if len(vals) != len(tri.rays):
        raise DomainError("support value list does not match the rays")
    return vals


@dataclass
class SupportCheck:
    strictly_convex: bool
    compactly_supported: bool
    linear_forms: tuple      # l_sigma per simplex, Fractions
    witnesses: tuple         # (simplex index, ray) pairs where strictness fails


def support_function_check(tri: FanTriangulation, values) -> SupportCheck:
    """Check strict convexity of the piecewise-linear support function h with
    h(u_j) = values[j]: on each top cone sigma, the linear form l_sigma agrees
    with h on sigma and must dominate it strictly off sigma.  Compact support
    means h vanishes on the boundary rays."""
    vals = _support_values(tri, values)
    forms = []
    witnesses = []
    strict = True
    for si, s in enumerate(tri.simplices):
        A = [list(tri.rays[i]) for i in s]
        b = [vals[i] for i in s]
        l = _frac_solve(A, b)
        if l is None:
            raise DomainError(f"simplex {s} is degenerate")
        forms.append(l)
        for j, u in enumerate(tri.rays):
            val = sum(Fraction(x) * c for x, c in zip(u, l))
            if j in s:
                continue
            if val <= vals[j]:
                strict = False
                witnesses.append((si, u))
    compact = all(vals[j] == 0 for j in range(tri.n_boundary))
    return SupportCheck(strict, compact, tuple(forms), tuple(witnesses))


@dataclass
class KahlerClass:
    lambdas: dict            # interior ray -> lambda_j (float)
    coefficients: dict       # interior ray -> class coefficient -2 pi lambda_j
    strictly_convex: bool
    compactly_supported: bool
    is_kahler: bool


def kahler_class(tri: FanTriangulation, values) -> KahlerClass:
    """Compactly supported class [omega_h] = -2 pi sum_j lambda_j c_j over the
    exceptional divisors (interior rays).  A class with every lambda_j = 0 is
    flagged as not Kahler; nonzero values failing strict convexity are
    rejected."""
    vals = _support_values(tri, values)
    chk = support_function_check(tri, values)
    if not chk.compactly_supported:
        raise PreconditionError("support values must vanish on boundary rays")
    nonzero = any(v != 0 for v in vals)
    if nonzero and not chk.strictly_convex:
        raise PreconditionError(
            "support function is not strictly convex: " +
            ", ".join(f"simplex {s} / ray {u}" for s, u in chk.witnesses[:3]))
    lambdas = {u: float(vals[tri.n_boundary + k])
               for k, u in enumerate(tri.interior_rays)}
    coeffs = {u: -2.0 * math.pi * lam for u, lam in lambdas.items()}
    return KahlerClass(lambdas, coeffs, chk.strictly_convex,
                       chk.compactly_supported, nonzero and chk.strictly_convex)


# ---------------------------------------------------------------------------
# the volume invariant


def _poly_vertices(ineqs, dim):
    """Exact vertices of {y : <u, y> >= rhs for (u, rhs) in ineqs}."""
    verts = set()
    for combo in itertools.combinations(range(len(ineqs)), dim):
        A = [list(ineqs[k][0]) for k in combo]
        b = [ineqs[k][1] for k in combo]
        y = _frac_solve(A, b)
        if y is None:
            continue
        ok = all(sum(Fraction(u[i]) * y[i] for i in range(dim)) >= rhs
                 - Fraction(0) for u, rhs in ineqs)
        if ok and all(sum(Fraction(u[i]) * y[i] for i in range(dim)) >= rhs
                      for u, rhs in ineqs):
            verts.add(tuple(y))
    return sorted(verts)


def _hull_volume(verts, dim):
    if len(verts) < dim + 1:
        return 0.0
    from scipy.spatial import ConvexHull, QhullError
    pts = np.array([[float(x) for x in v] for v in verts])
    try:
        return float(ConvexHull(pts).volume)
    except QhullError:
        return 0.0


def _face_relative_volume(verts, u, dim):
    """Lattice-normalized (dim-1)-volume of the face conv(verts) lying on a
    hyperplane with primitive normal u: Euclidean volume divided by |u|."""
    norm = math.sqrt(sum(float(x) ** 2 for x in u))
    pts = np.array([[float(x) for x in v] for v in verts])
    if dim == 2:
        if len(verts) < 2:
            return 0.0
        return float(np.max(
            [np.linalg.norm(pts[i] - pts[j])
             for i in range(len(pts)) for j in range(len(pts))])) / norm
    # dim == 3: project to an orthonormal basis of the hyperplane
    if len(verts) < 3:
        return 0.0
    n = np.array([float(x) for x in u]) / norm
    a = np.array([1.0, 0.0, 0.0])
    if abs(n[0]) > 0.9:
        a = np.array([0.0, 1.0, 0.0])
    e1 = np.cross(n, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    proj = np.c_[pts @ e1, pts @ e2]
    from scipy.spatial import ConvexHull, QhullError
    try:
        return float(ConvexHull(proj).volume) / norm
    except QhullError:
        return 0.0


@dataclass
class InvariantA:
    value: float
    divisor_sum: Optional[float]
    polytope_volume: Optional[float]
    excised_volume: Optional[float]   # vol(C \ C_h), lattice normalization
    m: int


def invariant_A(tri: FanTriangulation, values, omega_link: float,
                method: str = "both", rel_tol: float = 1e-9) -> InvariantA:
    """Volume invariant of a compactly supported Kahler class on the
    resolution, computed from the dual cone C = {y : <u_j, y> >= 0}:

      divisor_sum:      A = -(2 pi)^m / ((m-1) m Omega) sum_j lambda_j vol(F_j)
      polytope_volume:  A = -(2 pi)^m / ((m-1) Omega) vol(C \\ C_h)

    where C_h = {y : <u_j, y> >= lambda_j}, F_j is the bounded facet of C_h on
    <u_j, y> = lambda_j, and facet volumes are lattice-normalized.  The two
    routes are independent; with ``method='both'`` they must agree to
    ``rel_tol`` relative accuracy.  Negative for every nonzero class.
    """
    if omega_link <= 0:
        raise DomainError("the link volume must be positive")
    if method not in ("both", "divisor_sum", "polytope_volume"):
        raise DomainError(f"unknown method {method!r}")
    vals = _support_values(tri, values)
    chk = support_function_check(tri, values)
    if not chk.compactly_supported:
        raise PreconditionError("class is not compactly supported")
    nonzero = any(v != 0 for v in vals)
    if nonzero and not chk.strictly_convex:
        raise PreconditionError("support function is not strictly convex")
    m = tri.cone.dim
    rays = tri.rays
    cone_ineqs = [(u, Fraction(0)) for u in rays]
    h_ineqs = [(u, vals[j]) for j, u in enumerate(rays)]
    # cap direction: interior of the span of the rays
    w = tuple(sum(u[i] for u in rays) for i in range(m))
    vh = _poly_vertices(h_ineqs, m)  # bounded vertices of C_h
    wmax = max((sum(Fraction(w[i]) * v[i] for i in range(m)) for v in vh),
               default=Fraction(1))
    T = 2 * wmax + 1

    def excised(Tcap):
        cap = (tuple(-x for x in w), -Tcap)
        v0 = _poly_vertices(cone_ineqs + [cap], m)
        v1 = _poly_vertices(h_ineqs + [cap], m)
        return _hull_volume(v0, m) - _hull_volume(v1, m)

    vol = excised(T)
    vol2 = excised(2 * T)
    for _ in range(8):
        if abs(vol - vol2) <= 1e-12 * max(abs(vol), 1.0):
            break
        T, vol = 2 * T, vol2
        vol2 = excised(2 * T)
    else:
        raise InternalFault("excised volume did not stabilize under capping")

    result_div = None
    result_vol = None
    if method in ("both", "polytope_volume"):
        result_vol = (-(2 * math.pi) ** m * vol / ((m - 1) * omega_link))
    if method in ("both", "divisor_sum"):
        cap = (tuple(-x for x in w), -T)
        vcap = _poly_vertices(h_ineqs + [cap], m)
        total = 0.0
        for j in range(tri.n_boundary, len(rays)):
            if vals[j] == 0:
                continue
            u = rays[j]
            face = [v for v in vcap
                    if sum(Fraction(u[i]) * v[i] for i in range(m)) == vals[j]]
            on_cap = [v for v in face
                      if sum(Fraction(w[i]) * v[i] for i in range(m)) == T]
            if on_cap:
                raise PreconditionError(
                    f"divisor facet of ray {u} is unbounded")
            total += float(vals[j]) * _face_relative_volume(face, u, m)
        result_div = (-(2 * math.pi) ** m * total
                      / ((m - 1) * m * omega_link))
    if method == "both":
        scale = max(abs(result_div), abs(result_vol), 1e-300)
        if abs(result_div - result_vol) > rel_tol * scale and nonzero:
            raise InternalFault(
                f"divisor_sum {result_div} and polytope_volume {result_vol} "
                f"disagree beyond {rel_tol}")
        value = result_div
    else:
        value = result_div if result_div is not None else result_vol
    return InvariantA(float(value), result_div, result_vol, float(vol), m)
