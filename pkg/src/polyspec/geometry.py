"""Convex polytopes, affine isometries, and reflection groups.

A ``Polytope`` is stored in half-space form {r : r . n_j > alpha_j} with
unit *inward* normals, together with closed-form face measures, volume,
boundary area and diameter supplied by the constructors.  The built-in
constructors cover boxes in any dimension, the three mirror-symmetric
triangles (plus one that does not tile, as a negative fixture), the
corresponding prisms, and three space-filling tetrahedra.

``reflection_group`` enumerates words in the face reflections breadth
first; images move cell-by-cell, so pruning by centroid distance is
sound.  ``strict_tessellation_check`` turns that enumeration into a
radius-bounded certificate (explicitly not a proof for all of R^n).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

DEDUP_TOL = 1e-9


# ---------------------------------------------------------------------------
# isometries


@dataclass(frozen=True)
class Isometry:
    """Affine isometry r -> q @ r + t with orthogonal linear part."""
    q: np.ndarray
    t: np.ndarray
    word: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))

    @property
    def dim(self) -> int:
        return len(self.t)

    @property
    def sign(self) -> int:
        return 1 if np.linalg.det(self.q) > 0 else -1

    @staticmethod
    def identity(n: int) -> "Isometry":
        return Isometry(np.eye(n), np.zeros(n))

    @property
    def is_identity(self) -> bool:
        return (np.abs(self.q - np.eye(self.dim)).max() < DEDUP_TOL
                and np.abs(self.t).max() < DEDUP_TOL)

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.q.T + self.t

    def compose(self, other: "Isometry") -> "Isometry":
        """self after other: (self*other)(r) = self(other(r))."""
        return Isometry(self.q @ other.q, self.q @ other.t + self.t,
                        self.word + other.word)

    def inverse(self) -> "Isometry":
        qi = self.q.T
        return Isometry(qi, -qi @ self.t)

    def scaled(self, lam: float) -> "Isometry":
        """The conjugate by r -> lam * r (same linear part, scaled shift)."""
        return Isometry(self.q, lam * self.t, self.word)

    def distance(self, other: "Isometry") -> float:
        return max(np.abs(self.q - other.q).max(), np.abs(self.t - other.t).max())

    def _keys(self) -> tuple[tuple, tuple]:
        """Two offset rounding grids; near-equal isometries share at
        least one key, so the pair is a safe dedup test at 1e-9."""
        flat = np.concatenate([self.q.ravel(), self.t]) / 1e-6
        k1 = tuple(np.round(flat).astype(np.int64).tolist())
        k2 = tuple(np.round(flat + 0.5).astype(np.int64).tolist())
        return k1, k2


# ---------------------------------------------------------------------------
# polytopes


@dataclass(frozen=True)
class Face:
    normal: np.ndarray   # unit, inward
    offset: float        # face plane is {r . normal = offset}
    measure: float       # (n-1)-dimensional measure


@dataclass(frozen=True)
class Polytope:
    dim: int
    faces: tuple
    volume: float
    boundary_area: float
    diameter: float
    kind: str = "custom"
    parameters: tuple = ()
    is_box: bool = False
    sides: tuple = ()
    vertices: np.ndarray | None = None

    @property
    def normals(self) -> np.ndarray:
        return np.array([f.normal for f in self.faces])

    @property
    def offsets(self) -> np.ndarray:
        return np.array([f.offset for f in self.faces])

    @property
    def face_measures(self) -> np.ndarray:
        return np.array([f.measure for f in self.faces])

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all(pts @ self.normals.T >= self.offsets - tol, axis=1)

    def interior_point(self) -> np.ndarray:
        t, x = _chebyshev(self.normals, self.offsets)
        if t <= 0:
            raise ValueError("polytope has empty interior")
        return x

    def centroid(self) -> np.ndarray:
        if self.vertices is not None:
            return self.vertices.mean(axis=0)
        return self.interior_point()

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.is_box:
            return np.zeros(self.dim), np.array(self.sides, dtype=float)
        if self.vertices is None:
            raise ValueError("no bounding box available")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def scaled(self, lam: float) -> "Polytope":
        """Dilation by lam about the origin."""
        faces = tuple(Face(f.normal, lam * f.offset, lam ** (self.dim - 1) * f.measure)
                      for f in self.faces)
        return Polytope(
            self.dim, faces, lam ** self.dim * self.volume,
            lam ** (self.dim - 1) * self.boundary_area, lam * self.diameter,
            self.kind, self.parameters, self.is_box,
            tuple(lam * s for s in self.sides),
            None if self.vertices is None else lam * self.vertices)

    def face_reflection(self, j: int) -> Isometry:
        f = self.faces[j]
        n = f.normal
        q = np.eye(self.dim) - 2.0 * np.outer(n, n)
        return Isometry(q, 2.0 * f.offset * n, (j,))

    def descriptor(self) -> dict:
        return {"kind": self.kind, "parameters": list(self.parameters)}


def _chebyshev(normals: np.ndarray, offsets: np.ndarray) -> tuple[float, np.ndarray]:
    """max t s.t. normals @ x - t >= offsets; t > 0 iff interior nonempty.

    For two stacked half-space systems, the sign of t classifies the
    intersection: t > 0 overlapping interiors, t ~ 0 touching closures,
    t < 0 disjoint closures (t is then only a margin, not a distance).
    """
    m, n = normals.shape
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-normals, np.ones((m, 1))])
    b_ub = -offsets
    res = linprog(c, A_ub=a_ub, b_ub=b_ub,
                  bounds=[(None, None)] * n + [(None, None)],
                  method="highs")
    if not res.success:
        raise RuntimeError(f"LP failed: {res.message}")
    return float(res.x[-1]), res.x[:-1]


def _relative_interior_point(normals, offsets, active_tol=1e-8):
    """A point maximizing capped slacks; active faces stay active."""
    m, n = normals.shape
    cap = 1e-3
    # variables: x (n), u (m); maximize sum u, u_i <= slack_i, u_i <= cap
    c = np.concatenate([np.zeros(n), -np.ones(m)])
    a_ub = np.vstack([
        np.hstack([-normals, np.eye(m)]),
        np.hstack([np.zeros((m, n)), np.eye(m)]),
        np.hstack([normals * 0, -np.eye(m)]),
    ])
    b_ub = np.concatenate([-offsets, np.full(m, cap), np.zeros(m)])
    res = linprog(c, A_ub=a_ub, b_ub=b_ub,
                  bounds=[(None, None)] * n + [(None, None)] * m,
                  method="highs")
    if not res.success:
        raise RuntimeError(f"LP failed: {res.message}")
    return res.x[:n]


# ---------------------------------------------------------------------------
# constructors

_TRIANGLES = {
    "triangle-equilateral": (60.0, 60.0),
    "triangle-right-isosceles": (90.0, 45.0),
    "triangle-30-60-90": (30.0, 90.0),
    "triangle-50-60-70": (50.0, 60.0),
}


def _poly_from_vertices_2d(verts: np.ndarray, kind: str, params) -> Polytope:
    verts = np.asarray(verts, dtype=float)
    m = len(verts)
    cen = verts.mean(axis=0)
    faces = []
    peri = 0.0
    area = 0.0
    for i in range(m):
        a, b = verts[i], verts[(i + 1) % m]
        edge = b - a
        length = float(np.linalg.norm(edge))
        n = np.array([-edge[1], edge[0]]) / length
        if np.dot(n, cen - a) < 0:
            n = -n
        faces.append(Face(n, float(np.dot(n, a)), length))
        peri += length
        area += 0.5 * (a[0] * b[1] - b[0] * a[1])
    diam = max(float(np.linalg.norm(u - v)) for u, v in itertools.combinations(verts, 2))
    return Polytope(2, tuple(faces), abs(area), peri, diam, kind, tuple(params),
                    vertices=verts)


def _poly_from_simplex_3d(verts: np.ndarray, kind: str, params) -> Polytope:
    verts = np.asarray(verts, dtype=float)
    cen = verts.mean(axis=0)
    faces = []
    area_total = 0.0
    for i in range(4):
        tri = np.delete(verts, i, axis=0)
        u, v = tri[1] - tri[0], tri[2] - tri[0]
        cross = np.cross(u, v)
        area = 0.5 * float(np.linalg.norm(cross))
        n = cross / np.linalg.norm(cross)
        if np.dot(n, cen - tri[0]) < 0:
            n = -n
        faces.append(Face(n, float(np.dot(n, tri[0])), area))
        area_total += area
    vol = abs(float(np.linalg.det(verts[1:] - verts[0]))) / 6.0
    diam = max(float(np.linalg.norm(u - v)) for u, v in itertools.combinations(verts, 2))
    return Polytope(3, tuple(faces), vol, area_total, diam, kind, tuple(params),
                    vertices=verts)


def _prism(tri: Polytope, height: float, kind: str, params) -> Polytope:
    faces = []
    for f in tri.faces:
        faces.append(Face(np.append(f.normal, 0.0), f.offset, f.measure * height))
    faces.append(Face(np.array([0.0, 0.0, 1.0]), 0.0, tri.volume))
    faces.append(Face(np.array([0.0, 0.0, -1.0]), -height, tri.volume))
    v2 = tri.vertices
    verts = np.vstack([np.column_stack([v2, np.zeros(len(v2))]),
                       np.column_stack([v2, np.full(len(v2), height)])])
    vol = tri.volume * height
    area = 2 * tri.volume + tri.boundary_area * height
    diam = math.hypot(tri.diameter, height)
    return Polytope(3, tuple(faces), vol, area, diam, kind, tuple(params),
                    vertices=verts)


def _triangle_vertices(kind: str, scale: float) -> np.ndarray:
    if kind == "triangle-right-isosceles":
        return np.array([[0.0, 0.0], [scale, 0.0], [scale, scale]])
    if kind == "triangle-equilateral":
        return np.array([[0.0, 0.0], [scale, 0.0],
                         [scale / 2.0, scale * math.sqrt(3.0) / 2.0]])
    if kind == "triangle-30-60-90":
        # short leg `scale`, right angle at the second vertex
        return np.array([[0.0, 0.0], [scale * math.sqrt(3.0), 0.0],
                         [scale * math.sqrt(3.0), scale]])
    if kind == "triangle-50-60-70":
        a1, a2 = math.radians(50.0), math.radians(60.0)
        x = math.tan(a2) / (math.tan(a1) + math.tan(a2))
        return scale * np.array([[0.0, 0.0], [1.0, 0.0], [x, x * math.tan(a1)]])
    raise ValueError(kind)


def make_polytope(kind: str, parameters) -> Polytope:
    """Build a fixture polytope with closed-form face data.

    Supported kinds: ``box`` (sides = parameters, any dimension >= 2),
    the four triangles, ``prism-<triangle>`` (cross-section scale,
    height), and the three reflection-tiling tetrahedra
    ``tet-quadrirectangular``, ``tet-trirectangular``,
    ``tet-disphenoid`` (one scale parameter each).
    """
    params = [float(p) for p in np.atleast_1d(parameters)]
    if any(p <= 0 for p in params):
        raise ValueError("parameters must be positive")
    if kind == "box":
        if len(params) < 2:
            raise ValueError("box needs at least 2 side lengths")
        n = len(params)
        sides = np.array(params)
        faces = []
        for d in range(n):
            area = float(np.prod(sides) / sides[d])
            lo = np.zeros(n)
            lo[d] = 1.0
            faces.append(Face(lo.copy(), 0.0, area))
            faces.append(Face(-lo, -sides[d], area))
        verts = np.array(list(itertools.product(*[(0.0, s) for s in sides])))
        return Polytope(n, tuple(faces), float(np.prod(sides)),
                        2.0 * sum(float(np.prod(sides) / s) for s in sides),
                        float(np.linalg.norm(sides)), "box", tuple(params),
                        is_box=True, sides=tuple(params), vertices=verts)
    if kind in _TRIANGLES:
        if len(params) != 1:
            raise ValueError(f"{kind} takes one scale parameter")
        return _poly_from_vertices_2d(_triangle_vertices(kind, params[0]), kind, params)
    if kind.startswith("prism-"):
        tri_kind = "triangle-" + kind[len("prism-"):]
        if tri_kind not in _TRIANGLES:
            raise ValueError(f"unknown polytope kind {kind!r}")
        if len(params) != 2:
            raise ValueError(f"{kind} takes (scale, height)")
        tri = make_polytope(tri_kind, params[:1])
        return _prism(tri, params[1], kind, params)
    if kind == "tet-quadrirectangular":
        a = params[0]
        verts = a * np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [1, 1, 1]], dtype=float)
        return _poly_from_simplex_3d(verts, kind, params)
    if kind == "tet-trirectangular":
        a = params[0]
        verts = a * np.array([[0, 0, 0], [1, 0, 0], [0.5, 0.5, 0], [0.5, 0.5, 0.5]],
                             dtype=float)
        return _poly_from_simplex_3d(verts, kind, params)
    if kind == "tet-disphenoid":
        a = params[0]
        verts = a * np.array([[0, 0, 0], [1, 0, 0], [0.5, 0.5, 0.5], [0.5, 0.5, -0.5]],
                             dtype=float)
        return _poly_from_simplex_3d(verts, kind, params)
    raise ValueError(f"unknown polytope kind {kind!r}")


def polytope_from_descriptor(desc: dict | str) -> Polytope:
    if isinstance(desc, str):
        desc = json.loads(desc)
    return make_polytope(desc["kind"], desc["parameters"])


# ---------------------------------------------------------------------------
# reflection group enumeration


class GroupBudgetError(RuntimeError):
    """Enumeration exceeded its element budget (likely not tessellating)."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass
class ReflectionGroup:
    polytope: Polytope
    radius: float
    generators: list
    elements: list
    neighbors: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.elements)


def _stacked_margin(poly: Polytope, iso: Isometry) -> float:
    """Chebyshev margin of interior(poly) & interior(iso(poly)).

    > 0: interiors overlap; within +-tol of 0: closures touch;
    < 0: closures are separated.
    """
    # iso(poly) = {x : (q n_j) . x > alpha_j + n_j . (q^T t)}
    qn = poly.normals @ iso.q.T
    off2 = poly.offsets + poly.normals @ (iso.q.T @ iso.t)
    normals = np.vstack([poly.normals, qn])
    offsets = np.concatenate([poly.offsets, off2])
    t, _ = _chebyshev(normals, offsets)
    return t


def reflection_group(poly: Polytope, radius: float,
                     max_elements: int = 20000,
                     overlap_check: bool = False) -> ReflectionGroup:
    """Breadth-first enumeration of words in the face reflections.

    Keeps every element whose image could intersect the ball of the
    given radius around the centroid; the neighbor list holds the
    elements whose image closure touches the closure of the polytope
    (identity included).  With ``overlap_check`` the enumeration raises
    ``GroupBudgetError`` carrying a witness as soon as two distinct
    elements produce overlapping open images.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    n = poly.dim
    cen = poly.centroid()
    keep_dist = radius + 2.0 * poly.diameter
    gens = [poly.face_reflection(j) for j in range(len(poly.faces))]
    ident = Isometry.identity(n)
    ik1, ik2 = ident._keys()
    seen1, seen2 = {ik1}, {ik2}
    frontier = [ident]
    elements = [ident]
    while frontier:
        new_frontier = []
        for el in frontier:
            for g in gens:
                cand = el.compose(g)
                k1, k2 = cand._keys()
                if k1 in seen1 or k2 in seen2:
                    continue
                seen1.add(k1)
                seen2.add(k2)
                if np.linalg.norm(cand.apply(cen) - cen) > keep_dist:
                    continue
                if overlap_check:
                    margin = _stacked_margin(poly, cand)
                    if margin > 1e-9:
                        raise GroupBudgetError(
                            "overlapping reflected images",
                            witness=(ident, cand))
                elements.append(cand)
                new_frontier.append(cand)
                if len(elements) > max_elements:
                    raise GroupBudgetError(
                        f"element budget {max_elements} exceeded")
        frontier = new_frontier
    neighbors = [el for el in elements
                 if _stacked_margin(poly, el) >= -1e-9]
    return ReflectionGroup(poly, radius, gens, elements, neighbors)


@dataclass
class TessellationCertificate:
    status: str                 # "verified-to-radius" | "violated"
    radius: float
    n_elements: int
    witness: tuple | None = None
    covered_fraction: float = 1.0
    samples: int = 0

    def to_json(self) -> str:
        out = {
            "status": self.status,
            "radius": self.radius,
            "n_elements": self.n_elements,
            "covered_fraction": self.covered_fraction,
            "samples": self.samples,
        }
        if self.witness is not None:
            a, b = self.witness
            out["witness"] = {
                "first_word": list(a.word), "second_word": list(b.word),
            }
        return json.dumps(out, indent=2)


def strict_tessellation_check(poly: Polytope, radius: float,
                              samples: int = 4096, seed: int = 0,
                              max_elements: int = 20000) -> TessellationCertificate:
    """Radius-bounded tessellation certificate.

    Checks pairwise disjointness of distinct reflected images (via the
    margin LP on each enumerated element, which covers all pairs within
    the radius by the group property) and Monte-Carlo covering of the
    ball of half the radius.  A pass is explicitly *not* a proof for all
    of R^n, hence the status name.
    """
    if radius < poly.diameter:
        raise ValueError("radius must be at least the diameter")
    try:
        grp = reflection_group(poly, 2.0 * radius, max_elements=max_elements,
                               overlap_check=True)
    except GroupBudgetError as exc:
        return TessellationCertificate("violated", radius, 0, exc.witness)
    # covering check on the ball of radius/2 around the centroid
    rng = np.random.default_rng(seed)
    cen = poly.centroid()
    pts = rng.normal(size=(samples, poly.dim))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts *= (radius / 2.0) * rng.random(samples)[:, None] ** (1.0 / poly.dim)
    pts += cen
    covered = np.zeros(samples, dtype=bool)
    for el in grp.elements:
        covered |= poly.contains(el.inverse().apply(pts), tol=1e-9)
        if covered.all():
            break
    frac = float(covered.mean())
    if frac < 1.0:
        return TessellationCertificate("violated", radius, len(grp), None,
                                       covered_fraction=frac, samples=samples)
    return TessellationCertificate("verified-to-radius", radius, len(grp),
                                   covered_fraction=frac, samples=samples)


# ---------------------------------------------------------------------------
# face intersections and metric projections


@dataclass
class SigmaProjection:
    """Metric projection onto the affine span of the face intersection
    fixed by a neighboring reflection word, plus its complement."""
    face_indices: tuple
    base_point: np.ndarray
    normal_basis: np.ndarray    # orthonormal rows spanning the normal space

    @property
    def rank_perp(self) -> int:
        return self.normal_basis.shape[0]

    def project(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        rel = pts - self.base_point
        return pts - rel @ self.normal_basis.T @ self.normal_basis

    def project_perp(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        rel = pts - self.base_point
        return rel @ self.normal_basis.T @ self.normal_basis


def sigma_projection(poly: Polytope, sigma: Isometry,
                     tol: float = 1e-8) -> SigmaProjection:
    """Identify the face set carrying closure(poly) & closure(sigma(poly))
    and return the orthogonal projector pair onto its affine span."""
    n = poly.dim
    if sigma.is_identity:
        return SigmaProjection((), np.zeros(n), np.zeros((0, n)))
    margin = _stacked_margin(poly, sigma)
    if margin < -1e-9:
        raise ValueError("isometry is not a neighbor of the polytope")
    qn = poly.normals @ sigma.q.T
    off2 = poly.offsets + poly.normals @ (sigma.q.T @ sigma.t)
    normals = np.vstack([poly.normals, qn])
    offsets = np.concatenate([poly.offsets, off2])
    x = _relative_interior_point(normals, offsets)
    slack = poly.normals @ x - poly.offsets
    active = tuple(int(j) for j in np.nonzero(slack <= tol)[0])
    if not active:
        raise ValueError("no active faces found for neighbor")
    nmat = poly.normals[list(active)]
    # orthonormal basis of the span of the active normals
    _, sv, vt = np.linalg.svd(nmat, full_matrices=False)
    rank = int(np.sum(sv > 1e-10))
    basis = vt[:rank]
    # base point on the intersection of the active face planes
    base, *_ = np.linalg.lstsq(nmat, poly.offsets[list(active)], rcond=None)
    return SigmaProjection(active, base, basis)


def reflected_distance_check(poly: Polytope, sigma: Isometry, r, rp,
                             c: float) -> tuple[bool, bool]:
    """Both lower bounds on |r - sigma r'| with the given constant c."""
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    if not (poly.contains(r).all() and poly.contains(rp).all()):
        raise ValueError("points must lie in the polytope")
    proj = sigma_projection(poly, sigma)
    lhs = np.linalg.norm(r - sigma.apply(rp))
    if sigma.is_identity:
        rhs1 = np.linalg.norm(r - rp)
    else:
        rhs1 = (np.linalg.norm(proj.project(r) - proj.project(rp))
                + np.linalg.norm(proj.project_perp(r) + proj.project_perp(rp)))
    rhs2 = np.linalg.norm(r - rp)
    return bool(lhs >= c * rhs1 - 1e-12), bool(lhs >= c * rhs2 - 1e-12)


# ---------------------------------------------------------------------------
# overlaps (Omega & (Omega - w))


def overlap_volume(poly: Polytope, w, samples: int = 2 ** 16,
                   seed: int = 0) -> float:
    """|Omega & (Omega - w)|: exact product formula for boxes, quasi-Monte
    Carlo with half-space clipping otherwise."""
    w = np.asarray(w, dtype=float)
    if poly.is_box:
        sides = np.array(poly.sides)
        return float(np.prod(np.maximum(sides - np.abs(w), 0.0)))
    lo, hi = poly.bounding_box()
    from scipy.stats import qmc as _q
    m = max(10, int(math.ceil(math.log2(samples))))
    pts = lo + _q.Sobol(poly.dim, scramble=False).random_base2(m) * (hi - lo)
    inside = poly.contains(pts) & poly.contains(pts + w)
    return float(np.prod(hi - lo) * inside.mean())


def overlap_first_order(poly: Polytope, w, a=None,
                        face_rule: int = 64) -> float:
    """First-order expansion: integral of a over Omega minus the boundary
    term with the outward normal, integral_{dOmega} a (n_out . w)_+."""
    w = np.asarray(w, dtype=float)
    if a is None:
        bulk = poly.volume
        surf = 0.0
        for f in poly.faces:
            surf += f.measure * max(float(np.dot(-f.normal, w)), 0.0)
        return bulk - surf
    bulk = _integrate_volume(poly, a, face_rule)
    surf = 0.0
    for j, f in enumerate(poly.faces):
        out_n = -f.normal
        flux = max(float(np.dot(out_n, w)), 0.0)
        if flux > 0.0:
            surf += flux * _integrate_face(poly, j, a, face_rule)
    return bulk - surf


def _integrate_volume(poly: Polytope, a, rule: int) -> float:
    from .quad import gauss_rule
    x, wts = gauss_rule(rule)
    if poly.is_box:
        grids = np.meshgrid(*[x * s for s in poly.sides], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        wprod = wts * poly.sides[0]
        for s in poly.sides[1:]:
            wprod = np.multiply.outer(wprod, wts * s)
        return float(np.dot(wprod.ravel(), a(pts)))
    lo, hi = poly.bounding_box()
    from scipy.stats import qmc as _q
    pts = lo + _q.Sobol(poly.dim, scramble=False).random_base2(16) * (hi - lo)
    inside = poly.contains(pts)
    return float(np.prod(hi - lo) * np.mean(np.where(inside, a(pts), 0.0)))


def _integrate_face(poly: Polytope, j: int, a, rule: int) -> float:
    """Integral of a over face j, via its vertex description."""
    from .quad import gauss_rule
    f = poly.faces[j]
    if poly.vertices is None:
        raise ValueError("face integration needs vertices")
    on_face = [v for v in poly.vertices
               if abs(np.dot(v, f.normal) - f.offset) < 1e-9]
    on_face = np.array(on_face)
    x, wts = gauss_rule(rule)
    if poly.dim == 2:
        va, vb = on_face[0], on_face[-1]
        pts = va + x[:, None] * (vb - va)
        return float(np.linalg.norm(vb - va) * np.dot(wts, a(pts)))
    if len(on_face) == 3:
        # triangle face: Duffy map (u, v) -> a + u (b - a) + u v (c - b)
        va, vb, vc = on_face
        uu, vv = np.meshgrid(x, x, indexing="ij")
        pts = (va + uu[..., None] * (vb - va) + (uu * vv)[..., None] * (vc - vb))
        jac = np.linalg.norm(np.cross(vb - va, vc - vb)) * uu
        vals = a(pts.reshape(-1, 3)).reshape(rule, rule)
        return float(wts @ (vals * jac) @ wts)
    # planar quad face (prism side or box face): bilinear map
    cen = on_face.mean(axis=0)
    ang = np.arctan2(*((on_face - cen) @ _face_frame(f.normal)).T[:2][::-1])
    quad_v = on_face[np.argsort(ang)]
    va, vb, vc, vd = quad_v
    uu, vv = np.meshgrid(x, x, indexing="ij")
    pts = ((1 - uu)[..., None] * ((1 - vv)[..., None] * va + vv[..., None] * vd)
           + uu[..., None] * ((1 - vv)[..., None] * vb + vv[..., None] * vc))
    du = ((1 - vv)[..., None] * (vb - va) + vv[..., None] * (vc - vd))
    dv = ((1 - uu)[..., None] * (vd - va) + uu[..., None] * (vc - vb))
    jac = np.linalg.norm(np.cross(du, dv), axis=-1)
    vals = a(pts.reshape(-1, 3)).reshape(rule, rule)
    return float(wts @ (vals * jac) @ wts)


def _face_frame(normal: np.ndarray) -> np.ndarray:
    """Two orthonormal vectors spanning the plane orthogonal to normal."""
    n = normal / np.linalg.norm(normal)
    a = np.eye(3)[np.argmin(np.abs(n))]
    u = np.cross(n, a)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    return np.column_stack([u, v])


# ---------------------------------------------------------------------------
# lattices


@dataclass(frozen=True)
class Lattice:
    """Full-rank lattice with dual convention v_i . v_j* = 2 pi delta_ij."""
    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("basis must be a square matrix of row vectors")
        if abs(np.linalg.det(b)) < 1e-14:
            raise ValueError("basis vectors must be linearly independent")
        object.__setattr__(self, "basis", b)

    @staticmethod
    def cubic(sides) -> "Lattice":
        return Lattice(np.diag(np.asarray(sides, dtype=float)))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dual_basis(self) -> np.ndarray:
        return 2.0 * math.pi * np.linalg.inv(self.basis).T

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.basis @ self.basis.T))

    @property
    def volume(self) -> float:
        return abs(float(np.linalg.det(self.basis)))

    def fundamental_domain(self) -> Polytope:
        b = self.basis
        n = self.dim
        dual = self.dual_basis
        faces = []
        vol = self.volume
        for i in range(n):
            u = dual[i] / np.linalg.norm(dual[i])
            height = float(np.dot(b[i], u))
            if height < 0:
                u, height = -u, -height
            area = vol / height
            faces.append(Face(u, 0.0, area))
            faces.append(Face(-u, -height, area))
        coeffs = np.array(list(itertools.product([0.0, 1.0], repeat=n)))
        verts = coeffs @ b
        diam = max(float(np.linalg.norm(x - y))
                   for x, y in itertools.combinations(verts, 2))
        is_diag = np.allclose(b, np.diag(np.diag(b)))
        return Polytope(n, tuple(faces), vol,
                        sum(f.measure for f in faces), diam, "lattice-cell",
                        tuple(np.diag(b)) if is_diag else (),
                        is_box=is_diag,
                        sides=tuple(np.diag(b)) if is_diag else (),
                        vertices=verts)

    def neighbor_translations(self) -> np.ndarray:
        """Lattice vectors whose cell translate touches the cell (3^n)."""
        coeffs = np.array(list(itertools.product([-1, 0, 1], repeat=self.dim)),
                          dtype=float)
        return coeffs @ self.basis

    def dual_points_below(self, lam: float, budget: int = 2_000_000) -> np.ndarray:
        """All dual-lattice vectors with |k| <= lam (+1e-12 tie rule)."""
        dual = self.dual_basis
        gram_inv = np.linalg.inv(dual @ dual.T)
        bounds = np.sqrt(np.diag(gram_inv)) * lam
        ranges = [np.arange(-int(b) - 1, int(b) + 2) for b in bounds]
        est = np.prod([len(r) for r in ranges])
        if est > budget:
            raise ValueError(f"mode budget exceeded ({est} candidate indices)")
        grid = np.array(np.meshgrid(*ranges, indexing="ij"))
        coeffs = grid.reshape(self.dim, -1).T
        ks = coeffs @ dual
        keep = np.linalg.norm(ks, axis=1) <= lam + 1e-12
        return ks[keep]
