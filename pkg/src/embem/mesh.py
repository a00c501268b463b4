"""Oriented triangular surface meshes: generators, IO, refinement, placement.

All meshes are closed (watertight) 2-manifolds with consistent winding and
normals pointing into the exterior medium.  Vertex/triangle arrays are frozen
after construction; every transformation returns a new mesh.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter, IntersectionError, ParseError, TopologyError


class TriangleMesh:
    """Closed oriented triangle mesh.

    vertices: (nv, 3) float64, triangles: (nt, 3) int64.  Local edge ``a`` of a
    triangle is the edge opposite local vertex ``a``.
    """

    def __init__(self, vertices, triangles, validate: bool = True, repair_orientation: bool = True):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise InvalidParameter("vertices must be (nv, 3)")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise InvalidParameter("triangles must be (nt, 3)")
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise TopologyError("triangle indices out of range")
        self.vertices = vertices
        self.triangles = triangles
        if validate:
            self._check_degenerate()
            self._build_edges()
            if repair_orientation:
                self._repair_orientation()
            self._check_consistent_winding()
            if self.signed_volume() <= 0:
                raise TopologyError("mesh orientation is inward after repair")
        else:
            self._build_edges()
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)

    # -- derived geometry ------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def triangle_corners(self):
        """(nt, 3, 3) corner coordinates."""
        return self.vertices[self.triangles]

    @property
    def normals(self):
        """Unit per-triangle normals (outward for a valid mesh)."""
        c = self.triangle_corners
        n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        return n / np.linalg.norm(n, axis=1)[:, None]

    @property
    def areas(self):
        c = self.triangle_corners
        return 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    @property
    def centroids(self):
        return self.triangle_corners.mean(axis=1)

    @property
    def edge_lengths(self):
        """(nt, 3); length of the edge opposite each local vertex."""
        c = self.triangle_corners
        return np.stack(
            [np.linalg.norm(c[:, (a + 1) % 3] - c[:, (a + 2) % 3], axis=1) for a in range(3)],
            axis=1,
        )

    @property
    def max_edge_length(self) -> float:
        return float(self.edge_lengths.max())

    @property
    def bounding_box(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def diameter(self) -> float:
        lo, hi = self.bounding_box
        return float(np.linalg.norm(hi - lo))

    def signed_volume(self) -> float:
        """Enclosed volume; positive iff normals point outward."""
        c = self.triangle_corners
        return float(np.einsum("ij,ij->", c[:, 0], np.cross(c[:, 1], c[:, 2])) / 6.0)

    def content_hash(self, shift_invariant: bool = True) -> str:
        """Hash of the geometry, used to share assembled self-interaction blocks."""
        v = self.vertices
        if shift_invariant:
            v = v - v.mean(axis=0)
        h = hashlib.sha256()
        h.update(np.round(v, 12).tobytes())
        h.update(self.triangles.tobytes())
        return h.hexdigest()

    # -- topology ----------------------------------------------------------

    def _build_edges(self):
        tri = self.triangles
        # local edge a is opposite vertex a: (a+1, a+2) mod 3
        raw = np.stack([tri[:, [1, 2]], tri[:, [2, 0]], tri[:, [0, 1]]], axis=1)  # (nt,3,2)
        key = np.sort(raw.reshape(-1, 2), axis=1)
        edges, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        if counts.size and counts.max() > 2:
            raise TopologyError("non-manifold edge (more than two incident triangles)")
        if counts.size and counts.min() < 2:
            raise TopologyError("open surface (boundary edge found)")
        self.edges = edges  # (ne, 2) sorted vertex pairs
        self.triangle_edges = inv.reshape(-1, 3)  # (nt, 3) global edge per local edge
        # per edge: the two incident (triangle, local edge) pairs; plus = lower triangle index
        order = np.argsort(inv, kind="stable")
        tri_of = order // 3
        loc_of = order % 3
        self.edge_triangles = np.column_stack([tri_of[0::2], tri_of[1::2]])
        self.edge_local = np.column_stack([loc_of[0::2], loc_of[1::2]])
        swap = self.edge_triangles[:, 0] > self.edge_triangles[:, 1]
        self.edge_triangles[swap] = self.edge_triangles[swap][:, ::-1]
        self.edge_local[swap] = self.edge_local[swap][:, ::-1]

    def _check_degenerate(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        diag2 = float(np.sum((hi - lo) ** 2))
        c = self.vertices[self.triangles]
        areas = 0.5 * np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)
        if np.any(areas <= 1e-12 * diag2):
            raise TopologyError("degenerate triangle (area below 1e-12 x bbox diagonal^2)")

    def _winding_consistent(self, t1: int, t2: int, edge: int) -> bool:
        """True if t1, t2 traverse `edge` in opposite directions."""
        a, b = self.edges[edge]

        def direction(t):
            tri = self.triangles[t]
            ia = int(np.where(tri == a)[0][0])
            return tri[(ia + 1) % 3] == b  # True: traverses a->b

        return direction(t1) != direction(t2)

    def _check_consistent_winding(self):
        for e in range(self.n_edges):
            t1, t2 = self.edge_triangles[e]
            if not self._winding_consistent(t1, t2, e):
                raise TopologyError("inconsistent triangle winding")

    def _repair_orientation(self):
        """Flood-fill windings to consistency, then fix the global sign by signed volume."""
        tri = self.triangles.copy()
        nt = self.n_triangles
        visited = np.zeros(nt, dtype=bool)
        stack = [0]
        visited[0] = True
        # adjacency through edges
        while stack:
            t = stack.pop()
            for a in range(3):
                e = self.triangle_edges[t, a]
                t1, t2 = self.edge_triangles[e]
                other = t2 if t1 == t else t1
                if visited[other]:
                    continue
                va, vb = self.edges[e]
                ia = int(np.where(tri[t] == va)[0][0])
                t_dir = tri[t][(ia + 1) % 3] == vb
                io = int(np.where(tri[other] == va)[0][0])
                o_dir = tri[other][(io + 1) % 3] == vb
                if t_dir == o_dir:
                    tri[other] = tri[other][[0, 2, 1]]
                visited[other] = True
                stack.append(other)
        if not visited.all():
            raise TopologyError("surface is not connected")
        self.triangles = tri
        self._build_edges()
        if self._raw_signed_volume() < 0:
            self.triangles = np.ascontiguousarray(self.triangles[:, [0, 2, 1]])
            self._build_edges()

    def _raw_signed_volume(self) -> float:
        c = self.vertices[self.triangles]
        return float(np.einsum("ij,ij->", c[:, 0], np.cross(c[:, 1], c[:, 2])) / 6.0)

    # -- transforms --------------------------------------------------------

    def transformed(self, rotation=None, translation=None) -> "TriangleMesh":
        v = self.vertices
        if rotation is not None:
            rotation = np.asarray(rotation, dtype=np.float64)
            if rotation.shape != (3, 3) or not np.allclose(rotation @ rotation.T, np.eye(3), atol=1e-10):
                raise InvalidParameter("rotation must be an orthonormal 3x3 matrix")
            if np.linalg.det(rotation) < 0:
                raise InvalidParameter("rotation must be proper (det +1)")
            v = v @ rotation.T
        if translation is not None:
            v = v + np.asarray(translation, dtype=np.float64)
        return TriangleMesh(v, self.triangles, validate=False)


# -- IO ---------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def load_mesh(path, format: str = "auto") -> TriangleMesh:
    """Load a closed surface mesh from an OFF or Gmsh ASCII v2.2 file.

    Orientation is repaired (flood fill + signed-volume sign fix) if needed.
    """
    path = str(path)
    if format == "auto":
        low = path.lower()
        if low.endswith(".off"):
            format = "off"
        elif low.endswith(".msh"):
            format = "gmsh-ascii"
        else:
            raise ParseError(f"cannot infer format from {path!r}")
    if format == "off":
        verts, tris = _parse_off(path)
    elif format == "gmsh-ascii":
        verts, tris = _parse_gmsh(path)
    else:
        raise ParseError(f"unknown mesh format {format!r}")
    return TriangleMesh(verts, tris)


def _parse_off(path):
    with open(path) as fh:
        tokens = []
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise ParseError("missing OFF header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4  # skip edge count
        verts = np.array(tokens[pos : pos + 3 * nv], dtype=np.float64).reshape(nv, 3)
        pos += 3 * nv
        tris = []
        for _ in range(nf):
            k = int(tokens[pos])
            if k != 3:
                raise ParseError("OFF face is not a triangle")
            tris.append([int(tokens[pos + 1]), int(tokens[pos + 2]), int(tokens[pos + 3])])
            pos += 1 + k
    except (ValueError, IndexError) as exc:
        raise ParseError(f"malformed OFF file: {exc}") from exc
    return verts, np.array(tris, dtype=np.int64)


def _parse_gmsh(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    try:
        i = lines.index("$MeshFormat")
        version = lines[i + 1].split()[0]
        if not version.startswith("2."):
            raise ParseError(f"unsupported Gmsh format version {version}")
        i = lines.index("$Nodes")
        nn = int(lines[i + 1])
        node_ids = {}
        coords = np.empty((nn, 3))
        for j in range(nn):
            parts = lines[i + 2 + j].split()
            node_ids[int(parts[0])] = j
            coords[j] = [float(parts[1]), float(parts[2]), float(parts[3])]
        i = lines.index("$Elements")
        ne = int(lines[i + 1])
        tris = []
        for j in range(ne):
            parts = lines[i + 2 + j].split()
            etype = int(parts[1])
            if etype != 2:  # only 3-node triangles
                continue
            ntags = int(parts[2])
            ids = parts[3 + ntags : 6 + ntags]
            tris.append([node_ids[int(v)] for v in ids])
    except (ValueError, IndexError) as exc:
        raise ParseError(f"malformed Gmsh file: {exc}") from exc
    if not tris:
        raise ParseError("no triangles in Gmsh file")
    tris = np.array(tris, dtype=np.int64)
    used = np.unique(tris)
    remap = -np.ones(len(coords), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return coords[used], remap[tris]


def save_off(mesh: TriangleMesh, path) -> None:
    """Write OFF with full-precision floats so a reload round-trips bit-exact."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles} 0\n")
        for v in mesh.vertices:
            fh.write(f"{_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")


# -- generators ---------------------------------------------------------------


def generate_cube(side: float, h: float) -> TriangleMesh:
    """Axis-aligned cube centered at the origin, structured triangulation.

    Cells are split along the diagonal, so max edge <= h requires sqrt(2)*side/n <= h.
    For h >= side the coarsest mesh (two triangles per face, diagonal sqrt(2)*side)
    is returned instead of refining to honor the diagonal.
    """
    if not (side > 0):
        raise InvalidParameter("side must be positive")
    if not (h > 0):
        raise InvalidParameter("mesh width h must be positive")
    n = 1 if h >= side else max(1, int(np.ceil(np.sqrt(2.0) * side / h)))
    # grid of (n+1)^2 points per face; stitch shared edges via a global point index
    s = side / 2.0
    lin = np.linspace(-s, s, n + 1)
    key_to_id = {}
    verts = []

    def vid(p):
        key = (round(p[0], 12), round(p[1], 12), round(p[2], 12))
        if key not in key_to_id:
            key_to_id[key] = len(verts)
            verts.append(p)
        return key_to_id[key]

    tris = []
    # each face: constant axis, +/- side; orient so normal points outward
    for axis in range(3):
        for sign in (-1.0, 1.0):
            u_axis, v_axis = (axis + 1) % 3, (axis + 2) % 3
            for i in range(n):
                for j in range(n):
                    corners = []
                    for du, dv in ((0, 0), (1, 0), (1, 1), (0, 1)):
                        p = [0.0, 0.0, 0.0]
                        p[axis] = sign * s
                        p[u_axis] = lin[i + du]
                        p[v_axis] = lin[j + dv]
                        corners.append(vid(tuple(p)))
                    c0, c1, c2, c3 = corners
                    if sign > 0:
                        tris.append([c0, c1, c2])
                        tris.append([c0, c2, c3])
                    else:
                        tris.append([c0, c2, c1])
                        tris.append([c0, c3, c2])
    return TriangleMesh(np.array(verts), np.array(tris, dtype=np.int64))


_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array(
    [
        [-1, _ICO_T, 0], [1, _ICO_T, 0], [-1, -_ICO_T, 0], [1, -_ICO_T, 0],
        [0, -1, _ICO_T], [0, 1, _ICO_T], [0, -1, -_ICO_T], [0, 1, -_ICO_T],
        [_ICO_T, 0, -1], [_ICO_T, 0, 1], [-_ICO_T, 0, -1], [-_ICO_T, 0, 1],
    ],
    dtype=np.float64,
)
_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=np.int64,
)


def generate_sphere(radius: float, h: float = None, subdivisions: int = None) -> TriangleMesh:
    """Icosphere: subdivided icosahedron with vertices projected onto the sphere.

    Either give a target mesh width h (subdivision chosen so max edge <= h) or
    an explicit subdivision count.
    """
    if not (radius > 0):
        raise InvalidParameter("radius must be positive")
    if subdivisions is None:
        if h is None or not (h > 0):
            raise InvalidParameter("need target mesh width h > 0 or a subdivision count")
        edge0 = radius * 4.0 / np.sqrt(10.0 + 2.0 * np.sqrt(5.0))
        subdivisions = max(0, int(np.ceil(np.log2(edge0 / h)))) if edge0 > h else 0
    verts = _ICO_VERTS * (radius / np.linalg.norm(_ICO_VERTS[0]))
    faces = _ICO_FACES
    for _ in range(subdivisions):
        verts, faces = _subdivide_projected(verts, faces, radius)
    mesh = TriangleMesh(verts, faces)
    if h is not None:
        while mesh.max_edge_length > h:
            verts, faces = _subdivide_projected(mesh.vertices, mesh.triangles, radius)
            mesh = TriangleMesh(verts, faces)
    return mesh


def _subdivide_projected(verts, faces, radius):
    verts = list(map(tuple, np.asarray(verts)))
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            p = (np.array(verts[i]) + np.array(verts[j])) / 2.0
            p *= radius / np.linalg.norm(p)
            cache[key] = len(verts)
            verts.append(tuple(p))
        return cache[key]

    new_faces = []
    for (a, b, c) in faces:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        new_faces.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]])
    return np.array(verts), np.array(new_faces, dtype=np.int64)


def generate_hex_column(width: float, length: float, h: float) -> TriangleMesh:
    """Right prism with a regular hexagonal cross-section.

    width is measured across flats; the column axis is z; centered at origin.
    """
    if not (width > 0 and length > 0 and h > 0):
        raise InvalidParameter("width, length and h must be positive")
    r = width / np.sqrt(3.0)  # circumradius of the hexagon (across-flats w = r*sqrt(3))
    hex_pts = np.array(
        [[r * np.cos(a), r * np.sin(a)] for a in (np.pi / 6 + np.arange(6) * np.pi / 3)]
    )
    nz = max(1, int(np.ceil(np.sqrt(2.0) * length / h)))
    ns = max(1, int(np.ceil(np.sqrt(2.0) * r / h)))
    key_to_id = {}
    verts = []

    def vid(p):
        key = (round(p[0], 12), round(p[1], 12), round(p[2], 12))
        if key not in key_to_id:
            key_to_id[key] = len(verts)
            verts.append(p)
        return key_to_id[key]

    tris = []
    zs = np.linspace(-length / 2, length / 2, nz + 1)
    # side walls: 6 rectangles split into ns x nz quads
    for k in range(6):
        p0, p1 = hex_pts[k], hex_pts[(k + 1) % 6]
        for i in range(ns):
            for j in range(nz):
                quad = []
                for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1)):
                    t = (i + di) / ns
                    xy = (1 - t) * p0 + t * p1
                    quad.append(vid((xy[0], xy[1], zs[j + dj])))
                q0, q1, q2, q3 = quad
                tris.append([q0, q1, q2])
                tris.append([q0, q2, q3])
    # caps: fan triangulation from center, subdivided radially
    for sign in (1.0, -1.0):
        z = sign * length / 2
        center = vid((0.0, 0.0, z))
        for k in range(6):
            p0, p1 = hex_pts[k], hex_pts[(k + 1) % 6]
            rings = [[center]]
            for ri in range(1, ns + 1):
                t = ri / ns
                ring = []
                for si in range(ri + 1):
                    u = si / ri
                    xy = t * ((1 - u) * p0 + u * p1)
                    ring.append(vid((xy[0], xy[1], z)))
                rings.append(ring)
            for ri in range(ns):
                inner, outer = rings[ri], rings[ri + 1]
                for si in range(ri + 1):
                    a, b, c = inner[si], outer[si], outer[si + 1]
                    tris.append([a, b, c] if sign > 0 else [a, c, b])
                    if si < ri:
                        tris.append([a, c, inner[si + 1]] if sign > 0 else [a, inner[si + 1], c])
    return TriangleMesh(np.array(verts), np.array(tris, dtype=np.int64))


# -- barycentric refinement ---------------------------------------------------


@dataclass(frozen=True)
class BarycentricRefinement:
    """Six-way split of every parent triangle through edge midpoints and centroid.

    Child ordering per parent t with vertices (v0, v1, v2), midpoints m01, m12,
    m20 and centroid c:

        6t+0: (v0, m01, c)   6t+1: (v1, c, m01)
        6t+2: (v1, m12, c)   6t+3: (v2, c, m12)
        6t+4: (v2, m20, c)   6t+5: (v0, c, m20)

    Refined vertex ids: parent vertices, then one midpoint per parent edge
    (id = nv + edge), then one centroid per parent triangle (id = nv + ne + t).
    """

    mesh: TriangleMesh
    parent_triangle: np.ndarray  # (6*nt,) child -> parent
    midpoint_of_edge: np.ndarray  # (ne,) parent edge -> refined vertex id
    centroid_of_triangle: np.ndarray  # (nt,) parent triangle -> refined vertex id


def barycentric_refine(mesh: TriangleMesh) -> BarycentricRefinement:
    nv, ne, nt = mesh.n_vertices, mesh.n_edges, mesh.n_triangles
    mid = mesh.vertices[mesh.edges].mean(axis=1)
    cen = mesh.centroids
    verts = np.vstack([mesh.vertices, mid, cen])
    mid_id = nv + np.arange(ne)
    cen_id = nv + ne + np.arange(nt)

    tris = np.empty((6 * nt, 3), dtype=np.int64)
    parent = np.repeat(np.arange(nt), 6)
    T = mesh.triangles
    # midpoint of the edge (v_i, v_{i+1}) is the edge opposite local vertex i+2
    m_next = mid_id[mesh.triangle_edges[:, [2, 0, 1]]]  # (nt,3): m(i,i+1)
    c = cen_id
    for i in range(3):
        tris[6 * np.arange(nt) + 2 * i] = np.column_stack([T[:, i], m_next[:, i], c])
        tris[6 * np.arange(nt) + (2 * i + 5) % 6] = np.column_stack(
            [T[:, i], c, m_next[:, (i + 2) % 3]]
        )
    refined = TriangleMesh(verts, tris, validate=True, repair_orientation=False)
    return BarycentricRefinement(refined, parent, mid_id, cen_id)


# -- scenes -------------------------------------------------------------------


@dataclass
class Scene:
    """Ordered collection of placed particle boundaries."""

    meshes: list = field(default_factory=list)

    @property
    def n_scatterers(self) -> int:
        return len(self.meshes)

    def add(self, mesh: TriangleMesh) -> "Scene":
        new = Scene(self.meshes + [mesh])
        new.check_disjoint()
        return new

    def check_disjoint(self):
        for i in range(len(self.meshes)):
            for j in range(i + 1, len(self.meshes)):
                if meshes_intersect(self.meshes[i], self.meshes[j]):
                    raise IntersectionError(f"scatterers {i} and {j} intersect")


def place(scene: Scene, index: int, rotation=None, translation=None) -> Scene:
    """Rigid-body move of one particle; re-checks pairwise disjointness."""
    if not (0 <= index < scene.n_scatterers):
        raise InvalidParameter("scatterer index out of range")
    meshes = list(scene.meshes)
    meshes[index] = meshes[index].transformed(rotation, translation)
    new = Scene(meshes)
    new.check_disjoint()
    return new


def meshes_intersect(a: TriangleMesh, b: TriangleMesh) -> bool:
    """Surface intersection or containment test (bbox prefilter + tri-tri test)."""
    alo, ahi = a.bounding_box
    blo, bhi = b.bounding_box
    if np.any(ahi < blo) or np.any(bhi < alo):
        return False
    ca, ra = a.centroids, _circumradii(a)
    cb, rb = b.centroids, _circumradii(b)
    d = np.linalg.norm(ca[:, None, :] - cb[None, :, :], axis=2)
    cand = np.argwhere(d <= ra[:, None] + rb[None, :])
    ta, tb = a.triangle_corners, b.triangle_corners
    for i, j in cand:
        if _tri_tri_intersect(ta[i], tb[j]):
            return True
    # containment: one closed surface inside the other
    if point_in_mesh(b.vertices[0], a) or point_in_mesh(a.vertices[0], b):
        return True
    return False


def _circumradii(mesh):
    c = mesh.centroids
    return np.linalg.norm(mesh.triangle_corners - c[:, None, :], axis=2).max(axis=1)


def _tri_tri_intersect(t1, t2, eps=1e-12) -> bool:
    """Moller-style triangle-triangle intersection via segment clipping."""
    n2 = np.cross(t2[1] - t2[0], t2[2] - t2[0])
    d1 = (t1 - t2[0]) @ n2
    if np.all(d1 > eps) or np.all(d1 < -eps):
        return False
    n1 = np.cross(t1[1] - t1[0], t1[2] - t1[0])
    d2 = (t2 - t1[0]) @ n1
    if np.all(d2 > eps) or np.all(d2 < -eps):
        return False
    # coplanar case: project to dominant plane and run 2D overlap
    if np.all(np.abs(d1) <= eps) and np.all(np.abs(d2) <= eps):
        axis = int(np.argmax(np.abs(n1)))
        keep = [k for k in range(3) if k != axis]
        return _tri_tri_overlap_2d(t1[:, keep], t2[:, keep])
    seg1 = _plane_cross_segment(t1, d1)
    seg2 = _plane_cross_segment(t2, d2)
    if seg1 is None or seg2 is None:
        return False
    # both segments lie on the intersection line of the two planes
    direction = np.cross(n1, n2)
    nrm = np.linalg.norm(direction)
    if nrm <= eps:
        return False
    direction /= nrm
    s1 = sorted([seg1[0] @ direction, seg1[1] @ direction])
    s2 = sorted([seg2[0] @ direction, seg2[1] @ direction])
    return s1[0] <= s2[1] + eps and s2[0] <= s1[1] + eps


def _plane_cross_segment(tri, dist, eps=1e-12):
    """Segment where `tri` crosses the other triangle's plane (dist = signed distances)."""
    pts = []
    for i in range(3):
        j = (i + 1) % 3
        di, dj = dist[i], dist[j]
        if abs(di) <= eps:
            pts.append(tri[i])
        if (di > eps and dj < -eps) or (di < -eps and dj > eps):
            t = di / (di - dj)
            pts.append(tri[i] + t * (tri[j] - tri[i]))
    if len(pts) < 2:
        return None
    return pts[0], pts[1]


def _tri_tri_overlap_2d(t1, t2) -> bool:
    def edges(t):
        return [(t[i], t[(i + 1) % 3]) for i in range(3)]

    def seg_int(p1, p2, p3, p4):
        d1 = np.cross(p2 - p1, p3 - p1)
        d2 = np.cross(p2 - p1, p4 - p1)
        d3 = np.cross(p4 - p3, p1 - p3)
        d4 = np.cross(p4 - p3, p2 - p3)
        return (d1 * d2 < 0) and (d3 * d4 < 0)

    for e1 in edges(t1):
        for e2 in edges(t2):
            if seg_int(e1[0], e1[1], e2[0], e2[1]):
                return True

    def inside(p, t):
        s = [np.cross(t[(i + 1) % 3] - t[i], p - t[i]) for i in range(3)]
        return all(x > 0 for x in s) or all(x < 0 for x in s)

    return inside(t1[0], t2) or inside(t2[0], t1)


def point_in_mesh(point, mesh: TriangleMesh) -> bool:
    """Generalized winding number test (van Oosterom-Strackee solid angles)."""
    return winding_number(np.asarray(point, dtype=np.float64)[None, :], mesh)[0] > 0.5


def winding_number(points, mesh: TriangleMesh):
    """Winding numbers of `points` (n,3) w.r.t. the closed surface; ~1 inside, ~0 outside."""
    c = mesh.triangle_corners
    w = np.zeros(len(points))
    # chunk over triangles to bound memory
    step = max(1, 2_000_000 // max(1, len(points)))
    for start in range(0, mesh.n_triangles, step):
        t = c[start : start + step]
        a = t[None, :, 0, :] - points[:, None, :]
        b = t[None, :, 1, :] - points[:, None, :]
        cc = t[None, :, 2, :] - points[:, None, :]
        la = np.linalg.norm(a, axis=2)
        lb = np.linalg.norm(b, axis=2)
        lc = np.linalg.norm(cc, axis=2)
        numer = np.einsum("ptk,ptk->pt", a, np.cross(b, cc))
        denom = la * lb * lc + np.einsum("ptk,ptk->pt", a, b) * lc
        denom += np.einsum("ptk,ptk->pt", b, cc) * la + np.einsum("ptk,ptk->pt", a, cc) * lb
        w += 2.0 * np.arctan2(numer, denom)
    return w / (4.0 * np.pi)
