"""Div-conforming trial/test spaces: RWG on the primal mesh, BC on the dual.

Both spaces are represented on the barycentric refinement so that Galerkin
assembly always pairs triangles of one common mesh:

  * a *slot* is one (refined element, local edge) pair; the unsigned local
    basis on element (V0, V1, V2) for the edge opposite vertex a is
    f_a(x) = L_a / (2 A) * (x - V_a)  with  div f_a = L_a / A;
  * a global RWG dof on a refined interior edge assigns +1 to the slot of the
    lower-index incident element and -1 to the other (flux continuity);
  * every space is a sparse matrix of slot coefficients, so Galerkin blocks
    are Q_test^T K_local Q_trial for any space combination.

The classical RWG functions of the primal mesh restrict exactly to this
representation (they are Raviart-Thomas fields on each refined child; the
slot coefficient is the outward flux density of the function at the child
edge midpoint).

Buffa-Christiansen functions are built edge by edge from their defining
current pattern: a unit transport across the primal edge (split between the
two adjacent triangles) plus counter-rotating vortices around the two edge
endpoints whose spoke weights decrease linearly with the angular distance
from the edge, scaled by the vertex valences.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import OutOfSupport, TopologyError
from .mesh import BarycentricRefinement, TriangleMesh, barycentric_refine

_CORRUPT_BC_FOR_TESTS = False  # test hook: breaks the BC transport term


class FunctionSpace:
    """A finite-dimensional div-conforming tangential vector space."""

    def __init__(self, kind, mesh, refinement, coeffs, slot_matrix):
        self.kind = kind  # "RWG" | "BC"
        self.mesh = mesh  # primal mesh
        self.refinement = refinement
        self.coeffs = coeffs  # (n_bary_edges, n_dofs) global refined-RWG coefficients
        self.slot_matrix = slot_matrix  # (3 * n_bary_elements, n_dofs)

    @property
    def n_dofs(self) -> int:
        return self.coeffs.shape[1]

    @property
    def assembly_mesh(self) -> TriangleMesh:
        return self.refinement.mesh

    def evaluate_basis(self, dof, triangle, point):
        """Value and surface divergence of one basis function.

        For RWG the triangle index refers to the primal mesh, for BC to the
        barycentric refinement; `point` is barycentric in that triangle.
        """
        point = np.asarray(point, dtype=np.float64)
        if not (0 <= dof < self.n_dofs):
            raise OutOfSupport(f"dof {dof} out of range")
        if self.kind == "RWG":
            mesh = self.mesh
            tp, tm = mesh.edge_triangles[dof]
            if triangle not in (tp, tm):
                raise OutOfSupport(f"RWG dof {dof} not supported on triangle {triangle}")
            sign = 1.0 if triangle == tp else -1.0
            a = int(mesh.edge_local[dof, 0 if triangle == tp else 1])
            val, div = _local_basis(mesh, triangle, a, point)
            return sign * val, sign * div
        # BC: sum of slot contributions on the refined element
        mesh = self.refinement.mesh
        col = self.slot_matrix[3 * triangle : 3 * triangle + 3, dof].toarray().ravel()
        if not np.any(col):
            raise OutOfSupport(f"BC dof {dof} not supported on refined triangle {triangle}")
        val = np.zeros(3)
        div = 0.0
        for a in range(3):
            if col[a] != 0.0:
                v, d = _local_basis(mesh, triangle, a, point)
                val += col[a] * v
                div += col[a] * d
        return val, div


def _local_basis(mesh, elem, a, bary):
    corners = mesh.vertices[mesh.triangles[elem]]
    x = bary @ corners
    L = np.linalg.norm(corners[(a + 1) % 3] - corners[(a + 2) % 3])
    area = 0.5 * np.linalg.norm(
        np.cross(corners[1] - corners[0], corners[2] - corners[0])
    )
    return L / (2 * area) * (x - corners[a]), L / area


def _edge_lookup(mesh: TriangleMesh):
    """vectorized (v_lo, v_hi) -> edge id map."""
    keys = mesh.edges[:, 0] * mesh.n_vertices + mesh.edges[:, 1]
    order = np.argsort(keys)

    def lookup(a, b):
        lo, hi = (a, b) if a < b else (b, a)
        k = lo * mesh.n_vertices + hi
        i = np.searchsorted(keys[order], k)
        e = order[i]
        if keys[e] != k:
            raise TopologyError("edge not found")
        return int(e)

    return lookup


def _slot_localization(mesh: TriangleMesh) -> sp.csr_matrix:
    """(3*nt, n_edges) matrix mapping global refined-RWG dofs to signed slots."""
    nt = mesh.n_triangles
    rows = np.arange(3 * nt)
    cols = mesh.triangle_edges.ravel()
    elem = np.repeat(np.arange(nt), 3)
    signs = np.where(mesh.edge_triangles[cols, 0] == elem, 1.0, -1.0)
    return sp.csr_matrix((signs, (rows, cols)), shape=(3 * nt, mesh.n_edges))


def build_rwg(mesh: TriangleMesh, refinement: BarycentricRefinement = None) -> FunctionSpace:
    """RWG space: one dof per (interior) edge of the primal mesh."""
    if refinement is None:
        refinement = barycentric_refine(mesh)
    bary = refinement.mesh
    nd = mesh.n_edges

    # slot coefficients: outward flux density of the primal function at each
    # refined child edge midpoint
    corners = bary.triangle_corners  # (6nt, 3, 3)
    normals_b = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    normals_b /= np.linalg.norm(normals_b, axis=1)[:, None]
    parents = refinement.parent_triangle

    rows, cols, vals = [], [], []
    pc = mesh.triangle_corners
    pareas = mesh.areas
    plen = mesh.edge_lengths
    for la in range(3):  # primal local dof slot
        pe = mesh.triangle_edges[:, la]  # (nt,)
        sign = np.where(mesh.edge_triangles[pe, 0] == np.arange(mesh.n_triangles), 1.0, -1.0)
        scale = sign * plen[:, la] / (2.0 * pareas)  # (nt,)
        opp = pc[:, la]  # opposite vertex of the primal function
        for child in range(6):
            e = 6 * np.arange(mesh.n_triangles) + child
            for a in range(3):
                va = corners[e, (a + 1) % 3]
                vb = corners[e, (a + 2) % 3]
                mid = 0.5 * (va + vb)
                tangent = vb - va
                nu = np.cross(tangent, normals_b[e])  # in-plane edge normal
                nu /= np.linalg.norm(nu, axis=1)[:, None]
                # orient outward: away from the opposite child vertex
                inward = np.einsum("ij,ij->i", corners[e, a] - mid, nu) > 0
                nu[inward] *= -1.0
                flux = scale[parents[e]] * np.einsum("ij,ij->i", mid - opp[parents[e]], nu)
                rows.append(3 * e + a)
                cols.append(pe[parents[e]])
                vals.append(flux)
    Q = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(3 * bary.n_triangles, nd),
    )
    Q.eliminate_zeros()
    coeffs = _slots_to_edges(bary, Q)
    return FunctionSpace("RWG", mesh, refinement, coeffs, Q)


def _slots_to_edges(bary: TriangleMesh, Q: sp.csr_matrix) -> sp.csr_matrix:
    """Invert the localization: average the two signed slots of each edge."""
    L = _slot_localization(bary)
    return sp.csr_matrix(0.5 * (L.T @ Q))


def build_bc(mesh: TriangleMesh, refinement: BarycentricRefinement = None) -> FunctionSpace:
    """Buffa-Christiansen space: one dof per primal edge, built on the refinement."""
    if refinement is None:
        refinement = barycentric_refine(mesh)
    bary = refinement.mesh
    lookup = _edge_lookup(bary)
    mid_id = refinement.midpoint_of_edge
    cen_id = refinement.centroid_of_triangle
    tri = mesh.triangles
    bary_len = {}

    def spoke(v1, v2):
        e = lookup(v1, v2)
        if e not in bary_len:
            a, b = bary.edges[e]
            bary_len[e] = float(np.linalg.norm(bary.vertices[a] - bary.vertices[b]))
        return e, bary_len[e]

    def local_index(t, v):
        return int(np.where(tri[t] == v)[0][0])

    def add(coo, bary_edge, from_child, value):
        # +value flows out of `from_child`; sign by the global plus-element convention
        plus = bary.edge_triangles[bary_edge, 0]
        coo.append((bary_edge, value if plus == from_child else -value))

    # precompute neighbor across a coarse edge
    def neighbor(t, e):
        t1, t2 = mesh.edge_triangles[e]
        return t2 if t1 == t else t1

    vertex_valence = np.zeros(mesh.n_vertices, dtype=np.int64)
    for t in range(mesh.n_triangles):
        vertex_valence[tri[t]] += 1

    rows, cols, vals = [], [], []
    for n in range(mesh.n_edges):
        va, vb = mesh.edges[n]
        tp, tm = mesh.edge_triangles[n]
        # order so w1 -> w2 is anticlockwise in the minus triangle
        ia = local_index(tm, va)
        if tri[tm][(ia + 1) % 3] == vb:
            w1, w2 = int(va), int(vb)
        else:
            w1, w2 = int(vb), int(va)
        m_n = int(mid_id[n])
        entries = []

        # transport across the edge: w1-side child -> w2-side child in both triangles
        if not _CORRUPT_BC_FOR_TESTS:
            i1 = local_index(tm, w1)
            child_w1 = 6 * tm + 2 * i1
            child_w2 = child_w1 + 1
            e, ln = spoke(m_n, int(cen_id[tm]))
            add(entries, e, child_w1, 1.0 / (2.0 * ln))
            i2 = local_index(tp, w2)
            child_w2p = 6 * tp + 2 * i2
            child_w1p = child_w2p + 1
            e, ln = spoke(m_n, int(cen_id[tp]))
            add(entries, e, child_w1p, 1.0 / (2.0 * ln))

        # vortices around the two endpoints
        for (w, sgn, t0) in ((w1, -1.0, tm), (w2, 1.0, tp)):
            nc = int(vertex_valence[w])
            t, i = t0, local_index(t0, w)
            prev_child = 6 * t + 2 * i  # contains (w, m_n)
            k = 0
            for _ in range(nc):
                # spoke to the centroid of t
                k += 1
                cur_child = 6 * t + (2 * i + 5) % 6
                e, ln = spoke(w, int(cen_id[t]))
                wgt = sgn * (nc - k) / (2.0 * nc * ln)
                add(entries, e, prev_child, wgt)
                prev_child = cur_child
                # spoke crossing into the next coarse triangle (edge w -> v_{i+2})
                ce = mesh.triangle_edges[t, (i + 1) % 3]
                t_next = neighbor(t, ce)
                i_next = local_index(t_next, w)
                if t_next == t0:
                    break  # closing ray lies on the primal edge n; excluded
                k += 1
                e, ln = spoke(w, int(mid_id[ce]))
                wgt = sgn * (nc - k) / (2.0 * nc * ln)
                add(entries, e, prev_child, wgt)
                prev_child = 6 * t_next + 2 * i_next
                t, i = t_next, i_next
        acc = {}
        for e, v in entries:
            acc[e] = acc.get(e, 0.0) + v
        for e, v in acc.items():
            rows.append(e)
            cols.append(n)
            vals.append(v)
    coeffs = sp.csr_matrix(
        (vals, (rows, cols)), shape=(bary.n_edges, mesh.n_edges)
    )
    Q = sp.csr_matrix(_slot_localization(bary) @ coeffs)
    return FunctionSpace("BC", mesh, refinement, coeffs, Q)


class ProductSpace:
    """Per-scatterer (RWG, BC) pairs with scatterer-major global dof layout.

    Within scatterer m the Dirichlet block (RWG coefficients, size J_m) comes
    first, then the Neumann block (BC coefficients, size J_m).
    """

    def __init__(self, spaces):
        self.spaces = list(spaces)  # list of (rwg, bc) pairs
        self.dof_counts = [r.n_dofs for (r, b) in self.spaces]
        self.offsets = np.concatenate([[0], np.cumsum([2 * j for j in self.dof_counts])])

    @classmethod
    def build(cls, meshes):
        spaces = []
        for mesh in meshes:
            refinement = barycentric_refine(mesh)
            spaces.append((build_rwg(mesh, refinement), build_bc(mesh, refinement)))
        return cls(spaces)

    @property
    def n_scatterers(self) -> int:
        return len(self.spaces)

    @property
    def dimension(self) -> int:
        return int(self.offsets[-1])

    def global_index(self, scatterer, component, local) -> int:
        j = self.dof_counts[scatterer]
        if not (0 <= component < 2 and 0 <= local < j):
            raise OutOfSupport("invalid (component, local) pair")
        return int(self.offsets[scatterer] + component * j + local)

    def locate(self, index):
        if not (0 <= index < self.dimension):
            raise OutOfSupport("global index out of range")
        m = int(np.searchsorted(self.offsets, index, side="right") - 1)
        rel = index - self.offsets[m]
        j = self.dof_counts[m]
        return m, int(rel // j), int(rel % j)

    def block(self, vector, scatterer, component):
        """View of one (scatterer, component) block of a global vector."""
        j = self.dof_counts[scatterer]
        start = self.offsets[scatterer] + component * j
        return vector[start : start + j]
