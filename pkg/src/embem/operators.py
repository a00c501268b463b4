"""Galerkin assembly of the electric/magnetic boundary operators and potentials.

All Galerkin matrices use the twisted pairing <a, b> = int a . (n x b) dS and
the convention  K[i, j] = <K psi_j, phi_i>.  With the Dirichlet trace
gamma_D u = u x n this reduces to

    S[i, j] = int int G(x,y) [ -ik phi_i(x).psi_j(y) + (i/k) div phi_i div psi_j ]
    C[i, j] = - int int grad_x G(x,y) . (psi_j(y) x phi_i(x))

(principal value on the diagonal; the +-I/2 jump terms are separate mass
matrices added by the system builder).  Both spaces are represented on the
barycentric refinement, so every pair of panels lives on one common mesh and
adjacency is classified exactly by shared vertex ids.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import (
    AssemblyError,
    CoincidentPoints,
    InvalidParameter,
    PointTooClose,
    SpaceMismatch,
)
from .quadrature import gauss_rule, singular_rule
from .spaces import FunctionSpace

REGULAR_ORDER = 4
NEAR_ORDER = 6
FAR_ORDER = 2
SINGULAR_ORDER = 4
NEAR_THRESHOLD = 0.5  # x max element diameter: upgrade to NEAR_ORDER
FAR_THRESHOLD = 2.0  # x max element diameter: downgrade to FAR_ORDER

_diag_cache: dict = {}


def set_thread_cap():
    """Apply the SOLVER_THREADS env cap to numba's thread pool."""
    cap = os.environ.get("SOLVER_THREADS")
    if cap and kernels.backend_name == "numba":
        import numba

        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))


@dataclass(frozen=True)
class Medium:
    """Homogeneous isotropic medium: wavenumber and relative permeability."""

    k: complex
    mu: complex = 1.0

    def __post_init__(self):
        if self.k == 0 or self.k.imag < -1e-15:
            raise InvalidParameter("wavenumber must be nonzero with Im(k) >= 0")
        if self.mu == 0:
            raise InvalidParameter("permeability must be nonzero")

    @classmethod
    def from_refractive_index(cls, n: complex, k_e: float, mu: complex = 1.0) -> "Medium":
        return cls(k=complex(n) * k_e, mu=mu)


def green(x, y, k) -> complex:
    """Helmholtz kernel exp(ik|x-y|) / (4 pi |x-y|)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    r = np.linalg.norm(x - y, axis=-1)
    if np.any(r == 0.0):
        raise CoincidentPoints("green(x, y) requires x != y")
    val = np.exp(1j * k * r) / (4.0 * np.pi * r)
    return complex(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class OperatorBlock:
    """Dense (or sparse, for masses) Galerkin block plus metadata."""

    matrix: object
    kind: str  # "S" | "C" | "mass"
    medium: Medium = None
    target: int = None  # test-side scatterer m
    source: int = None  # trial-side scatterer l


class _MeshData:
    """Precomputed per-mesh arrays handed to the hot kernels."""

    def __init__(self, mesh, regular_order, near_order, far_order):
        corners = np.ascontiguousarray(mesh.triangle_corners)
        self.corners = corners
        self.areas = np.ascontiguousarray(mesh.areas)
        self.centroids = np.ascontiguousarray(mesh.centroids)
        self.radii = np.ascontiguousarray(
            np.linalg.norm(corners - self.centroids[:, None, :], axis=2).max(axis=1)
        )
        self.diam = np.ascontiguousarray(mesh.edge_lengths.max(axis=1))
        self.verts = np.ascontiguousarray(mesh.triangles)
        self.bdiv = np.ascontiguousarray(mesh.edge_lengths / mesh.areas[:, None])
        self.tables = {}
        for name, order in (("reg", regular_order), ("near", near_order), ("far", far_order)):
            rule = gauss_rule(order)
            pts = np.einsum("qk,tkc->tqc", rule.points, corners)
            nq = len(rule.weights)
            bas = np.empty((mesh.n_triangles, nq, 3, 3))
            L = mesh.edge_lengths  # (nt, 3)
            for a in range(3):
                scale = L[:, a] / (2.0 * mesh.areas)
                bas[:, :, a, :] = scale[:, None, None] * (pts - corners[:, None, a, :])
            self.tables[name] = (
                np.ascontiguousarray(pts),
                np.ascontiguousarray(bas),
                np.ascontiguousarray(rule.weights),
            )


def _mesh_data(
    mesh, regular_order=REGULAR_ORDER, near_order=NEAR_ORDER, far_order=FAR_ORDER
) -> _MeshData:
    key = (regular_order, near_order, far_order)
    cache = getattr(mesh, "_embem_kernel_data", None)
    if cache is None:
        cache = {}
        setattr(mesh, "_embem_kernel_data", cache)
    if key not in cache:
        cache[key] = _MeshData(mesh, regular_order, near_order, far_order)
    return cache[key]


def assemble_pair_blocks(
    mesh_test,
    mesh_trial,
    k: complex,
    combos,
    *,
    same_mesh: bool,
    regular_order: int = REGULAR_ORDER,
    near_order: int = NEAR_ORDER,
    far_order: int = FAR_ORDER,
    singular_order: int = SINGULAR_ORDER,
    chunk: int = 32,
    symmetric: bool = None,
):
    """Assemble several (kind, Q_test, Q_trial) Galerkin blocks in one sweep.

    kind is "S" or "C"; Q matrices are slot-coefficient maps of the spaces on
    the given assembly meshes.  Returns one dense complex matrix per combo.
    Same-mesh assemblies exploit the complex symmetry of the local kernel
    matrices by default (symmetric=False forces the full pair sweep).
    """
    set_thread_cap()
    if symmetric is None:
        symmetric = same_mesh
    symmetric = bool(symmetric and same_mesh)
    da = _mesh_data(mesh_test, regular_order, near_order, far_order)
    db = _mesh_data(mesh_trial, regular_order, near_order, far_order)
    sr_c = singular_rule("coincident", singular_order)
    sr_e = singular_rule("edge", singular_order)
    sr_v = singular_rule("vertex", singular_order)
    nta, ntb = mesh_test.n_triangles, mesh_trial.n_triangles
    outs = [np.zeros((Qt.shape[1], Qr.shape[1]), dtype=np.complex128) for _, Qt, Qr in combos]
    trial_T = [sp.csr_matrix(Qr.T) for _, _, Qr in combos]
    k = complex(k)
    pa_reg, ba_reg, w_reg = da.tables["reg"]
    pa_near, ba_near, w_near = da.tables["near"]
    pa_far, ba_far, w_far = da.tables["far"]
    pb_reg, bb_reg, _ = db.tables["reg"]
    pb_near, bb_near, _ = db.tables["near"]
    pb_far, bb_far, _ = db.tables["far"]
    test_T = [sp.csr_matrix(Qt.T) for _, Qt, _ in combos] if symmetric else None
    for c0 in range(0, nta, chunk):
        c1 = min(nta, c0 + chunk)
        nrows = 3 * (c1 - c0)
        # trial-major (transposed) kernel blocks; in the same-mesh case only
        # trial >= test pairs are computed (the local matrices are complex
        # symmetric), and the strict mirror is added through a second sandwich
        KG = np.zeros((3 * ntb, nrows), dtype=np.complex128)
        Kdiv = np.zeros_like(KG)
        KC = np.zeros_like(KG)
        kernels.pair_kernels_chunk(
            c0, c1, k,
            da.corners, da.areas, da.centroids, da.radii, da.diam, da.verts,
            pa_reg, ba_reg, pa_near, ba_near, pa_far, ba_far, da.bdiv,
            db.corners, db.areas, db.centroids, db.radii, db.diam, db.verts,
            pb_reg, bb_reg, pb_near, bb_near, pb_far, bb_far, db.bdiv,
            w_reg, w_near, w_far, same_mesh, symmetric,
            sr_c.bx, sr_c.by, sr_c.weights,
            sr_e.bx, sr_e.by, sr_e.weights,
            sr_v.bx, sr_v.by, sr_v.weights,
            KG, Kdiv, KC,
        )
        KS_T = (-1j * k) * KG + (1j / k) * Kdiv
        KC_T = -KC
        if symmetric:
            strict = [_strip_diag_pairs(K, c0, c1) for K in (KS_T, KC_T)]
        for idx, (out, (kind, Qt, Qr), QrT) in enumerate(zip(outs, combos, trial_T)):
            K_T = KS_T if kind == "S" else KC_T
            B = QrT @ K_T  # (n_trial, nrows)
            out += Qt[3 * c0 : 3 * c1].T @ np.ascontiguousarray(B.T)
            if symmetric:
                K_strict = strict[0] if kind == "S" else strict[1]
                B2 = test_T[idx] @ K_strict  # (n_test, nrows)
                out += (Qr[3 * c0 : 3 * c1].T @ np.ascontiguousarray(B2.T)).T
    for out in outs:
        if not np.all(np.isfinite(out)):
            raise AssemblyError("non-finite entry in assembled block")
    return outs


def _strip_diag_pairs(K_T, c0, c1):
    """Copy of a chunk kernel block with the coincident-pair 3x3 blocks zeroed."""
    out = K_T.copy()
    for e in range(c0, c1):
        out[3 * e : 3 * e + 3, 3 * (e - c0) : 3 * (e - c0) + 3] = 0.0
    return out


def _check_same_boundary(test: FunctionSpace, trial: FunctionSpace):
    if test.refinement.mesh is not trial.refinement.mesh and test.mesh is not trial.mesh:
        raise SpaceMismatch("spaces live on different scatterer boundaries")


def assemble_S(test: FunctionSpace, trial: FunctionSpace, medium: Medium, **opts) -> OperatorBlock:
    """Electric boundary operator tested through the twisted pairing."""
    same = test.refinement.mesh is trial.refinement.mesh
    (mat,) = assemble_pair_blocks(
        test.assembly_mesh, trial.assembly_mesh, medium.k,
        [("S", test.slot_matrix, trial.slot_matrix)], same_mesh=same, **opts,
    )
    return OperatorBlock(mat, "S", medium)


def assemble_C(test: FunctionSpace, trial: FunctionSpace, medium: Medium, **opts) -> OperatorBlock:
    """Magnetic boundary operator (principal value on the diagonal)."""
    same = test.refinement.mesh is trial.refinement.mesh
    (mat,) = assemble_pair_blocks(
        test.assembly_mesh, trial.assembly_mesh, medium.k,
        [("C", test.slot_matrix, trial.slot_matrix)], same_mesh=same, **opts,
    )
    return OperatorBlock(mat, "C", medium)


def assemble_mass(test: FunctionSpace, trial: FunctionSpace) -> OperatorBlock:
    """Twisted Gram matrix  M[i, j] = int psi_j . (n x phi_i) dS  (sparse)."""
    _check_same_boundary(test, trial)
    mesh = test.assembly_mesh
    W = _local_twisted_products(mesh)
    mat = sp.csr_matrix(test.slot_matrix.T @ W @ trial.slot_matrix)
    mat.eliminate_zeros()
    return OperatorBlock(mat, "mass")


def _local_twisted_products(mesh) -> sp.csr_matrix:
    """Block-diagonal W[(e,a),(e,b)] = int_e f_b . (n x f_a) dS (exact, degree 2)."""
    rule = gauss_rule(2)
    corners = mesh.triangle_corners
    nrm = mesh.normals
    areas = mesh.areas
    nt = mesh.n_triangles
    L = mesh.edge_lengths
    rows, cols, vals = [], [], []
    for a in range(3):
        sa = L[:, a] / (2 * areas)
        for b in range(3):
            sb = L[:, b] / (2 * areas)
            acc = np.zeros(nt)
            for q, w in enumerate(rule.weights):
                x = np.einsum("k,tkc->tc", rule.points[q], corners)
                fa = sa[:, None] * (x - corners[:, a])
                fb = sb[:, None] * (x - corners[:, b])
                acc += w * np.einsum("tc,tc->t", fb, np.cross(nrm, fa))
            rows.append(3 * np.arange(nt) + a)
            cols.append(3 * np.arange(nt) + b)
            vals.append(acc * 2 * areas)
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(3 * nt, 3 * nt),
    )


# -- potential evaluation ------------------------------------------------------


def _density_tables(space: FunctionSpace, coefficients, order=NEAR_ORDER):
    data = _mesh_data(space.assembly_mesh, REGULAR_ORDER, order)
    pts, bas, w = data.tables["near"]
    slots = space.slot_matrix @ np.asarray(coefficients, dtype=np.complex128)
    nt, nq = pts.shape[0], pts.shape[1]
    sl = slots.reshape(nt, 3)
    vvals = np.einsum("ta,tqac->tqc", sl, bas)
    vdivs = np.einsum("ta,ta->t", sl, data.bdiv.astype(np.complex128))[:, None] * np.ones((1, nq))
    weights = (2.0 * data.areas)[:, None] * w[None, :]
    return pts, vvals, vdivs, weights


def _check_distance(space, points):
    data = _mesh_data(space.assembly_mesh)
    d = np.linalg.norm(points[:, None, :] - data.centroids[None, :, :], axis=2) - data.radii
    if d.min() <= 1e-8:
        raise PointTooClose("evaluation point within 1e-8 of the surface")


def potential_E(coefficients, space: FunctionSpace, medium: Medium, points):
    """Electric potential of a discrete density at off-surface points."""
    return _potentials(coefficients, space, medium, points)[0]


def potential_H(coefficients, space: FunctionSpace, medium: Medium, points):
    """Magnetic potential (curl of the single layer) at off-surface points."""
    return _potentials(coefficients, space, medium, points)[1]


def _potentials(coefficients, space, medium, points, check=True):
    set_thread_cap()
    points = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    if check:
        _check_distance(space, points)
    pts, vvals, vdivs, weights = _density_tables(space, coefficients)
    E = np.empty((len(points), 3), dtype=np.complex128)
    H = np.empty_like(E)
    kernels.potentials_of_density(complex(medium.k), pts, vvals, vdivs, weights, points, E, H)
    return E, H


# -- binary block dump ---------------------------------------------------------

_MAGIC = b"EMBEMOP1"


def dump_block(block: OperatorBlock, path):
    """Row-major complex128 little-endian dump with a 64-byte header."""
    mat = np.asarray(
        block.matrix.toarray() if sp.issparse(block.matrix) else block.matrix,
        dtype="<c16",
    )
    kind = block.kind.encode().ljust(8)[:8]
    header = _MAGIC + struct.pack("<qq", mat.shape[0], mat.shape[1]) + kind
    header = header.ljust(64, b"\0")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(mat).tobytes())


def load_block(path) -> OperatorBlock:
    with open(path, "rb") as fh:
        header = fh.read(64)
        if header[:8] != _MAGIC:
            raise InvalidParameter("not an operator dump file")
        rows, cols = struct.unpack("<qq", header[8:24])
        kind = header[24:32].rstrip(b"\0 ").decode()
        mat = np.frombuffer(fh.read(rows * cols * 16), dtype="<c16").reshape(rows, cols)
    return OperatorBlock(mat.copy(), kind)


def clear_diag_cache():
    _diag_cache.clear()
