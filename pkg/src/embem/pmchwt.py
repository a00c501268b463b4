"""Multiple-scattering PMCHWT block system.

Unknowns per scatterer m are the coefficient pair (x_D, x_N) of the scaled
exterior traces (gamma_D E^s in RWG, (k_e/mu_e) gamma_N E^s in BC).  With the
twisted-pairing Galerkin convention of `operators`, the discrete 2x2 action of
one medium block (k, mu) on (x_D, x_N) reads

    y_D = -(k/mu) S_RR x_D + C_RB x_N
    y_N =          C_BR x_D + (mu/k) S_BB x_N

(rows ordered Dirichlet-tested-by-RWG, Neumann-tested-by-BC; this is a row
permutation of the continuous [[C, (mu/k)S], [-(k/mu)S, C]] layout).  The
twisted mass matrix per scatterer is [[0, T], [-T^T, 0]] with
T[i,j] = <BC_j, RWG_i>; its inverse needs one sparse LU of T.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, InvalidParameter, SingularMass
from .mesh import Scene
from .operators import (
    Medium,
    _diag_cache,
    assemble_mass,
    assemble_pair_blocks,
)
from .spaces import ProductSpace

BLOCK_NAMES = ("S_RR", "S_BB", "C_RB", "C_BR")


@dataclass(frozen=True)
class IncidentWave:
    """Plane wave E(x) = p exp(i k_e d.x) with transverse polarization."""

    polarization: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.polarization, dtype=np.float64)
        d = np.asarray(self.direction, dtype=np.float64)
        object.__setattr__(self, "polarization", p)
        object.__setattr__(self, "direction", d)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise InvalidParameter("direction must be a unit vector")
        if abs(float(p @ d)) > 1e-12:
            raise InvalidParameter("polarization must be orthogonal to direction")

    def field(self, points, k_e):
        phase = np.exp(1j * k_e * (np.atleast_2d(points) @ self.direction))
        return phase[:, None] * self.polarization


@dataclass
class ScatteringConfig:
    """Scene plus media and solver settings for one scattering problem."""

    exterior: Medium
    interiors: list
    scene: Scene
    tolerance: float = 1e-5
    restart: int = 20
    max_iterations: int = 2000

    def __post_init__(self):
        if self.scene.n_scatterers < 1:
            raise InvalidParameter("need at least one scatterer")
        if len(self.interiors) != self.scene.n_scatterers:
            raise InvalidParameter("one interior medium per scatterer required")
        if not (0 < self.tolerance < 1):
            raise InvalidParameter("tolerance must be in (0, 1)")
        if self.restart < 1:
            raise InvalidParameter("restart must be >= 1")


class _MediumBlocks:
    """The four Galerkin sub-blocks of one 2x2 operator block."""

    __slots__ = ("S_RR", "S_BB", "C_RB", "C_BR", "k", "mu")

    def __init__(self, mats, medium):
        self.S_RR, self.S_BB, self.C_RB, self.C_BR = mats
        self.k = complex(medium.k)
        self.mu = complex(medium.mu)

    def apply(self, x_D, x_N, counter=None):
        """4 counted matvecs: one per sub-block."""
        y_D = (-(self.k / self.mu)) * (self.S_RR @ x_D) + self.C_RB @ x_N
        y_N = self.C_BR @ x_D + (self.mu / self.k) * (self.S_BB @ x_N)
        if counter is not None:
            counter.count(4)
        return y_D, y_N

    def transposed(self, medium):
        return _MediumBlocks(
            (self.S_RR.T, self.S_BB.T, self.C_BR.T, self.C_RB.T), medium
        )


class MatvecCounter:
    """Counts applications of individual discretized boundary operators."""

    def __init__(self):
        self.total = 0

    def count(self, n=1):
        self.total += n


def _assemble_medium_blocks(space_pair, medium, opts):
    rwg, bc = space_pair
    # on one boundary C[B,R] is exactly C[R,B]^T (symmetric local kernels)
    combos = [
        ("S", rwg.slot_matrix, rwg.slot_matrix),
        ("S", bc.slot_matrix, bc.slot_matrix),
        ("C", rwg.slot_matrix, bc.slot_matrix),
    ]
    S_RR, S_BB, C_RB = assemble_pair_blocks(
        rwg.assembly_mesh, rwg.assembly_mesh, medium.k, combos, same_mesh=True, **opts
    )
    return _MediumBlocks((S_RR, S_BB, C_RB, C_RB.T.copy()), medium)


def _assemble_cross_blocks(test_pair, trial_pair, medium, opts):
    rwg_t, bc_t = test_pair
    rwg_s, bc_s = trial_pair
    combos = [
        ("S", rwg_t.slot_matrix, rwg_s.slot_matrix),
        ("S", bc_t.slot_matrix, bc_s.slot_matrix),
        ("C", rwg_t.slot_matrix, bc_s.slot_matrix),
        ("C", bc_t.slot_matrix, rwg_s.slot_matrix),
    ]
    mats = assemble_pair_blocks(
        rwg_t.assembly_mesh, rwg_s.assembly_mesh, medium.k, combos, same_mesh=False, **opts
    )
    return _MediumBlocks(mats, medium)


class BlockSystem:
    """Assembled PMCHWT system: A, its diagonal D, interior A^i, masses."""

    def __init__(self, config: ScatteringConfig, product_space, diag_int, diag_ext,
                 cross, masses, mass_lus):
        self.config = config
        self.space = product_space
        self.diag_int = diag_int  # per m: interior-medium blocks
        self.diag_ext = diag_ext  # per m: exterior-medium blocks
        self.cross = cross  # dict (m, l) -> exterior blocks
        self.masses = masses  # per m: sparse T
        self.mass_lus = mass_lus

    @property
    def n_scatterers(self):
        return self.space.n_scatterers

    @property
    def dimension(self):
        return self.space.dimension

    # -- block actions ------------------------------------------------------

    def _split(self, x, m):
        return self.space.block(x, m, 0), self.space.block(x, m, 1)

    def apply_A(self, x, counter=None):
        """Full PMCHWT operator: 4M(M+1) counted matvecs per application."""
        y = np.zeros_like(x)
        M = self.n_scatterers
        for m in range(M):
            acc_D = np.zeros(self.space.dof_counts[m], dtype=np.complex128)
            acc_N = acc_D.copy()
            for ell in range(M):
                x_D, x_N = self._split(x, ell)
                if ell == m:
                    d1, n1 = self.diag_ext[m].apply(x_D, x_N, counter)
                    d2, n2 = self.diag_int[m].apply(x_D, x_N, counter)
                    acc_D += d1 + d2
                    acc_N += n1 + n2
                else:
                    d1, n1 = self.cross[(m, ell)].apply(x_D, x_N, counter)
                    acc_D += d1
                    acc_N += n1
            self.space.block(y, m, 0)[:] = acc_D
            self.space.block(y, m, 1)[:] = acc_N
        return y

    def apply_D(self, x, counter=None):
        """Diagonal (self-interaction) part: 8M counted matvecs."""
        y = np.zeros_like(x)
        for m in range(self.n_scatterers):
            x_D, x_N = self._split(x, m)
            d1, n1 = self.diag_ext[m].apply(x_D, x_N, counter)
            d2, n2 = self.diag_int[m].apply(x_D, x_N, counter)
            self.space.block(y, m, 0)[:] = d1 + d2
            self.space.block(y, m, 1)[:] = n1 + n2
        return y

    def apply_Ai(self, x, counter=None):
        """Block-diagonal interior operator (right-hand-side assembly)."""
        y = np.zeros_like(x)
        for m in range(self.n_scatterers):
            x_D, x_N = self._split(x, m)
            d, n = self.diag_int[m].apply(x_D, x_N, counter)
            self.space.block(y, m, 0)[:] = d
            self.space.block(y, m, 1)[:] = n
        return y

    def apply_Minv(self, x):
        """Inverse twisted mass (not counted as matvecs)."""
        y = np.empty_like(x)
        for m in range(self.n_scatterers):
            w_D, w_N = self._split(x, m)
            lu = self.mass_lus[m]
            self.space.block(y, m, 0)[:] = -lu.solve(w_N, trans="T")
            self.space.block(y, m, 1)[:] = lu.solve(w_D)
        return y

    def apply_M(self, x):
        y = np.empty_like(x)
        for m in range(self.n_scatterers):
            x_D, x_N = self._split(x, m)
            T = self.masses[m]
            self.space.block(y, m, 0)[:] = T @ x_N
            self.space.block(y, m, 1)[:] = -(T.T @ x_D)
        return y

    # -- dense views (diagnostics on small systems) ---------------------------

    def dense_A(self):
        return _dense_from_apply(self.apply_A, self.dimension)

    def dense_Ai(self):
        return _dense_from_apply(self.apply_Ai, self.dimension)

    def dense_M(self):
        blocks = []
        for m in range(self.n_scatterers):
            T = self.masses[m]
            z = sp.csr_matrix(T.shape, dtype=np.complex128)
            blocks.append(sp.bmat([[z, T], [-T.T, z]]))
        return sp.block_diag(blocks).toarray()


def _dense_from_apply(apply_fn, n):
    out = np.empty((n, n), dtype=np.complex128)
    e = np.zeros(n, dtype=np.complex128)
    for j in range(n):
        e[j] = 1.0
        out[:, j] = apply_fn(e)
        e[j] = 0.0
    return out


def assemble_system(config: ScatteringConfig, product_space=None, **assembly_opts) -> BlockSystem:
    """Assemble all PMCHWT blocks and factorize the mass matrices.

    Self-interaction blocks of identical (translated) particles are shared
    through a content-hash cache.
    """
    scene = config.scene
    if product_space is None:
        product_space = ProductSpace.build(scene.meshes)
    M = scene.n_scatterers
    opts_key = tuple(sorted(assembly_opts.items()))

    def diag_blocks(m, medium):
        key = (scene.meshes[m].content_hash(), complex(medium.k), opts_key)
        if key not in _diag_cache:
            _diag_cache[key] = _assemble_medium_blocks(
                product_space.spaces[m], medium, assembly_opts
            )
        blocks = _diag_cache[key]
        return _MediumBlocks((blocks.S_RR, blocks.S_BB, blocks.C_RB, blocks.C_BR), medium)

    diag_int = [diag_blocks(m, config.interiors[m]) for m in range(M)]
    diag_ext = [diag_blocks(m, config.exterior) for m in range(M)]
    cross = {}
    for m in range(M):
        for ell in range(m + 1, M):
            blocks = _assemble_cross_blocks(
                product_space.spaces[m], product_space.spaces[ell],
                config.exterior, assembly_opts,
            )
            cross[(m, ell)] = blocks
            cross[(ell, m)] = blocks.transposed(config.exterior)

    masses, lus = [], []
    for m in range(M):
        rwg, bc = product_space.spaces[m]
        T = assemble_mass(rwg, bc).matrix.astype(np.complex128)
        lu = spla.splu(sp.csc_matrix(T))
        cond = _condition_estimate(T, lu)
        if cond > 1e12:
            raise SingularMass(
                f"twisted mass block of scatterer {m} is numerically singular "
                f"(condition estimate {cond:.2e})"
            )
        masses.append(sp.csr_matrix(T))
        lus.append(lu)
    return BlockSystem(config, product_space, diag_int, diag_ext, cross, masses, lus)


def _condition_estimate(T, lu):
    n = T.shape[0]
    norm_T = spla.onenormest(T)
    inv_op = spla.LinearOperator(
        (n, n),
        matvec=lu.solve,
        rmatvec=lambda v: lu.solve(v, trans="H"),
        dtype=np.complex128,
    )
    return norm_T * spla.onenormest(inv_op)


def incident_moments(system: BlockSystem, wave: IncidentWave) -> np.ndarray:
    """g_j = <u_inc, phi_j> under the product pairing (see module docstring).

    g_D[i] = -(k_e/mu_e) int (d x p) e^{i k_e d.x} . RWG_i dS
    g_N[i] = -            int    p   e^{i k_e d.x} . BC_i  dS
    """
    from .operators import _mesh_data

    k_e = system.config.exterior.k
    mu_e = system.config.exterior.mu
    d = wave.direction
    p = wave.polarization
    dxp = np.cross(d, p)
    g = np.zeros(system.dimension, dtype=np.complex128)
    for m in range(system.n_scatterers):
        rwg, bc = system.space.spaces[m]
        data = _mesh_data(rwg.assembly_mesh)
        pts, bas, w = data.tables["near"]
        phase = np.exp(1j * k_e * (pts @ d))  # (nt, nq)
        wgt = (2.0 * data.areas)[:, None] * w[None, :] * phase
        for vec, space, scale, comp in (
            (dxp, rwg, -(k_e / mu_e), 0),
            (p, bc, -1.0, 1),
        ):
            sl = np.einsum("tq,tqa->ta", wgt, np.einsum("tqac,c->tqa", bas, vec))
            vals = space.slot_matrix.T @ sl.reshape(-1)
            system.space.block(g, m, comp)[:] += scale * vals
    return g


def assemble_rhs(system: BlockSystem, wave: IncidentWave) -> np.ndarray:
    """b = (I/2 - A^i) u_inc, with u_inc projected into the trial space first."""
    g = incident_moments(system, wave)
    w = system.apply_Minv(g)
    return 0.5 * g - system.apply_Ai(w)


def calderon_residual(system: BlockSystem) -> float:
    """|| P^2 - P ||_F / || P ||_F for P = I/2 + strong(A^i), single scatterer."""
    if system.n_scatterers != 1:
        raise InvalidParameter("Calderon residual is defined for a single scatterer")
    Ai = system.dense_Ai()
    Mi = system.dense_M()
    P = 0.5 * np.eye(Ai.shape[0]) + np.linalg.solve(Mi, Ai)
    R = P @ P - P
    return float(np.linalg.norm(R) / np.linalg.norm(P))


def strong_single_operators(space_pair, medium: Medium, **opts):
    """Strong forms of S and C alone: (M_BR^-1 S[B,R], M_BR^-1 C[B,R]).

    Both map RWG coefficients to RWG coefficients; used by the Calderon
    identity diagnostics (S^2 spectrum, anticommutator decay).
    """
    rwg, bc = space_pair
    combos = [
        ("S", bc.slot_matrix, rwg.slot_matrix),
        ("C", bc.slot_matrix, rwg.slot_matrix),
    ]
    S_BR, C_BR = assemble_pair_blocks(
        rwg.assembly_mesh, rwg.assembly_mesh, medium.k, combos, same_mesh=True, **opts
    )
    M_BR = assemble_mass(bc, rwg).matrix.toarray().astype(np.complex128)
    return np.linalg.solve(M_BR, S_BR), np.linalg.solve(M_BR, C_BR)
